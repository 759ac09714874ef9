import { readFileSync } from "node:fs";
import { join } from "node:path";

import type { CorpusSentence, Mention } from "./types.js";

/** A corpus directory holds corpus.jsonl plus relations.json (name list). */
export function readRelationNames(corpusDir: string): string[] {
  const path = join(corpusDir, "relations.json");
  const names = JSON.parse(readFileSync(path, "utf-8"));
  if (!Array.isArray(names) || names.length === 0 ||
      names.some((n) => typeof n !== "string" || n.length === 0)) {
    throw new Error(`${path}: expected a non-empty array of relation names`);
  }
  if (new Set(names).size !== names.length) {
    throw new Error(`${path}: relation names must be distinct`);
  }
  return names;
}

function asIndexArray(raw: unknown, what: string): number[] {
  if (!Array.isArray(raw) || raw.length === 0) {
    throw new Error(`${what} must be a non-empty index array`);
  }
  const indices = raw.map((v) => {
    if (typeof v !== "number" || !Number.isInteger(v) || v < 0) {
      throw new Error(`${what} contains a bad index: ${JSON.stringify(v)}`);
    }
    return v;
  });
  // index sets: dedupe + sort so pooling order never depends on annotation order
  return [...new Set(indices)].sort((a, b) => a - b);
}

export function parseSentence(line: string, numClasses: number): CorpusSentence {
  const raw = JSON.parse(line);
  if (typeof raw.sentence_id !== "string" || raw.sentence_id.length === 0) {
    throw new Error("missing sentence_id");
  }
  if (!Array.isArray(raw.tokens) || raw.tokens.length === 0 ||
      raw.tokens.some((t: unknown) => typeof t !== "string")) {
    throw new Error("tokens must be a non-empty string array");
  }
  if (!Array.isArray(raw.mentions) || raw.mentions.length === 0) {
    throw new Error("mentions must be a non-empty array");
  }
  const mentions: Mention[] = raw.mentions.map((m: any, j: number) => {
    const head = asIndexArray(m?.head, `mention ${j} head`);
    const tail = asIndexArray(m?.tail, `mention ${j} tail`);
    if (!Array.isArray(m?.relations) || m.relations.length === 0) {
      throw new Error(`mention ${j} must carry at least one relation id`);
    }
    const relations = [...new Set(m.relations)].map((r) => {
      if (typeof r !== "number" || !Number.isInteger(r) || r < 0 || r >= numClasses) {
        throw new Error(`mention ${j} relation id out of range [0, ${numClasses})`);
      }
      return r;
    }).sort((a, b) => a - b);
    const maxIndex = Math.max(...head, ...tail);
    if (maxIndex >= raw.tokens.length) {
      throw new Error(`mention ${j} token index ${maxIndex} out of range ` +
        `[0, ${raw.tokens.length})`);
    }
    return { head, tail, relations };
  });
  const split = raw.split === undefined ? undefined : String(raw.split);
  return { sentence_id: raw.sentence_id, tokens: raw.tokens, mentions, split };
}

export interface CorpusReadResult {
  sentences: CorpusSentence[];
  malformed: { line: number; error: string }[];
}

export function readCorpus(corpusDir: string, numClasses: number): CorpusReadResult {
  const path = join(corpusDir, "corpus.jsonl");
  const text = readFileSync(path, "utf-8");
  const sentences: CorpusSentence[] = [];
  const malformed: { line: number; error: string }[] = [];
  text.split(/\r?\n/).forEach((line, i) => {
    if (line.trim().length === 0) return;
    try {
      sentences.push(parseSentence(line, numClasses));
    } catch (err) {
      malformed.push({ line: i + 1, error: (err as Error).message });
    }
  });
  return { sentences, malformed };
}
