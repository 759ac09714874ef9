import { readCorpus, readRelationNames } from "./corpus.js";
import { createEncoder } from "./encoders.js";
import { writeDataset } from "./emit.js";
import { buildPairRecords, toFloat32 } from "./pool.js";
import type {
  ExtractorConfig,
  ExtractSummary,
  Manifest,
  PairRecord,
  TokenRecord,
} from "./types.js";

function log(message: string): void {
  process.stderr.write(`[extract] ${message}\n`);
}

export async function runExtract(config: ExtractorConfig): Promise<ExtractSummary> {
  if (!Number.isInteger(config.window) || config.window < 1) {
    throw new Error(`context window must be a positive integer, got ${config.window}`);
  }
  const relationNames = readRelationNames(config.corpusDir);
  const encoder = createEncoder(config.encoderSpec);
  const { sentences, malformed } = readCorpus(config.corpusDir, relationNames.length);
  for (const bad of malformed) {
    log(`corpus.jsonl:${bad.line}: skipped malformed record: ${bad.error}`);
  }
  if (sentences.length === 0) {
    throw new Error(
      `no usable corpus records (${malformed.length} malformed, 0 parsed)`);
  }

  const tokenRecords: TokenRecord[] = [];
  const pairsPerSplit = new Map<string, PairRecord[]>();
  let droppedWindow = 0;
  let hiddenDim = 0;

  for (const sentence of sentences) {
    const maxMentionIndex = Math.max(
      ...sentence.mentions.flatMap((m) => [...m.head, ...m.tail]));
    if (maxMentionIndex >= config.window) {
      droppedWindow += 1;
      log(`${sentence.sentence_id}: dropped, mention index ${maxMentionIndex} ` +
        `exceeds context window ${config.window}`);
      continue;
    }
    const tokens = sentence.tokens.slice(0, config.window);
    const rows32 = toFloat32(await encoder.encode(tokens));
    hiddenDim = rows32[0].length;
    if (config.emit !== "pairs") {
      tokenRecords.push({
        sentence_id: sentence.sentence_id,
        hidden_dim: hiddenDim,
        token_embeddings: rows32,
        mentions: sentence.mentions,
      });
    }
    if (config.emit !== "tokens") {
      const split = sentence.split ?? "train";
      const bucket = pairsPerSplit.get(split) ?? [];
      bucket.push(...buildPairRecords(sentence.sentence_id, rows32, sentence.mentions));
      pairsPerSplit.set(split, bucket);
    }
  }

  if (tokenRecords.length === 0 && pairsPerSplit.size === 0) {
    throw new Error("every corpus record was dropped or malformed; nothing to emit");
  }

  const splitSizes: Record<string, number> = {};
  for (const [split, records] of pairsPerSplit) splitSizes[split] = records.length;
  const manifest: Manifest = {
    format_version: 1,
    num_classes: relationNames.length,
    embedding_dim: 2 * hiddenDim,
    relation_names: relationNames,
    ...(pairsPerSplit.size > 0 ? { split_sizes: splitSizes } : {}),
    token_index_space: "encoder token sequence (corpus 'tokens' order)",
  };
  writeDataset(config.outDir, manifest,
               config.emit !== "pairs" ? tokenRecords : null,
               config.emit !== "tokens" ? pairsPerSplit : null);

  const summary: ExtractSummary = {
    sentences: sentences.length,
    emitted: sentences.length - droppedWindow,
    droppedWindow,
    skippedMalformed: malformed.length,
    pairsPerSplit: splitSizes,
    hiddenDim,
  };
  log(`done: ${summary.emitted}/${summary.sentences} sentences emitted, ` +
    `${droppedWindow} dropped (window), ${malformed.length} malformed`);
  return summary;
}
