import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { Manifest, PairRecord, TokenRecord } from "./types.js";

export function writeJsonl(path: string, records: unknown[]): void {
  const body = records.map((r) => JSON.stringify(r)).join("\n");
  writeFileSync(path, records.length > 0 ? body + "\n" : "");
}

export function writeDataset(outDir: string, manifest: Manifest,
                             tokenRecords: TokenRecord[] | null,
                             pairsPerSplit: Map<string, PairRecord[]> | null): void {
  mkdirSync(outDir, { recursive: true });
  writeFileSync(join(outDir, "manifest.json"), JSON.stringify(manifest) + "\n");
  if (tokenRecords !== null) {
    writeJsonl(join(outDir, "tokens.jsonl"), tokenRecords);
  }
  if (pairsPerSplit !== null) {
    for (const [split, records] of pairsPerSplit) {
      writeJsonl(join(outDir, `${split}.jsonl`), records);
    }
  }
}
