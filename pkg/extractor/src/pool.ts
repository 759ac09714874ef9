import type { Mention, PairRecord } from "./types.js";

/** Round every entry to 32-bit precision (the emitted storage precision). */
export function toFloat32(rows: number[][]): number[][] {
  return rows.map((row) => row.map((v) => Math.fround(v)));
}

export function meanPool(rows: number[][], indices: number[]): number[] {
  const dim = rows[0].length;
  const out = new Array<number>(dim).fill(0);
  for (const t of indices) {
    const row = rows[t];
    for (let d = 0; d < dim; d++) out[d] += row[d];
  }
  for (let d = 0; d < dim; d++) out[d] /= indices.length;
  return out;
}

/**
 * Pair vectors for one sentence: [mean(head rows); mean(tail rows)] per
 * mention, computed in float64 over the already-32-bit token rows and rounded
 * back to 32 bits for emission. Downstream consumers recomputing the mean
 * from the emitted token file therefore agree to one final rounding step.
 */
export function buildPairRecords(sentenceId: string, rows32: number[][],
                                 mentions: Mention[]): PairRecord[] {
  return mentions.map((mention, j) => {
    const head = meanPool(rows32, mention.head);
    const tail = meanPool(rows32, mention.tail);
    return {
      id: `${sentenceId}#${j}`,
      x: [...head, ...tail].map((v) => Math.fround(v)),
      labels: mention.relations,
    };
  });
}
