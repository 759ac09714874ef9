/** Frozen encoders mapping a token sequence to per-token embedding rows.
 *
 * Two backends:
 *  - "hash:<h>[:seed]"  deterministic offline featurizer: each token string is
 *    hashed into a PRNG stream that yields its h-dimensional row. Identical
 *    tokens get identical rows; no model download, bit-stable across runs.
 *    Meant for tests and plumbing checks, not for linguistic quality.
 *  - "hf:<model-id>"    a real pretrained encoder via @huggingface/transformers
 *    (install separately); runs one feature-extraction forward pass per
 *    sentence with the tokens joined by spaces.
 */

export interface Encoder {
  readonly name: string;
  readonly hiddenDim: number;
  encode(tokens: string[]): Promise<number[][]>;
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class HashEncoder implements Encoder {
  readonly name: string;
  readonly hiddenDim: number;
  private readonly seed: number;
  private readonly cache = new Map<string, number[]>();

  constructor(hiddenDim: number, seed = 0) {
    if (!Number.isInteger(hiddenDim) || hiddenDim < 1) {
      throw new Error(`hash encoder needs a positive hidden dim, got ${hiddenDim}`);
    }
    this.hiddenDim = hiddenDim;
    this.seed = seed >>> 0;
    this.name = `hash:${hiddenDim}:${this.seed}`;
  }

  private row(token: string): number[] {
    let cached = this.cache.get(token);
    if (cached === undefined) {
      const draw = mulberry32(fnv1a(token) ^ Math.imul(this.seed + 1, 0x9e3779b9));
      cached = Array.from({ length: this.hiddenDim }, () => 2.0 * draw() - 1.0);
      this.cache.set(token, cached);
    }
    return cached;
  }

  async encode(tokens: string[]): Promise<number[][]> {
    return tokens.map((t) => [...this.row(t)]);
  }
}

class TransformersEncoder implements Encoder {
  readonly name: string;
  hiddenDim = 0;
  private pipe: any = null;

  constructor(private readonly modelId: string) {
    this.name = `hf:${modelId}`;
  }

  private async load(): Promise<any> {
    if (this.pipe === null) {
      let mod: any;
      try {
        mod = await import("@huggingface/transformers" as string);
      } catch {
        throw new Error(
          "encoder backend '@huggingface/transformers' is not installed; " +
          "run: npm install @huggingface/transformers");
      }
      this.pipe = await mod.pipeline("feature-extraction", this.modelId);
    }
    return this.pipe;
  }

  async encode(tokens: string[]): Promise<number[][]> {
    const pipe = await this.load();
    const output = await pipe(tokens.join(" "), { pooling: "none" });
    const [numTokens, hidden] = output.dims.slice(-2);
    this.hiddenDim = hidden;
    const data = Array.from(output.data as Float32Array);
    const rows: number[][] = [];
    for (let t = 0; t < numTokens; t++) {
      rows.push(data.slice(t * hidden, (t + 1) * hidden));
    }
    return rows;
  }
}

export function createEncoder(spec: string): Encoder {
  const parts = spec.split(":");
  if (parts[0] === "hash") {
    if (parts.length < 2 || parts.length > 3) {
      throw new Error(`bad hash encoder spec ${spec}; use hash:<dim>[:seed]`);
    }
    return new HashEncoder(Number(parts[1]), parts.length === 3 ? Number(parts[2]) : 0);
  }
  if (parts[0] === "hf") {
    if (parts.length < 2 || parts[1].length === 0) {
      throw new Error(`bad hf encoder spec ${spec}; use hf:<model-id>`);
    }
    return new TransformersEncoder(parts.slice(1).join(":"));
  }
  throw new Error(`unknown encoder ${spec}; known backends: hash:<dim>[:seed], hf:<model-id>`);
}
