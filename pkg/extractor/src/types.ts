export interface Mention {
  head: number[];
  tail: number[];
  relations: number[];
}

export interface CorpusSentence {
  sentence_id: string;
  tokens: string[];
  mentions: Mention[];
  /** Optional split assignment; defaults to "train". */
  split?: string;
}

export interface TokenRecord {
  sentence_id: string;
  hidden_dim: number;
  token_embeddings: number[][];
  mentions: Mention[];
}

export interface PairRecord {
  id: string;
  x: number[];
  labels: number[];
}

export interface Manifest {
  format_version: 1;
  num_classes: number;
  embedding_dim: number;
  relation_names: string[];
  split_sizes?: Record<string, number>;
  /** Token indices are defined over the encoder's own token sequence. */
  token_index_space?: string;
}

export type EmitMode = "tokens" | "pairs" | "both";

export interface ExtractorConfig {
  corpusDir: string;
  encoderSpec: string;
  window: number;
  outDir: string;
  emit: EmitMode;
}

export interface ExtractSummary {
  sentences: number;
  emitted: number;
  droppedWindow: number;
  skippedMalformed: number;
  pairsPerSplit: Record<string, number>;
  hiddenDim: number;
}
