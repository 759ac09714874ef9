export { readCorpus, readRelationNames, parseSentence } from "./corpus.js";
export { createEncoder, HashEncoder } from "./encoders.js";
export type { Encoder } from "./encoders.js";
export { buildPairRecords, meanPool, toFloat32 } from "./pool.js";
export { runExtract } from "./extract.js";
export type {
  CorpusSentence,
  EmitMode,
  ExtractorConfig,
  ExtractSummary,
  Manifest,
  Mention,
  PairRecord,
  TokenRecord,
} from "./types.js";
