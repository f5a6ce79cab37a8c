export { readCorpus, type PolicyText } from "./corpus.js";
export { pool, type Pooling } from "./pooling.js";
export {
  FakeClassifier,
  FakeEncoder,
  fnv1a,
  type TextClassifier,
  type TokenEncoder,
} from "./encoder.js";
export { formatEmbeddingCsv, formatSidecarCsv, formatNumber } from "./csv.js";
export { embedCorpus, type EmbedJob, type EmbedResult } from "./embed.js";
export { classifyCorpus, type ClassifyJob, type ClassifyResult } from "./classify.js";
export { DEFAULT_TASKS, loadLockfile, resolveTasks } from "./tasks.js";
