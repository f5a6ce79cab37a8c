import { writeFileSync } from "node:fs";

import { readCorpus } from "./corpus.js";
import { formatEmbeddingCsv } from "./csv.js";
import { TokenEncoder } from "./encoder.js";
import { Pooling, pool } from "./pooling.js";

export interface EmbedJob {
  corpusPath: string;
  encoder: TokenEncoder;
  pooling: Pooling;
  maxLength: number;
  outputPath: string;
}

export interface EmbedResult {
  outputPath: string;
  nRows: number;
  dim: number;
  truncated: number;
}

/**
 * Embed every policy text and write the embedding CSV. One row per policy
 * id in corpus order; constant dimension; texts longer than maxLength
 * tokens are truncated and the count is recorded in the header comment.
 */
export async function embedCorpus(job: EmbedJob): Promise<EmbedResult> {
  if (job.maxLength < 1) throw new Error("maxLength must be >= 1");
  const corpus = readCorpus(job.corpusPath);
  const rows: Array<{ id: string; vector: number[] }> = [];
  let truncated = 0;
  for (const rec of corpus) {
    if (!rec.text.trim()) {
      throw new Error(`policy '${rec.id}': empty text after preprocessing`);
    }
    if (job.encoder.wasTruncated(rec.text, job.maxLength)) truncated += 1;
    const tokenVectors = await job.encoder.encodeTokens(rec.text, job.maxLength);
    const vector = pool(tokenVectors, job.pooling);
    if (vector.some((v) => !Number.isFinite(v))) {
      throw new Error(`policy '${rec.id}': encoder produced non-finite values`);
    }
    rows.push({ id: rec.id, vector });
  }
  const dim = rows[0].vector.length;
  for (const row of rows) {
    if (row.vector.length !== dim) {
      throw new Error(`policy '${row.id}': dimension ${row.vector.length} != ${dim}`);
    }
  }
  const csv = formatEmbeddingCsv(rows, {
    encoder: job.encoder.id,
    revision: job.encoder.revision,
    pooling: job.pooling,
    maxLength: job.maxLength,
    truncated,
  });
  writeFileSync(job.outputPath, csv, "utf-8");
  return { outputPath: job.outputPath, nRows: rows.length, dim, truncated };
}
