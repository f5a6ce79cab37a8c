/** CSV shapes consumed by the prediction pipeline's loaders. */

export function formatNumber(v: number): string {
  if (!Number.isFinite(v)) throw new Error(`non-finite value ${v}`);
  return v.toFixed(8);
}

export interface EmbeddingHeaderInfo {
  encoder: string;
  revision: string;
  pooling: string;
  maxLength: number;
  truncated: number;
}

/**
 * Embedding CSV: a single `#` comment line recording provenance, then
 * `policy_id,e0,...,e{d-1}` with one row per policy.
 */
export function formatEmbeddingCsv(
  rows: Array<{ id: string; vector: number[] }>,
  info: EmbeddingHeaderInfo,
): string {
  if (rows.length === 0) throw new Error("no rows to write");
  const dim = rows[0].vector.length;
  const lines = [
    `# encoder=${info.encoder} revision=${info.revision} pooling=${info.pooling} max_length=${info.maxLength} truncated=${info.truncated}`,
    ["policy_id", ...Array.from({ length: dim }, (_, i) => `e${i}`)].join(","),
  ];
  for (const row of rows) {
    if (row.vector.length !== dim) {
      throw new Error(`row ${row.id} has dimension ${row.vector.length}, expected ${dim}`);
    }
    lines.push([row.id, ...row.vector.map(formatNumber)].join(","));
  }
  return lines.join("\n") + "\n";
}

export interface SidecarColumns {
  /** ordered columns after policy_id, all prefixed cb_ */
  columns: string[];
  rows: Array<{ id: string; values: number[] }>;
}

export function formatSidecarCsv(data: SidecarColumns): string {
  const lines = [["policy_id", ...data.columns].join(",")];
  for (const row of data.rows) {
    if (row.values.length !== data.columns.length) {
      throw new Error(`row ${row.id} has ${row.values.length} cells, expected ${data.columns.length}`);
    }
    lines.push([row.id, ...row.values.map(formatNumber)].join(","));
  }
  return lines.join("\n") + "\n";
}
