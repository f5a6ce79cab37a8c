export type Pooling = "mean" | "lead";

/** Collapse a [tokens x dim] matrix to one sentence vector. */
export function pool(tokenVectors: number[][], mode: Pooling): number[] {
  if (tokenVectors.length === 0) {
    throw new Error("cannot pool an empty token matrix");
  }
  if (mode === "lead") {
    return [...tokenVectors[0]];
  }
  const dim = tokenVectors[0].length;
  const out = new Array<number>(dim).fill(0);
  for (const vec of tokenVectors) {
    if (vec.length !== dim) throw new Error("ragged token matrix");
    for (let i = 0; i < dim; i++) out[i] += vec[i];
  }
  for (let i = 0; i < dim; i++) out[i] /= tokenVectors.length;
  return out;
}
