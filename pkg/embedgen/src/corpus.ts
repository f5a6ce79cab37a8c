import { readFileSync } from "node:fs";

export interface PolicyText {
  id: string;
  text: string;
}

/**
 * Read the policy corpus (JSONL, one object per line) and return the id/text
 * pairs in file order. Only the fields this tool needs are extracted; the
 * rest of the record schema belongs to the pipeline that consumes our CSVs.
 */
export function readCorpus(path: string): PolicyText[] {
  const raw = readFileSync(path, "utf-8");
  const out: PolicyText[] = [];
  const seen = new Set<string>();
  raw.split("\n").forEach((line, index) => {
    if (!line.trim()) return;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new Error(`line ${index + 1}: malformed JSON`);
    }
    const rec = obj as Record<string, unknown>;
    if (typeof rec.id !== "string" || typeof rec.text !== "string") {
      throw new Error(`line ${index + 1}: record needs string 'id' and 'text' fields`);
    }
    if (seen.has(rec.id)) {
      throw new Error(`line ${index + 1}: duplicate id '${rec.id}'`);
    }
    seen.add(rec.id);
    out.push({ id: rec.id, text: rec.text });
  });
  if (out.length === 0) throw new Error(`corpus ${path} contains no records`);
  return out;
}
