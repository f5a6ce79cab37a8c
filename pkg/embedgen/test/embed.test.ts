import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { embedCorpus } from "../src/embed.js";
import { FakeEncoder } from "../src/encoder.js";
import { pool } from "../src/pooling.js";

function setup(texts: string[]): { corpus: string; out: string } {
  const dir = mkdtempSync(join(tmpdir(), "embedgen-"));
  const corpus = join(dir, "corpus.jsonl");
  writeFileSync(
    corpus,
    texts.map((t, i) => JSON.stringify({ id: `p${i}`, text: t })).join("\n") + "\n",
  );
  return { corpus, out: join(dir, "emb.csv") };
}

describe("pooling", () => {
  it("mean pooling averages token vectors", () => {
    expect(pool([[1, 3], [3, 5]], "mean")).toEqual([2, 4]);
  });

  it("lead pooling returns the first token vector", () => {
    expect(pool([[1, 3], [3, 5]], "lead")).toEqual([1, 3]);
  });

  it("rejects an empty matrix", () => {
    expect(() => pool([], "mean")).toThrow(/empty/);
  });
});

describe("embedCorpus", () => {
  it("writes one row per policy with a constant dimension", async () => {
    const { corpus, out } = setup(["climate policy text", "another energy document", "short"]);
    const result = await embedCorpus({
      corpusPath: corpus,
      encoder: new FakeEncoder("fake-enc", "0", 8),
      pooling: "mean",
      maxLength: 64,
      outputPath: out,
    });
    expect(result.nRows).toBe(3);
    expect(result.dim).toBe(8);
    const lines = readFileSync(out, "utf-8").trim().split("\n");
    expect(lines[0]).toMatch(/^# encoder=fake-enc .*pooling=mean max_length=64 truncated=0$/);
    expect(lines[1]).toBe("policy_id," + Array.from({ length: 8 }, (_, i) => `e${i}`).join(","));
    expect(lines).toHaveLength(2 + 3);
    expect(lines[2].split(",")[0]).toBe("p0");
    for (const line of lines.slice(2)) {
      expect(line.split(",")).toHaveLength(9);
    }
  });

  it("is deterministic: identical texts give identical vectors", async () => {
    const { corpus, out } = setup(["same text here", "same text here"]);
    await embedCorpus({
      corpusPath: corpus,
      encoder: new FakeEncoder(),
      pooling: "mean",
      maxLength: 32,
      outputPath: out,
    });
    const lines = readFileSync(out, "utf-8").trim().split("\n");
    const v1 = lines[2].split(",").slice(1);
    const v2 = lines[3].split(",").slice(1);
    expect(v1).toEqual(v2);
  });

  it("re-running produces byte-identical output", async () => {
    const { corpus, out } = setup(["alpha beta", "gamma delta epsilon"]);
    const job = {
      corpusPath: corpus,
      encoder: new FakeEncoder(),
      pooling: "mean" as const,
      maxLength: 32,
      outputPath: out,
    };
    await embedCorpus(job);
    const first = readFileSync(out, "utf-8");
    await embedCorpus(job);
    expect(readFileSync(out, "utf-8")).toBe(first);
  });

  it("records truncation in the header", async () => {
    const { corpus, out } = setup(["one two three four five", "short"]);
    const result = await embedCorpus({
      corpusPath: corpus,
      encoder: new FakeEncoder(),
      pooling: "mean",
      maxLength: 3,
      outputPath: out,
    });
    expect(result.truncated).toBe(1);
    expect(readFileSync(out, "utf-8").split("\n")[0]).toContain("truncated=1");
  });

  it("truncation changes the mean-pooled vector", async () => {
    const enc = new FakeEncoder();
    const full = pool(await enc.encodeTokens("a b c d", 64), "mean");
    const cut = pool(await enc.encodeTokens("a b c d", 2), "mean");
    expect(full).not.toEqual(cut);
  });

  it("rejects empty texts with the policy id", async () => {
    const { corpus, out } = setup(["fine text", "   "]);
    await expect(
      embedCorpus({
        corpusPath: corpus,
        encoder: new FakeEncoder(),
        pooling: "mean",
        maxLength: 8,
        outputPath: out,
      }),
    ).rejects.toThrow(/p1.*empty text/);
  });
});
