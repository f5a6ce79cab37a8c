/**
 * Cross-component checks: the CSVs we emit must load through the prediction
 * pipeline's own readers. Runs only when that package is importable from
 * python3; CI without it just sees skips.
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { classifyCorpus } from "../src/classify.js";
import { embedCorpus } from "../src/embed.js";
import { FakeClassifier, FakeEncoder, TextClassifier } from "../src/encoder.js";
import { DEFAULT_TASKS, loadLockfile, resolveTasks } from "../src/tasks.js";

function pythonHasPipeline(): boolean {
  try {
    execFileSync("python3", ["-c", "import policyprog"], { stdio: "pipe" });
    return true;
  } catch {
    return false;
  }
}

const HAVE_PY = pythonHasPipeline();

function setup(n = 5): { corpus: string; dir: string } {
  const dir = mkdtempSync(join(tmpdir(), "embedgen-ingest-"));
  const corpus = join(dir, "corpus.jsonl");
  const stages = ["Tabled", "Announced", "CloseToAdoption", "AdoptedCompleted", "Blocked"];
  writeFileSync(
    corpus,
    Array.from({ length: n }, (_, i) =>
      JSON.stringify({
        id: `p${i}`,
        title: `Policy ${i}`,
        text: `climate policy document ${i} energy transition`,
        stage: stages[i % stages.length],
        month: 1 + (i % 12),
        year: 2021,
        legislative: true,
      }),
    ).join("\n") + "\n",
  );
  return { corpus, dir };
}

describe.skipIf(!HAVE_PY)("pipeline ingestion", () => {
  it("embedding CSV loads through the pipeline reader with matching ids", async () => {
    const { corpus, dir } = setup();
    const out = join(dir, "emb.csv");
    const result = await embedCorpus({
      corpusPath: corpus,
      encoder: new FakeEncoder("fake-enc", "0", 12),
      pooling: "mean",
      maxLength: 64,
      outputPath: out,
    });
    expect(result.nRows).toBe(5);
    const check = execFileSync(
      "python3",
      [
        "-c",
        `
from policyprog.features import load_embeddings
table = load_embeddings(${JSON.stringify(out)})
print(table.dim, len(table.vectors), sorted(table.vectors)[0])
`,
      ],
      { encoding: "utf-8" },
    ).trim();
    expect(check).toBe("12 5 p0");
  });

  it("sidecar CSV attaches to the corpus through the pipeline reader", async () => {
    const { corpus, dir } = setup();
    const out = join(dir, "scores.csv");
    const lock = loadLockfile();
    const classifiers: Array<[string, TextClassifier]> = resolveTasks([...DEFAULT_TASKS], lock).map(
      ([task, pin]) => [task, new FakeClassifier(`fake:${pin.model}`, "0", pin.labels)],
    );
    await classifyCorpus({ corpusPath: corpus, classifiers, outputPath: out });
    const check = execFileSync(
      "python3",
      [
        "-c",
        `
from policyprog.corpus import parse_corpus, attach_sidecar_scores, load_sidecar_scores
corpus = parse_corpus(${JSON.stringify(corpus)})
merged = attach_sidecar_scores(corpus, load_sidecar_scores(${JSON.stringify(out)}))
cols = sorted(merged.records[0].sidecar_dict())
print(len(cols), sum(c.endswith('_score') for c in cols))
`,
      ],
      { encoding: "utf-8" },
    ).trim();
    expect(check).toBe("16 5");
  });
});
