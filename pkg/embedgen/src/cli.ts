#!/usr/bin/env node
/**
 * embedgen embed    --corpus c.jsonl --encoder embedding_a --output emb.csv
 *                   [--pooling mean|lead] [--max-length 512] [--fake]
 * embedgen classify --corpus c.jsonl --output scores.csv
 *                   [--tasks detector,sentiment,...] [--fake]
 *
 * --fake swaps the pinned checkpoints for deterministic offline stand-ins
 * (useful for format checks and air-gapped smoke tests).
 */

import { parseArgs } from "node:util";

import { classifyCorpus } from "./classify.js";
import { embedCorpus } from "./embed.js";
import { FakeClassifier, FakeEncoder, TextClassifier, TokenEncoder } from "./encoder.js";
import { Pooling } from "./pooling.js";
import { DEFAULT_TASKS, loadLockfile, resolveTasks } from "./tasks.js";

function usage(message?: string): never {
  if (message) console.error(`error: ${message}`);
  console.error("usage: embedgen <embed|classify> --corpus <jsonl> --output <csv> [options]");
  process.exit(64);
}

async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  if (command !== "embed" && command !== "classify") usage(`unknown command '${command ?? ""}'`);

  const { values } = parseArgs({
    args: rest,
    options: {
      corpus: { type: "string" },
      output: { type: "string" },
      encoder: { type: "string", default: "embedding_a" },
      pooling: { type: "string", default: "mean" },
      "max-length": { type: "string", default: "512" },
      tasks: { type: "string" },
      lockfile: { type: "string" },
      fake: { type: "boolean", default: false },
    },
  });
  if (!values.corpus || !values.output) usage("--corpus and --output are required");
  const lock = loadLockfile(values.lockfile);

  if (command === "embed") {
    const pooling = values.pooling as Pooling;
    if (pooling !== "mean" && pooling !== "lead") usage(`pooling must be mean or lead`);
    let encoder: TokenEncoder;
    if (values.fake) {
      encoder = new FakeEncoder(`fake:${values.encoder}`, "0", 16);
    } else {
      const pin = lock.encoders[values.encoder!];
      if (!pin) usage(`unknown encoder '${values.encoder}'; lock file defines: ${Object.keys(lock.encoders).join(", ")}`);
      const { TransformersEncoder } = await import("./transformers.js");
      encoder = new TransformersEncoder(pin);
    }
    const result = await embedCorpus({
      corpusPath: values.corpus,
      encoder,
      pooling,
      maxLength: parseInt(values["max-length"]!, 10),
      outputPath: values.output,
    });
    console.log(`wrote ${result.outputPath}: ${result.nRows} rows, dim ${result.dim}, ${result.truncated} truncated`);
    return 0;
  }

  const taskNames = values.tasks ? values.tasks.split(",").map((t) => t.trim()) : [...DEFAULT_TASKS];
  const pins = resolveTasks(taskNames, lock);
  let classifiers: Array<[string, TextClassifier]>;
  if (values.fake) {
    classifiers = pins.map(([task, pin]) => [task, new FakeClassifier(`fake:${pin.model}`, "0", pin.labels)]);
  } else {
    const { TransformersClassifier } = await import("./transformers.js");
    classifiers = pins.map(([task, pin]) => [task, new TransformersClassifier(pin)]);
  }
  const result = await classifyCorpus({
    corpusPath: values.corpus,
    classifiers,
    outputPath: values.output,
  });
  console.log(
    `wrote ${result.outputPath}: ${result.nRows} rows, ${result.scoreColumns.length} score + ${result.labelColumns.length} label columns`,
  );
  return 0;
}

main(process.argv.slice(2))
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(`error: ${err.message ?? err}`);
    process.exit(1);
  });
