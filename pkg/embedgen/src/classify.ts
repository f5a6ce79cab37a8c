import { writeFileSync } from "node:fs";

import { readCorpus } from "./corpus.js";
import { formatSidecarCsv } from "./csv.js";
import { TextClassifier } from "./encoder.js";

export interface ClassifyJob {
  corpusPath: string;
  /** task name -> classifier, in output-column order */
  classifiers: Array<[string, TextClassifier]>;
  outputPath: string;
  manifestPath?: string;
}

export interface ClassifyResult {
  outputPath: string;
  manifestPath: string;
  nRows: number;
  scoreColumns: string[];
  labelColumns: string[];
}

/**
 * Score every policy with each classifier task. Per task the sidecar gets a
 * `cb_<task>_score` column (probability of the predicted label) and one-hot
 * `cb_<task>_label_<label>` columns; a JSON manifest describing the columns
 * and pinned checkpoints is written alongside.
 */
export async function classifyCorpus(job: ClassifyJob): Promise<ClassifyResult> {
  if (job.classifiers.length === 0) throw new Error("no classifier tasks given");
  const corpus = readCorpus(job.corpusPath);

  const scoreColumns: string[] = [];
  const labelColumns: string[] = [];
  for (const [task, clf] of job.classifiers) {
    scoreColumns.push(`cb_${task}_score`);
    for (const label of clf.labels) {
      labelColumns.push(`cb_${task}_label_${label}`);
    }
  }
  const columns = [...scoreColumns, ...labelColumns];

  const rows: Array<{ id: string; values: number[] }> = [];
  for (const rec of corpus) {
    const scores: number[] = [];
    const onehots: number[] = [];
    for (const [, clf] of job.classifiers) {
      const probs = await clf.probabilities(rec.text);
      if (probs.length !== clf.labels.length) {
        throw new Error(`classifier ${clf.id} returned ${probs.length} probabilities for ${clf.labels.length} labels`);
      }
      const best = probs.indexOf(Math.max(...probs));
      scores.push(probs[best]);
      onehots.push(...probs.map((_, i) => (i === best ? 1 : 0)));
    }
    rows.push({ id: rec.id, values: [...scores, ...onehots] });
  }

  writeFileSync(job.outputPath, formatSidecarCsv({ columns, rows }), "utf-8");
  const manifestPath = job.manifestPath ?? job.outputPath.replace(/\.csv$/, "") + ".manifest.json";
  const manifest = {
    score_columns: scoreColumns,
    label_columns: labelColumns,
    tasks: Object.fromEntries(
      job.classifiers.map(([task, clf]) => [
        task,
        { model: clf.id, revision: clf.revision, labels: clf.labels },
      ]),
    ),
  };
  writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + "\n", "utf-8");
  return {
    outputPath: job.outputPath,
    manifestPath,
    nRows: rows.length,
    scoreColumns,
    labelColumns,
  };
}
