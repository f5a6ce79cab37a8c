import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

export interface EncoderPin {
  model: string;
  revision: string;
  dim: number;
}

export interface ClassifierPin {
  model: string;
  revision: string;
  labels: string[];
}

export interface Lockfile {
  encoders: Record<string, EncoderPin>;
  classifiers: Record<string, ClassifierPin>;
}

const HERE = dirname(fileURLToPath(import.meta.url));

export function loadLockfile(path?: string): Lockfile {
  const file = path ?? join(HERE, "..", "checkpoints.lock.json");
  return JSON.parse(readFileSync(file, "utf-8")) as Lockfile;
}

/** The default classifier task list: 5 score columns, 11 label values. */
export const DEFAULT_TASKS = [
  "detector",
  "commitment",
  "specificity",
  "environmental_claims",
  "sentiment",
] as const;

export function resolveTasks(names: string[], lock: Lockfile): Array<[string, ClassifierPin]> {
  return names.map((name) => {
    const pin = lock.classifiers[name];
    if (!pin) {
      const known = Object.keys(lock.classifiers).join(", ");
      throw new Error(`unknown task '${name}'; lock file defines: ${known}`);
    }
    return [name, pin];
  });
}
