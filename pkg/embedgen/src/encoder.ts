/**
 * Encoder and classifier seams. Real checkpoints load through
 * transformers.js (see transformers.ts); the deterministic fakes below keep
 * the whole pipeline testable offline with the exact same code paths.
 */

export interface TokenEncoder {
  /** checkpoint identifier recorded in output headers */
  id: string;
  revision: string;
  /**
   * Token-level vectors for one text, truncated to maxLength tokens.
   * Returns a [tokens x dim] matrix; pooling happens in the caller.
   */
  encodeTokens(text: string, maxLength: number): Promise<number[][]>;
  /** true when the tokenized text exceeded maxLength (for bookkeeping) */
  wasTruncated(text: string, maxLength: number): boolean;
}

export interface TextClassifier {
  id: string;
  revision: string;
  labels: string[];
  /** per-label probabilities summing to ~1, aligned with `labels` */
  probabilities(text: string): Promise<number[]>;
}

/** Deterministic 32-bit string hash (FNV-1a). */
export function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const tokenize = (text: string) => text.split(/\s+/).filter(Boolean);

/**
 * Offline stand-in encoder: each token maps to a pseudo-random but fully
 * deterministic vector derived from its hash, so identical texts always give
 * identical embeddings and truncation behaves like a real tokenizer cap.
 */
export class FakeEncoder implements TokenEncoder {
  constructor(
    public id = "fake-encoder",
    public revision = "0",
    public dim = 16,
  ) {}

  async encodeTokens(text: string, maxLength: number): Promise<number[][]> {
    const tokens = tokenize(text).slice(0, maxLength);
    if (tokens.length === 0) {
      throw new Error("empty text after preprocessing");
    }
    return tokens.map((tok) => {
      const rand = mulberry32(fnv1a(`${this.id}:${tok}`));
      return Array.from({ length: this.dim }, () => rand() * 2 - 1);
    });
  }

  wasTruncated(text: string, maxLength: number): boolean {
    return tokenize(text).length > maxLength;
  }
}

/** Offline stand-in classifier with hash-derived, normalized probabilities. */
export class FakeClassifier implements TextClassifier {
  constructor(
    public id = "fake-classifier",
    public revision = "0",
    public labels: string[] = ["no", "yes"],
  ) {}

  async probabilities(text: string): Promise<number[]> {
    const rand = mulberry32(fnv1a(`${this.id}:${text}`));
    const raw = this.labels.map(() => rand() + 1e-6);
    const total = raw.reduce((a, b) => a + b, 0);
    return raw.map((v) => v / total);
  }
}
