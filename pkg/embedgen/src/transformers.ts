/**
 * Real checkpoint adapters backed by transformers.js. Loaded lazily so the
 * offline test suite never touches the heavy dependency; set
 * EMBEDGEN_OFFLINE=1 to forbid downloads and read only the local cache.
 */

import { TextClassifier, TokenEncoder } from "./encoder.js";
import { ClassifierPin, EncoderPin } from "./tasks.js";

async function transformersEnv() {
  const mod = await import("@huggingface/transformers");
  if (process.env.EMBEDGEN_OFFLINE === "1") {
    (mod.env as Record<string, unknown>).allowRemoteModels = false;
  }
  if (process.env.EMBEDGEN_CACHE_DIR) {
    (mod.env as Record<string, unknown>).cacheDir = process.env.EMBEDGEN_CACHE_DIR;
  }
  return mod;
}

export class TransformersEncoder implements TokenEncoder {
  id: string;
  revision: string;
  private pipe: Promise<any> | null = null;

  constructor(private pin: EncoderPin) {
    this.id = pin.model;
    this.revision = pin.revision;
  }

  private async pipeline() {
    if (!this.pipe) {
      this.pipe = transformersEnv().then(({ pipeline }) =>
        pipeline("feature-extraction", this.pin.model, { revision: this.pin.revision }),
      );
    }
    return this.pipe;
  }

  async encodeTokens(text: string, maxLength: number): Promise<number[][]> {
    if (!text.trim()) throw new Error("empty text after preprocessing");
    const extractor = await this.pipeline();
    const output = await extractor(text, { pooling: "none" });
    // output dims: [1, tokens, dim]
    const [, tokens, dim] = output.dims as number[];
    const data = output.data as Float32Array;
    const kept = Math.min(tokens, maxLength);
    const matrix: number[][] = [];
    for (let t = 0; t < kept; t++) {
      matrix.push(Array.from(data.slice(t * dim, (t + 1) * dim)));
    }
    return matrix;
  }

  wasTruncated(text: string, maxLength: number): boolean {
    // cheap proxy: whitespace token count; the model tokenizer only splits finer
    return text.split(/\s+/).filter(Boolean).length > maxLength;
  }
}

export class TransformersClassifier implements TextClassifier {
  id: string;
  revision: string;
  labels: string[];
  private pipe: Promise<any> | null = null;

  constructor(private pin: ClassifierPin) {
    this.id = pin.model;
    this.revision = pin.revision;
    this.labels = pin.labels;
  }

  private async pipeline() {
    if (!this.pipe) {
      this.pipe = transformersEnv().then(({ pipeline }) =>
        pipeline("text-classification", this.pin.model, { revision: this.pin.revision }),
      );
    }
    return this.pipe;
  }

  async probabilities(text: string): Promise<number[]> {
    const classifier = await this.pipeline();
    const scored = (await classifier(text, { top_k: this.labels.length })) as Array<{
      label: string;
      score: number;
    }>;
    const byLabel = new Map(scored.map((s) => [s.label.toLowerCase(), s.score]));
    return this.labels.map((label, i) => {
      // model label names may differ in case/spacing; fall back to position
      return byLabel.get(label.toLowerCase()) ?? scored[i]?.score ?? 0;
    });
  }
}
