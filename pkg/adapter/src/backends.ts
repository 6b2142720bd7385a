/* Sentiment backends served over the wire protocol.
 *
 * `builtin` is a deterministic lexicon scorer (English + romanized Hindi)
 * that needs no downloads and backs the conformance tests. Any other model
 * id or local path is loaded through @huggingface/transformers as a
 * text-classification pipeline (install that package to use it; it is not
 * a hard dependency so the adapter stays runnable offline).
 */

export interface SentimentBackend {
  name: string;
  classes: string[];
  predict(texts: string[]): Promise<number[][]>;
}

const POSITIVE_WORDS = new Set([
  "good", "great", "excellent", "fantastic", "superb", "amazing", "awesome",
  "love", "loved", "enjoyable", "best", "brilliant", "nice", "fun",
  "wonderful", "perfect", "beautiful", "stunning",
  // romanized Hindi
  "accha", "acha", "badhiya", "mast", "zabardast", "shandaar", "jhakaas",
  "sahi", "dhamaal", "kamaal", "umda",
]);

const NEGATIVE_WORDS = new Set([
  "bad", "awful", "terrible", "horrible", "boring", "worst", "hate",
  "hated", "poor", "dull", "weak", "disappointing", "pathetic", "ugly",
  // romanized Hindi
  "bakwaas", "bakwas", "bekar", "bekaar", "ghatiya", "faltu", "raddi",
  "thanda", "bura", "kharab",
]);

const NEUTRAL_BIAS = 0.5;

function normalize(word: string): string {
  return word.toLowerCase().replace(/^[^\p{L}\p{N}]+|[^\p{L}\p{N}]+$/gu, "");
}

function softmax(logits: number[]): number[] {
  const peak = Math.max(...logits);
  const exps = logits.map((l) => Math.exp(l - peak));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((e) => e / total);
}

export class LexiconBackend implements SentimentBackend {
  name = "mixlens-builtin-lexicon";
  classes: string[];

  constructor(classes?: string[]) {
    this.classes = classes ?? ["negative", "neutral", "positive"];
    if (this.classes.length !== 3) {
      throw new Error(
        `builtin backend is 3-class, got ${this.classes.length} class names`,
      );
    }
  }

  score(text: string): number {
    let score = 0;
    for (const raw of text.split(/\s+/)) {
      const word = normalize(raw);
      if (POSITIVE_WORDS.has(word)) score += 1;
      if (NEGATIVE_WORDS.has(word)) score -= 1;
    }
    return score;
  }

  async predict(texts: string[]): Promise<number[][]> {
    return texts.map((text) => {
      const s = this.score(text);
      return softmax([-s, NEUTRAL_BIAS, s]);
    });
  }
}

export interface TransformersOptions {
  device?: string;
  dtype?: string;
  classes?: string[];
}

export class TransformersBackend implements SentimentBackend {
  name: string;
  classes: string[];
  private pipe: any;
  private modelLabels: string[];

  private constructor(pipe: any, modelLabels: string[], classes: string[]) {
    this.pipe = pipe;
    this.modelLabels = modelLabels;
    this.classes = classes;
    this.name = `transformers:${pipe?.model?.config?.model_type ?? "unknown"}`;
  }

  static async load(
    model: string,
    options: TransformersOptions = {},
  ): Promise<TransformersBackend> {
    let transformers: any;
    try {
      // optional dependency: resolved at runtime only
      const moduleName = "@huggingface/transformers";
      transformers = await import(moduleName);
    } catch {
      throw new Error(
        "@huggingface/transformers is not installed; " +
          "run `npm install @huggingface/transformers` or use --model builtin",
      );
    }
    const pipelineOptions: Record<string, unknown> = {};
    if (options.device) pipelineOptions.device = options.device;
    if (options.dtype) pipelineOptions.dtype = options.dtype;
    const pipe = await transformers.pipeline(
      "text-classification",
      model,
      pipelineOptions,
    );
    const id2label: Record<string, string> = pipe.model.config.id2label ?? {};
    const modelLabels = Object.keys(id2label)
      .sort((a, b) => Number(a) - Number(b))
      .map((k) => id2label[k]);
    if (modelLabels.length === 0) {
      throw new Error(`model ${model} declares no output labels`);
    }
    const classes =
      options.classes ?? modelLabels.map((label) => label.toLowerCase());
    if (classes.length !== modelLabels.length) {
      throw new Error(
        `--classes lists ${classes.length} names but the model has ` +
          `${modelLabels.length} outputs (${modelLabels.join(", ")})`,
      );
    }
    return new TransformersBackend(pipe, modelLabels, classes);
  }

  async predict(texts: string[]): Promise<number[][]> {
    const rows: number[][] = [];
    for (const text of texts) {
      // top_k: null returns the score of every class, softmax-normalized
      const output = await this.pipe(text, { top_k: null });
      const byLabel = new Map<string, number>(
        output.map((entry: { label: string; score: number }) => [
          entry.label,
          entry.score,
        ]),
      );
      const row = this.modelLabels.map((label) => byLabel.get(label) ?? 0);
      const total = row.reduce((a, b) => a + b, 0);
      rows.push(total > 0 ? row.map((p) => p / total) : row);
    }
    return rows;
  }
}
