/* Entry point: load the requested model, then speak the protocol.
 *
 *   node dist/main.js [--model builtin|<hf-id-or-path>] [--classes a,b,c]
 *                     [--batch-limit N] [--device cpu] [--dtype q8]
 *
 * Model-load failures answer the pending handshake with an error line and
 * exit 1. All diagnostics go to stderr; stdout carries protocol lines only.
 */

import {
  LexiconBackend,
  SentimentBackend,
  TransformersBackend,
} from "./backends.js";
import { serve } from "./protocol.js";

interface CliOptions {
  model: string;
  classes?: string[];
  batchLimit: number;
  device?: string;
  dtype?: string;
}

export function parseArgs(argv: string[]): CliOptions {
  const options: CliOptions = { model: "builtin", batchLimit: 16 };
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${flag} needs a value`);
      return argv[i];
    };
    switch (flag) {
      case "--model":
        options.model = next();
        break;
      case "--classes":
        options.classes = next().split(",").map((c) => c.trim()).filter(Boolean);
        break;
      case "--batch-limit":
        options.batchLimit = Number(next());
        break;
      case "--device":
        options.device = next();
        break;
      case "--dtype":
        options.dtype = next();
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!Number.isInteger(options.batchLimit) || options.batchLimit < 1) {
    throw new Error(`--batch-limit must be a positive integer`);
  }
  return options;
}

async function loadBackend(options: CliOptions): Promise<SentimentBackend> {
  if (options.model === "builtin") {
    return new LexiconBackend(options.classes);
  }
  console.error(`loading ${options.model} ...`);
  const backend = await TransformersBackend.load(options.model, {
    device: options.device,
    dtype: options.dtype,
    classes: options.classes,
  });
  console.error(`ready: ${backend.name} (${backend.classes.join(", ")})`);
  return backend;
}

async function main(): Promise<void> {
  let options: CliOptions;
  let backend: SentimentBackend;
  try {
    options = parseArgs(process.argv.slice(2));
    backend = await loadBackend(options);
  } catch (err) {
    // answer the client's pending handshake, then give up
    process.stdout.write(JSON.stringify({ error: String(err) }) + "\n");
    process.exit(1);
  }
  await serve(backend, options.batchLimit);
}

main();
