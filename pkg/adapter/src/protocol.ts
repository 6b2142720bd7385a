/* Line-delimited JSON request loop over stdin/stdout.
 *
 *   -> {"op": "handshake", "version": 1}
 *   <- {"classes": [...], "batch_limit": k, "name": "..."}
 *   -> {"op": "predict", "texts": [...]}
 *   <- {"probs": [[...], ...]}
 *   -> {"op": "shutdown"}            (process exits 0)
 *
 * A malformed request gets an {"error": ...} line and the loop continues;
 * only shutdown (or stdin EOF) ends the process. Requests are handled
 * strictly in order, one at a time.
 */

import * as readline from "node:readline";

import type { SentimentBackend } from "./backends.js";

export const PROTOCOL_VERSION = 1;

function send(payload: unknown): void {
  process.stdout.write(JSON.stringify(payload) + "\n");
}

export async function serve(
  backend: SentimentBackend,
  batchLimit: number,
): Promise<void> {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  let chain: Promise<void> = Promise.resolve();

  const handleLine = async (line: string): Promise<void> => {
    if (!line.trim()) return;
    let request: any;
    try {
      request = JSON.parse(line);
    } catch {
      send({ error: "request is not valid JSON" });
      return;
    }
    const op = request?.op;
    if (op === "handshake") {
      send({ classes: backend.classes, batch_limit: batchLimit, name: backend.name });
    } else if (op === "predict") {
      const texts = request?.texts;
      if (!Array.isArray(texts) || texts.some((t) => typeof t !== "string")) {
        send({ error: "predict needs a 'texts' array of strings" });
        return;
      }
      if (texts.length > batchLimit) {
        send({ error: `batch of ${texts.length} exceeds batch_limit ${batchLimit}` });
        return;
      }
      try {
        send({ probs: await backend.predict(texts) });
      } catch (err) {
        send({ error: `prediction failed: ${err}` });
      }
    } else if (op === "shutdown") {
      rl.close();
      process.exit(0);
    } else {
      send({ error: `unknown op ${JSON.stringify(op)}` });
    }
  };

  rl.on("line", (line) => {
    chain = chain.then(() => handleLine(line));
  });
  await new Promise<void>((resolve) => rl.on("close", resolve));
  await chain;
}
