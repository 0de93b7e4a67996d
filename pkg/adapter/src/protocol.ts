/**
 * The scoring wire protocol: newline-delimited JSON over stdin/stdout.
 *
 * Request:  {"id": <int>, "rows": [[<number>, ...], ...]}
 * Response: {"id": <int>, "outputs": [<number>, ...]}
 *
 * One response per request with a matching id and one output per row; the
 * first request is the handshake {"id": 0, "rows": []}. Nothing but protocol
 * lines is ever written to standard output. A malformed request produces
 * {"id": -1, "error": "<message>"} and exit code 1; end of input exits 0.
 */

import * as readline from "readline";

export type ScoreFn = (rows: number[][]) => number[];

interface Request {
  id: number;
  rows: number[][];
}

function parseRequest(line: string): Request {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (err) {
    throw new Error(`invalid JSON: ${(err as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null) {
    throw new Error("request must be a JSON object");
  }
  const { id, rows } = doc as { id?: unknown; rows?: unknown };
  if (typeof id !== "number" || !Number.isInteger(id)) {
    throw new Error("request id must be an integer");
  }
  if (!Array.isArray(rows)) {
    throw new Error("request rows must be an array");
  }
  for (const row of rows) {
    if (!Array.isArray(row) || row.some((v) => typeof v !== "number" || !Number.isFinite(v))) {
      throw new Error("every row must be an array of finite numbers");
    }
  }
  return { id, rows: rows as number[][] };
}

/** Run the request loop until stdin closes; never returns earlier. */
export function serve(scoreFn: ScoreFn): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });

  rl.on("line", (line) => {
    if (line.trim() === "") {
      return;
    }
    let request: Request;
    try {
      request = parseRequest(line);
    } catch (err) {
      process.stdout.write(JSON.stringify({ id: -1, error: (err as Error).message }) + "\n");
      process.exit(1);
    }
    let outputs: number[];
    try {
      outputs = scoreFn(request.rows);
    } catch (err) {
      process.stdout.write(
        JSON.stringify({ id: request.id, error: `scoring failed: ${(err as Error).message}` }) +
          "\n"
      );
      process.exit(1);
    }
    if (outputs.length !== request.rows.length) {
      process.stdout.write(
        JSON.stringify({ id: request.id, error: "score function returned a wrong-length batch" }) +
          "\n"
      );
      process.exit(1);
    }
    process.stdout.write(JSON.stringify({ id: request.id, outputs }) + "\n");
  });

  rl.on("close", () => {
    process.exit(0);
  });
}
