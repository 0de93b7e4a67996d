/**
 * Entry point: pick a bundled model by name and serve the scoring protocol.
 *
 *   node dist/main.js [stumps|first-column]
 *
 * Defaults to the three-stump ensemble. Wrap your own model by importing
 * `serve` from ./protocol and passing any rows -> outputs function.
 */

import { MODELS } from "./models";
import { serve } from "./protocol";

const name = process.argv[2] ?? "stumps";
const model = MODELS[name];
if (model === undefined) {
  process.stderr.write(
    `unknown model "${name}"; available: ${Object.keys(MODELS).join(", ")}\n`
  );
  process.exit(2);
}

serve(model);
