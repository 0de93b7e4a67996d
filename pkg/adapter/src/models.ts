/**
 * Bundled example models.
 *
 * The three-stump ensemble is deliberately non-differentiable and dependency
 * free: every leaf value is an exact dyadic constant, so partial sums are
 * exact and any re-implementation in any language reproduces the scores
 * bit for bit.
 */

import { ScoreFn } from "./protocol";

export const STUMP_BASE = 0.25;

export const STUMPS: ReadonlyArray<{
  feature: number;
  threshold: number;
  left: number;
  right: number;
}> = [
  { feature: 0, threshold: 0.0, left: -0.75, right: 0.75 },
  { feature: 1, threshold: 0.5, left: -0.25, right: 0.5 },
  { feature: 0, threshold: 1.5, left: 0.0, right: 1.25 },
];

export const threeStumps: ScoreFn = (rows) =>
  rows.map((row) => {
    let value = STUMP_BASE;
    for (const s of STUMPS) {
      const cell = row[s.feature] ?? 0;
      value += cell <= s.threshold ? s.left : s.right;
    }
    return value;
  });

export const firstColumn: ScoreFn = (rows) => rows.map((row) => row[0] ?? 0);

export const MODELS: Record<string, ScoreFn> = {
  stumps: threeStumps,
  "first-column": firstColumn,
};
