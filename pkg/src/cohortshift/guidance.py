"""Input-side transport guidance: the gradient of the sliced cost with plans frozen.

The sorting permutations are locally constant almost everywhere, so freezing
them makes the sliced cost a smooth quadratic whose exact gradient is cheap.
The field is only ever needed on the editable row set, so it is computed
sparsely; no predictor gradient is involved anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transport import ProjectionSet


@dataclass(frozen=True)
class GuidanceField:
    """Guidance vectors for the requested rows only."""

    rows: np.ndarray = field(repr=False)     # sorted row indices
    vectors: np.ndarray = field(repr=False)  # len(rows) x d

    def vector_for(self, row: int) -> np.ndarray:
        pos = np.searchsorted(self.rows, row)
        if pos >= self.rows.size or self.rows[pos] != row:
            raise KeyError(f"row {row} is not part of this guidance field")
        return self.vectors[pos]


def guidance(
    x: np.ndarray,
    x_ref: np.ndarray,
    projections: ProjectionSet,
    plans: np.ndarray,
    rows: np.ndarray,
) -> GuidanceField:
    """Exact gradient of the frozen-plan sliced cost, restricted to ``rows``.

    ``g_i = (2/(N*n)) * sum_k theta_k * (theta_k . x_i - theta_k . x_ref[plans[k, i]])``.
    Work scales linearly in the number of requested rows.
    """
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    plans = np.asarray(plans)
    rows = np.unique(np.asarray(rows, dtype=np.intp))
    n, _ = x.shape
    if plans.shape != (projections.count, n):
        raise ValueError(f"plans shape {plans.shape} is stale for {projections.count} x {n}")
    if rows.size and (rows[0] < 0 or rows[-1] >= n):
        raise ValueError(f"row indices must lie in [0, {n}), got {rows[rows >= n]}{rows[rows < 0]}")
    d = projections.directions  # N x d
    p_rows = x[rows] @ d.T      # |rows| x N
    gathered = x_ref[plans[:, rows]]                    # N x |rows| x d
    matched = np.einsum("krd,kd->rk", gathered, d)      # |rows| x N
    vectors = (2.0 / (projections.count * n)) * ((p_rows - matched) @ d)
    return GuidanceField(rows=rows, vectors=vectors)


def frozen_plan_input_cost(
    x: np.ndarray, x_ref: np.ndarray, projections: ProjectionSet, plans: np.ndarray
) -> float:
    """Sliced cost with the matching fixed; the function the guidance differentiates."""
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    d = projections.directions
    p = x @ d.T
    matched = (x_ref @ d.T)[np.asarray(plans).T, np.arange(projections.count)]
    diff = p - matched
    return float(np.sum(diff * diff) / (projections.count * x.shape[0]))
