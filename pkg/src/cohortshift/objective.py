"""Certified objective bookkeeping: exact per-row impact scores, top-k selection,
and the gap-balancing / interval-narrowing schedule for the trade-off weight.

Under frozen transport plans the combined objective decomposes exactly into a
sum of per-row scores, which is what makes a budgeted edit set well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .transport import ProjectionSet


@dataclass(frozen=True)
class ImpactScores:
    """Per-row contributions to the input cost, output cost, and their blend."""

    qx: np.ndarray
    qy: np.ndarray
    q: np.ndarray
    eta: float

    @property
    def total(self) -> float:
        return float(np.sum(self.q))


@dataclass(frozen=True)
class EtaState:
    """Current trade-off weight plus the interval it is confined to."""

    eta: float = 0.5
    lower: float = 0.0
    upper: float = 1.0
    kappa: float = 0.1

    def __post_init__(self) -> None:
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"need 0 <= lower <= upper <= 1, got [{self.lower}, {self.upper}]")
        if not (0.0 < self.kappa < 1.0):
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")


def row_scores_input(
    x: np.ndarray, x_ref: np.ndarray, projections: ProjectionSet, plans: np.ndarray
) -> np.ndarray:
    """Each row's exact share of the sliced transport cost under frozen plans.

    ``qx_i = (1/(N*n)) * sum_k (theta_k . x_i - theta_k . x_ref[plans[k, i]])^2``;
    the scores sum to the sliced cost that produced ``plans``.
    """
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    plans = np.asarray(plans)
    n, _ = x.shape
    if plans.shape != (projections.count, n) or x.shape != x_ref.shape:
        raise ValueError(
            f"plans shape {plans.shape} does not match {projections.count} projections over {n} rows"
        )
    d = projections.directions
    p = x @ d.T          # n x N
    p_ref = x_ref @ d.T  # n x N
    matched = p_ref[plans.T, np.arange(projections.count)]  # n x N
    diff = p - matched
    return np.sum(diff * diff, axis=1) / (projections.count * n)


def row_scores_output(y: np.ndarray, y_ref: np.ndarray, output_plan: np.ndarray) -> np.ndarray:
    """Each row's exact share of the 1D output transport cost under a frozen plan."""
    y = np.asarray(y, dtype=float).ravel()
    y_ref = np.asarray(y_ref, dtype=float).ravel()
    output_plan = np.asarray(output_plan)
    if output_plan.shape != y.shape or y.shape != y_ref.shape:
        raise ValueError("plan and samples must share one length")
    diff = y - y_ref[output_plan]
    return diff * diff / y.size


def combine(qx: np.ndarray, qy: np.ndarray, eta: float) -> ImpactScores:
    """Blend input and output scores: ``q_i = (1 - eta) * qx_i + eta * qy_i``."""
    qx = np.asarray(qx, dtype=float)
    qy = np.asarray(qy, dtype=float)
    if qx.shape != qy.shape:
        raise ValueError(f"score vectors must share a shape, got {qx.shape} and {qy.shape}")
    if not (0.0 <= eta <= 1.0):
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return ImpactScores(qx=qx, qy=qy, q=(1.0 - eta) * qx + eta * qy, eta=float(eta))


def top_k(q: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest scores, ties broken by smaller index first.

    Returned in ascending index order.
    """
    q = np.asarray(q, dtype=float)
    if not (1 <= k <= q.size):
        raise ValueError(f"need 1 <= k <= {q.size}, got k={k}")
    order = np.argsort(-q, kind="stable")
    return np.sort(order[:k])


def balance_eta(a: float, b: float, state: EtaState) -> float:
    """Trade-off weight from the two constraint gaps, clamped into the interval.

    ``a`` and ``b`` are the input- and output-side slacks (bound minus upper
    confidence limit). Both negative: ``eta = b / (a + b)``; both nonnegative
    with positive sum: ``eta = a / (a + b)``; both zero: 0.5. With mixed signs
    the weight is pinned to the interval endpoint favoring the violated side.
    """
    if a < 0.0 and b < 0.0:
        eta = b / (a + b)
    elif a >= 0.0 and b >= 0.0:
        eta = a / (a + b) if a + b > 0.0 else 0.5
    elif a < 0.0 <= b:
        # Input side violated: push weight toward the input cost.
        eta = state.lower
    else:
        # Output side violated: push weight toward the output cost.
        eta = state.upper
    return float(min(max(eta, state.lower), state.upper))


def narrow_interval(eta: float, state: EtaState) -> EtaState:
    """Shrink the admissible interval toward the side indicated by ``eta``.

    If ``eta`` sits above the midpoint the lower edge moves up by
    ``kappa * (upper - lower)``, otherwise the upper edge moves down; the
    width shrinks by exactly ``(1 - kappa)`` per call.
    """
    lower, upper = state.lower, state.upper
    if eta > (lower + upper) / 2.0:
        lower = lower + state.kappa * (upper - lower)
    else:
        upper = upper - state.kappa * (upper - lower)
    return replace(
        state,
        eta=float(min(max(eta, lower), upper)),
        lower=float(lower),
        upper=float(upper),
    )
