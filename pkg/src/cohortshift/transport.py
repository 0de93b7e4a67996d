"""Empirical 1D and sliced Wasserstein costs, transport plans, and upper confidence limits.

Equal sample counts are required throughout: the optimal 1D plan is then the
monotone rearrangement given by stable sorting, which keeps every downstream
per-row decomposition exact and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .streams import TAG_PROJECTIONS, stream


@dataclass(frozen=True)
class ProjectionSet:
    """A fixed set of unit projection directions plus the seed that produced it."""

    directions: np.ndarray = field(repr=False)  # N x d, unit rows
    seed: int = 0

    def __post_init__(self) -> None:
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.ndim != 2 or dirs.shape[0] < 1:
            raise ValueError("directions must be a non-empty N x d matrix")
        norms = np.linalg.norm(dirs, axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-12):
            raise ValueError("every direction must have unit norm within 1e-12")
        dirs = dirs.copy()
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    @property
    def count(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]


@dataclass(frozen=True)
class TransportBundle:
    """Per-projection input plans plus the output-side plan.

    ``input_plans[k, i] = j`` pairs current row ``i`` with factual row ``j``
    under direction ``k``; ``output_plan[i] = j`` pairs output ``i`` with
    target value ``j``. Each plan is a bijection on ``{0..n-1}``.
    """

    input_plans: np.ndarray = field(repr=False)  # N x n int
    output_plan: np.ndarray = field(repr=False)  # n int

    def __post_init__(self) -> None:
        plans = np.atleast_2d(np.asarray(self.input_plans, dtype=np.intp))
        out = np.asarray(self.output_plan, dtype=np.intp)
        n = out.shape[0]
        ident = np.arange(n)
        if plans.shape[1] != n:
            raise ValueError(f"input plans cover {plans.shape[1]} rows, output plan {n}")
        for k in range(plans.shape[0]):
            if not np.array_equal(np.sort(plans[k]), ident):
                raise ValueError(f"input plan {k} is not a bijection on 0..{n - 1}")
        if not np.array_equal(np.sort(out), ident):
            raise ValueError(f"output plan is not a bijection on 0..{n - 1}")
        object.__setattr__(self, "input_plans", plans)
        object.__setattr__(self, "output_plan", out)


@dataclass(frozen=True)
class UclResult:
    """A point estimate together with its trimmed-quantile upper confidence limit."""

    point_estimate: float
    ucl: float
    delta: float
    alpha: float
    grid_size: int

    def __post_init__(self) -> None:
        if not (0.0 < self.delta < 0.5):
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")
        if self.ucl < 0.0:
            raise ValueError("ucl must be nonnegative")


def sample_projections(d: int, count: int, seed: int) -> ProjectionSet:
    """Draw ``count`` i.i.d. uniform directions on the unit sphere in ``R^d``.

    Standard normal vectors normalized to unit length; deterministic given
    ``seed``. In one dimension every direction is +1 or -1.
    """
    if d < 1 or count < 1:
        raise ValueError(f"need d >= 1 and count >= 1, got d={d}, count={count}")
    rng = stream(seed, TAG_PROJECTIONS)
    dirs = rng.standard_normal((count, d))
    norms = np.linalg.norm(dirs, axis=1)
    # A zero draw has probability zero but would poison the normalization.
    while np.any(norms == 0.0):
        bad = norms == 0.0
        dirs[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(dirs, axis=1)
    return ProjectionSet(dirs / norms[:, None], seed=seed)


def w2_1d(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Squared 1D Wasserstein cost between equal-size samples, plus its plan.

    Returns ``(cost, plan)`` where ``cost = (1/n) * sum_i (a_(i) - b_(i))^2``
    over sorted order statistics and ``plan[i] = j`` matches the original
    index of each order statistic of ``a`` to the original index of the
    corresponding order statistic of ``b``. Ties are broken by original
    index (stable sort), which makes the plan deterministic.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape or a.size < 1:
        raise ValueError(f"samples must have equal nonzero length, got {a.size} and {b.size}")
    ia = np.argsort(a, kind="stable")
    ib = np.argsort(b, kind="stable")
    diffs = a[ia] - b[ib]
    cost = float(np.mean(diffs * diffs))
    plan = np.empty(a.size, dtype=np.intp)
    plan[ia] = ib
    return cost, plan


def sw2(
    x: np.ndarray, x_ref: np.ndarray, projections: ProjectionSet
) -> tuple[float, np.ndarray]:
    """Sliced squared Wasserstein cost between two cohorts, plus all 1D plans.

    ``cost = (1/N) * sum_k w2_1d(theta_k @ x, theta_k @ x_ref)``; the returned
    plan array has shape ``(N, n)`` with one matching per direction.
    """
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    if x.shape != x_ref.shape or x.ndim != 2:
        raise ValueError(f"cohorts must share an n x d shape, got {x.shape} and {x_ref.shape}")
    if x.shape[1] != projections.dim:
        raise ValueError(
            f"cohort dimension {x.shape[1]} does not match projections ({projections.dim})"
        )
    d = projections.directions
    p = x @ d.T          # n x N
    p_ref = x_ref @ d.T  # n x N
    n_proj = projections.count
    plans = np.empty((n_proj, x.shape[0]), dtype=np.intp)
    costs = np.empty(n_proj, dtype=float)
    for k in range(n_proj):
        costs[k], plans[k] = w2_1d(p[:, k], p_ref[:, k])
    return float(np.mean(costs)), plans


def quantile_band(u: np.ndarray | float, n: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Distribution-free band around CDF level ``u`` at per-side level ``alpha/2``.

    The half-width is ``eps = sqrt(ln(4/alpha) / (2n))`` (DKW inequality, one
    band per side), clamped into [0, 1]. Returns ``(q_lo, q_hi)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    u = np.asarray(u, dtype=float)
    eps = math.sqrt(math.log(4.0 / alpha) / (2.0 * n))
    return np.clip(u - eps, 0.0, 1.0), np.clip(u + eps, 0.0, 1.0)


def _empirical_quantiles(sorted_vals: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Inverse empirical CDF ``F^{-1}(q) = inf{x : F_n(x) >= q}`` on sorted values."""
    n = sorted_vals.shape[0]
    idx = np.ceil(q * n).astype(np.intp) - 1
    np.clip(idx, 0, n - 1, out=idx)
    return sorted_vals[idx]


def _trim_grid(delta: float, grid_size: int) -> np.ndarray:
    """Midpoint-rule abscissae on [delta, 1 - delta]."""
    width = (1.0 - 2.0 * delta) / grid_size
    return delta + (np.arange(grid_size) + 0.5) * width


def _band_integrand(
    sorted_a: np.ndarray,
    sorted_b: np.ndarray,
    u: np.ndarray,
    n: int,
    alpha: float,
    square: bool,
) -> np.ndarray:
    """Pointwise band-widened quantile difference D(u), optionally squared.

    ``D(u) = max(Fa^{-1}(q_hi) - Fb^{-1}(q_lo), Fb^{-1}(q_hi) - Fa^{-1}(q_lo))``
    dominates ``|Fa^{-1}(u) - Fb^{-1}(u)|`` pointwise whenever the band has
    nonnegative half-width.
    """
    q_lo, q_hi = quantile_band(u, n, alpha)
    a_hi = _empirical_quantiles(sorted_a, q_hi)
    a_lo = _empirical_quantiles(sorted_a, q_lo)
    b_hi = _empirical_quantiles(sorted_b, q_hi)
    b_lo = _empirical_quantiles(sorted_b, q_lo)
    d = np.maximum(a_hi - b_lo, b_hi - a_lo)
    return d * d if square else d


def ucl_w2(
    y: np.ndarray,
    y_ref: np.ndarray,
    delta: float = 0.05,
    alpha: float = 0.1,
    grid_size: int = 100,
    square_integrand: bool = True,
) -> UclResult:
    """Upper confidence limit for the squared 1D Wasserstein cost.

    Integrates the band-widened quantile difference over the trimmed interval
    ``[delta, 1 - delta]`` by the midpoint rule and normalizes by
    ``1/(1 - 2*delta)``. With ``square_integrand`` (the default) the integrand
    is ``D(u)^2``, which is the unit-consistent form for squared costs; the
    flag restores the unsquared reading.
    """
    y = np.asarray(y, dtype=float).ravel()
    y_ref = np.asarray(y_ref, dtype=float).ravel()
    if y.shape != y_ref.shape or y.size < 1:
        raise ValueError(f"samples must have equal nonzero length, got {y.size} and {y_ref.size}")
    if not (0.0 < delta < 0.5):
        raise ValueError(f"delta must lie in (0, 0.5), got {delta}")
    n = y.size
    u = _trim_grid(delta, grid_size)
    integrand = _band_integrand(np.sort(y), np.sort(y_ref), u, n, alpha, square_integrand)
    point, _ = w2_1d(y, y_ref)
    return UclResult(
        point_estimate=point,
        ucl=float(np.mean(integrand)),
        delta=delta,
        alpha=alpha,
        grid_size=grid_size,
    )


def ucl_sw2(
    x: np.ndarray,
    x_ref: np.ndarray,
    projections: ProjectionSet,
    delta: float = 0.05,
    alpha: float = 0.1,
    grid_size: int = 100,
    square_integrand: bool = True,
) -> UclResult:
    """Upper confidence limit for the sliced squared Wasserstein cost.

    Averages the per-projection construction of :func:`ucl_w2` over the
    direction set; with a single direction it reduces exactly to
    :func:`ucl_w2` applied to the projected samples.
    """
    x = np.asarray(x, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    if x.shape != x_ref.shape or x.ndim != 2:
        raise ValueError(f"cohorts must share an n x d shape, got {x.shape} and {x_ref.shape}")
    if x.shape[1] != projections.dim:
        raise ValueError(
            f"cohort dimension {x.shape[1]} does not match projections ({projections.dim})"
        )
    if not (0.0 < delta < 0.5):
        raise ValueError(f"delta must lie in (0, 0.5), got {delta}")
    n = x.shape[0]
    d = projections.directions
    p = np.sort(x @ d.T, axis=0)          # n x N, sorted per direction
    p_ref = np.sort(x_ref @ d.T, axis=0)
    u = _trim_grid(delta, grid_size)
    # Fixed reduction order over k keeps results identical under any schedule.
    per_proj = np.empty(projections.count, dtype=float)
    for k in range(projections.count):
        per_proj[k] = float(
            np.mean(_band_integrand(p[:, k], p_ref[:, k], u, n, alpha, square_integrand))
        )
    point, _ = sw2(x, x_ref, projections)
    return UclResult(
        point_estimate=point,
        ucl=float(np.mean(per_proj)),
        delta=delta,
        alpha=alpha,
        grid_size=grid_size,
    )
