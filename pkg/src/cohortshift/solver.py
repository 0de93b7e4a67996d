"""The outer propose-and-select loop: evaluate, score, gate, propose, select,
certify, and record the trajectory.

The trade-off weight is fixed at the start of each iteration and held through
candidate selection, which is what makes every step monotone in the combined
objective. Candidate scoring is incremental: projections and predictor
outputs are cached per row and refreshed only for edited rows, while sorting
is always recomputed from scratch.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, PredictorError
from .guidance import guidance
from .objective import EtaState, balance_eta, narrow_interval, top_k
from .predict import Predictor, query
from .proposals import (
    CandidateBatch,
    ConeParams,
    Edit,
    build_embeddings,
    genetic_propose,
    monte_carlo_propose,
)
from .streams import ProposalStreams
from .tabular import CohortMatrix
from .transport import ProjectionSet, _band_integrand, _trim_grid, sample_projections

log = logging.getLogger("cohortshift.solver")

MONTE_CARLO = "monte_carlo"
GENETIC = "genetic"


@dataclass(frozen=True)
class SolverConfig:
    """All solve hyperparameters; bounds are in squared transport-cost units."""

    u_x: float
    u_y: float
    alpha: float = 0.1
    delta: float = 0.05
    projections: int = 100
    top_k: int = 1
    feature_budget: int = 3
    candidates: int = 16
    iterations: int = 50
    optimizer: str = MONTE_CARLO
    cone: ConeParams = field(default_factory=ConeParams)
    kappa: float = 0.1
    seed: int = 0
    grid_size: int = 100
    p_mut: float = 0.3
    elite_size: int = 4
    ucl_square_integrand: bool = True
    per_feature_lambda: bool = False
    stop_when_certified: bool = False
    record_iterates: bool = False

    def validate(self, n_rows: int) -> None:
        if self.u_x < 0 or self.u_y < 0:
            raise ConfigError("bounds must be nonnegative")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (0.0 < self.delta < 0.5):
            raise ConfigError(f"delta must lie in (0, 0.5), got {self.delta}")
        if self.projections < 1:
            raise ConfigError("need at least one projection")
        if not (1 <= self.top_k <= n_rows):
            raise ConfigError(f"need 1 <= k <= {n_rows}, got k={self.top_k}")
        if self.feature_budget < 0:
            raise ConfigError("feature budget must be nonnegative")
        if self.iterations < 1:
            raise ConfigError("need at least one iteration")
        if self.optimizer == GENETIC:
            if self.candidates < 2:
                raise ConfigError("the genetic optimizer needs at least 2 candidates")
        elif self.optimizer == MONTE_CARLO:
            if self.candidates < 1:
                raise ConfigError("need at least one candidate per iteration")
        else:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if not (0.0 < self.kappa < 1.0):
            raise ConfigError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.grid_size < 1:
            raise ConfigError("grid_size must be >= 1")
        if not (0.0 <= self.p_mut <= 1.0):
            raise ConfigError(f"p_mut must lie in [0, 1], got {self.p_mut}")
        if self.elite_size < 1:
            raise ConfigError("elite_size must be >= 1")


# Sweep presets for the two budget parameters, kept as data for experiment drivers.
FEATURE_BUDGET_SWEEP = (1, 4, 8)
TOP_K_SWEEP = (3, 10, 20)


@dataclass(frozen=True)
class IterationRecord:
    """State of the solve at the start of one iteration plus its selection outcome.

    ``lower``/``upper`` are the interval that constrained this iteration's
    ``eta`` (before narrowing); ``feasible`` refers to the iterate being
    evaluated, not the one selected.
    """

    iteration: int
    q: float
    q_x: float
    q_y: float
    ucl_sw: float
    ucl_w: float
    eta: float
    lower: float
    upper: float
    feasible: bool
    selected_rows: tuple[int, ...]
    chosen_candidate: int
    edited_rows: int


@dataclass(frozen=True)
class SolveReport:
    """Final cohort (present only when certified), trajectory, and config echo.

    ``last_iterate`` always carries the values the final certification check
    ran on, so uncertified runs can still surface their progress without a
    counterfactual cohort being claimed.
    """

    cohort: CohortMatrix | None
    certified: bool
    trajectory: tuple[IterationRecord, ...]
    config: SolverConfig
    final: dict[str, float]
    iterations_run: int
    last_iterate: np.ndarray = field(default=None, repr=False)
    iterates: tuple[np.ndarray, ...] | None = None


def certify(
    x: np.ndarray,
    x_ref: np.ndarray,
    y_target: np.ndarray,
    predictor: Predictor,
    projections: ProjectionSet,
    delta: float,
    alpha: float,
    u_x: float,
    u_y: float,
    grid_size: int = 100,
    square_integrand: bool = True,
) -> tuple[bool, float, float]:
    """Check both upper confidence limits against their bounds.

    Returns ``(feasible, ucl_sw, ucl_w)`` with ``feasible`` true exactly when
    both limits are within bounds.
    """
    from .transport import ucl_sw2, ucl_w2

    y = query(predictor, x)
    sw = ucl_sw2(x, x_ref, projections, delta, alpha, grid_size, square_integrand)
    w = ucl_w2(y, y_target, delta, alpha, grid_size, square_integrand)
    return (sw.ucl <= u_x and w.ucl <= u_y), sw.ucl, w.ucl


class SolveEngine:
    """Stateful driver for one solve; callers normally use :func:`solve`.

    Keeps per-row projection and prediction caches so that candidate scoring
    re-queries the predictor only on edited rows.
    """

    def __init__(
        self,
        factual: CohortMatrix,
        y_target: np.ndarray,
        predictor: Predictor,
        config: SolverConfig,
        threads: int = 1,
    ):
        y_target = np.asarray(y_target, dtype=float).ravel()
        if y_target.shape[0] != factual.row_count:
            raise ConfigError(
                f"target has {y_target.shape[0]} values for {factual.row_count} rows"
            )
        config.validate(factual.row_count)
        self.config = config
        self.threads = max(1, int(threads))
        self.schema = factual.schema
        self.factual = factual
        self.x_ref = factual.values.copy()
        self.y_target = y_target
        self.predictor = predictor

        d = factual.dim
        self.projections = sample_projections(d, config.projections, config.seed)
        self.tables = build_embeddings(self.schema, config.seed)
        self.dirs = self.projections.directions  # N x d

        self.x = self.x_ref.copy()
        self.p = self.x @ self.dirs.T                       # n x N cached projections
        self.p_ref = self.x_ref @ self.dirs.T               # n x N
        self.p_ref_sorted = np.sort(self.p_ref, axis=0)
        self.p_ref_order = np.argsort(self.p_ref, axis=0, kind="stable")
        self.y_target_sorted = np.sort(y_target)
        self.y_target_order = np.argsort(y_target, kind="stable")
        self.y = self._predict_rows(self.x, iteration=0)    # n cached outputs

        self.state = EtaState(eta=0.5, lower=0.0, upper=1.0, kappa=config.kappa)
        self.elite: tuple[Edit, ...] = ()
        self.u_grid = _trim_grid(config.delta, config.grid_size)
        self.best_violation = math.inf
        self.best_snapshot: np.ndarray | None = None
        self.best_ucls = (math.inf, math.inf)

    # -- cached-path numerics -------------------------------------------------

    def _predict_rows(self, rows: np.ndarray, iteration: int) -> np.ndarray:
        if rows.shape[0] == 0:
            return np.zeros(0)
        try:
            return query(self.predictor, rows)
        except PredictorError as exc:
            raise PredictorError(f"iteration {iteration}: {exc}") from exc

    def _q_parts(self, p_mat: np.ndarray, y_vec: np.ndarray) -> tuple[float, float]:
        """Input and output squared costs via from-scratch sorting on cached values."""
        s = np.sort(p_mat, axis=0)
        diff = s - self.p_ref_sorted
        q_x = float((diff * diff).mean(axis=0).mean())
        dy = np.sort(y_vec) - self.y_target_sorted
        q_y = float(np.mean(dy * dy))
        return q_x, q_y

    def _ucls(self) -> tuple[float, float]:
        cfg = self.config
        n = self.x.shape[0]
        p_sorted = np.sort(self.p, axis=0)
        per_proj = np.empty(self.projections.count)
        for k in range(self.projections.count):
            per_proj[k] = float(
                np.mean(
                    _band_integrand(
                        p_sorted[:, k],
                        self.p_ref_sorted[:, k],
                        self.u_grid,
                        n,
                        cfg.alpha,
                        cfg.ucl_square_integrand,
                    )
                )
            )
        ucl_sw = float(np.mean(per_proj))
        ucl_w = float(
            np.mean(
                _band_integrand(
                    np.sort(self.y),
                    self.y_target_sorted,
                    self.u_grid,
                    n,
                    cfg.alpha,
                    cfg.ucl_square_integrand,
                )
            )
        )
        return ucl_sw, ucl_w

    def _plans(self) -> tuple[np.ndarray, np.ndarray]:
        """Current input plans (N x n) and output plan from the cached values."""
        n_proj = self.projections.count
        n = self.x.shape[0]
        plans = np.empty((n_proj, n), dtype=np.intp)
        for k in range(n_proj):
            order = np.argsort(self.p[:, k], kind="stable")
            plans[k, order] = self.p_ref_order[:, k]
        y_order = np.argsort(self.y, kind="stable")
        output_plan = np.empty(n, dtype=np.intp)
        output_plan[y_order] = self.y_target_order
        return plans, output_plan

    def _row_scores(
        self, plans: np.ndarray, output_plan: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        n_proj = self.projections.count
        n = self.x.shape[0]
        matched = self.p_ref[plans.T, np.arange(n_proj)]
        diff = self.p - matched
        qx = np.sum(diff * diff, axis=1) / (n_proj * n)
        dy = self.y - self.y_target[output_plan]
        qy = dy * dy / n
        return qx, qy

    def _score_candidate(
        self, edit: Edit, iteration: int
    ) -> tuple[float, float, np.ndarray, np.ndarray, np.ndarray]:
        """(q_x, q_y, rows, new projections, new outputs) for one candidate."""
        if not edit:
            q_x, q_y = self._q_parts(self.p, self.y)
            empty = np.empty(0, dtype=np.intp)
            return q_x, q_y, empty, np.empty((0, self.p.shape[1])), np.empty(0)
        rows = np.array(sorted(edit), dtype=np.intp)
        new_rows = np.stack([edit[int(i)] for i in rows])
        p_new = new_rows @ self.dirs.T
        y_new = self._predict_rows(new_rows, iteration)
        p_cand = self.p.copy()
        p_cand[rows] = p_new
        y_cand = self.y.copy()
        y_cand[rows] = y_new
        q_x, q_y = self._q_parts(p_cand, y_cand)
        return q_x, q_y, rows, p_new, y_new

    # -- the outer loop -------------------------------------------------------

    def step(self, iteration: int) -> IterationRecord:
        """One evaluate/score/gate/propose/select iteration; mutates the engine."""
        cfg = self.config
        ucl_sw, ucl_w = self._ucls()
        gap_x = cfg.u_x - ucl_sw
        gap_y = cfg.u_y - ucl_w
        feasible = ucl_sw <= cfg.u_x and ucl_w <= cfg.u_y

        violation = max(0.0, -gap_x) + max(0.0, -gap_y)
        if violation < self.best_violation:
            self.best_violation = violation
            self.best_snapshot = self.x.copy()
            self.best_ucls = (ucl_sw, ucl_w)

        interval_lower, interval_upper = self.state.lower, self.state.upper
        eta = balance_eta(gap_x, gap_y, self.state)
        self.state = narrow_interval(eta, self.state)

        plans, output_plan = self._plans()
        qx, qy = self._row_scores(plans, output_plan)
        scores = (1.0 - eta) * qx + eta * qy
        selected = top_k(scores, cfg.top_k)

        g = guidance(self.x, self.x_ref, self.projections, plans, selected)
        vectors = {int(i): g.vectors[pos] for pos, i in enumerate(g.rows)}

        streams = ProposalStreams(cfg.seed, iteration)
        if cfg.optimizer == MONTE_CARLO:
            batch = monte_carlo_propose(
                self.x, selected, vectors, cfg.cone, cfg.feature_budget,
                cfg.candidates, self.schema, self.tables, streams,
                cfg.per_feature_lambda,
            )
        else:
            batch = genetic_propose(
                self.x, selected, vectors, cfg.cone, cfg.feature_budget,
                cfg.candidates, self.schema, self.tables, streams, self.elite,
                cfg.p_mut, cfg.per_feature_lambda,
            )

        results = self._score_batch(batch, iteration)
        q_values = np.array([(1.0 - eta) * r[0] + eta * r[1] for r in results])
        chosen = int(np.argmin(q_values))  # first minimum: the no-op wins ties

        q_x0, q_y0 = results[0][0], results[0][1]
        _, _, rows, p_new, y_new = results[chosen]
        edited = 0
        if rows.size:
            new_rows = np.stack([batch.edits[chosen][int(i)] for i in rows])
            edited = int(np.sum(np.any(new_rows != self.x[rows], axis=1)))
            x_next = self.x.copy()
            x_next[rows] = new_rows
            self.x = x_next
            self.p[rows] = p_new
            self.y[rows] = y_new

        if cfg.optimizer == GENETIC:
            proposal_order = sorted(range(1, batch.count), key=lambda m: (q_values[m], m))
            self.elite = tuple(
                batch.edits[m] for m in proposal_order[: cfg.elite_size]
            )

        return IterationRecord(
            iteration=iteration,
            q=float(q_values[0]),
            q_x=q_x0,
            q_y=q_y0,
            ucl_sw=ucl_sw,
            ucl_w=ucl_w,
            eta=eta,
            lower=interval_lower,
            upper=interval_upper,
            feasible=feasible,
            selected_rows=tuple(int(i) for i in selected),
            chosen_candidate=chosen,
            edited_rows=edited,
        )

    def _score_batch(self, batch: CandidateBatch, iteration: int) -> list[tuple]:
        if self.threads > 1 and self.predictor.capabilities.concurrent_safe:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(
                    pool.map(lambda e: self._score_candidate(e, iteration), batch.edits)
                )
        return [self._score_candidate(edit, iteration) for edit in batch.edits]

    def final_state(self) -> tuple[float, float, float, float]:
        """(q_x, q_y, ucl_sw, ucl_w) of the current iterate."""
        q_x, q_y = self._q_parts(self.p, self.y)
        ucl_sw, ucl_w = self._ucls()
        return q_x, q_y, ucl_sw, ucl_w


def solve(
    factual: CohortMatrix,
    y_target: np.ndarray,
    predictor: Predictor,
    config: SolverConfig,
    threads: int = 1,
) -> SolveReport:
    """Run the full budgeted propose-and-select solve.

    Starts from the factual cohort, runs the configured number of iterations,
    and certifies the final iterate. When the final iterate fails
    certification but an earlier iterate had the smallest constraint violation
    and passes, that iterate is returned instead (a deterministic rule). The
    cohort field is present exactly when certification holds; the trajectory
    is always populated.
    """
    engine = SolveEngine(factual, y_target, predictor, config, threads=threads)
    trajectory: list[IterationRecord] = []
    iterates: list[np.ndarray] | None = [] if config.record_iterates else None

    iterations_run = 0
    for t in range(1, config.iterations + 1):
        if config.stop_when_certified:
            ucl_sw, ucl_w = engine._ucls()
            if ucl_sw <= config.u_x and ucl_w <= config.u_y:
                break
        record = engine.step(t)
        trajectory.append(record)
        iterations_run = t
        if iterates is not None:
            iterates.append(engine.x.copy())
        log.debug(
            "iteration %d: q=%.6g eta=%.4f feasible=%s edited=%d",
            t, record.q, record.eta, record.feasible, record.edited_rows,
        )

    q_x, q_y, ucl_sw, ucl_w = engine.final_state()
    certified = ucl_sw <= config.u_x and ucl_w <= config.u_y
    final_values = engine.x

    if not certified and engine.best_violation == 0.0 and engine.best_snapshot is not None:
        # A recorded iterate satisfied both bounds; fall back to the best one.
        final_values = engine.best_snapshot
        engine.x = final_values.copy()
        engine.p = final_values @ engine.dirs.T
        engine.y = engine._predict_rows(final_values, iteration=iterations_run + 1)
        q_x, q_y, ucl_sw, ucl_w = engine.final_state()
        certified = ucl_sw <= config.u_x and ucl_w <= config.u_y

    eta = engine.state.eta
    final = {
        "q": (1.0 - eta) * q_x + eta * q_y,
        "q_x": q_x,
        "q_y": q_y,
        "ucl_sw": ucl_sw,
        "ucl_w": ucl_w,
        "eta": eta,
    }
    cohort = CohortMatrix(factual.schema, final_values) if certified else None
    return SolveReport(
        cohort=cohort,
        certified=certified,
        trajectory=tuple(trajectory),
        config=config,
        final=final,
        iterations_run=iterations_run,
        last_iterate=final_values.copy(),
        iterates=tuple(iterates) if iterates is not None else None,
    )
