"""Evaluation metrics and export: input/output transport distances, kernel
two-sample discrepancy, per-sample transport profiles, and CDF dumps.

Headline distances are reported both squared and as square roots so that no
reader has to guess the convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .objective import row_scores_input
from .tabular import CATEGORICAL, CohortMatrix
from .transport import ProjectionSet, sw2, w2_1d


@dataclass(frozen=True)
class MetricsReport:
    ot_x_sq: float
    ot_x: float
    ot_y_sq: float
    ot_y: float
    mmd: float
    per_sample_otx: np.ndarray = field(repr=False)
    n: int = 0
    d: int = 0
    n_projections: int = 0
    seed: int = 0


def evaluate(
    x: CohortMatrix,
    x_ref: CohortMatrix,
    y: np.ndarray,
    y_target: np.ndarray,
    projections: ProjectionSet,
) -> MetricsReport:
    """Full metric set for an edited cohort against its factual reference."""
    if x.schema != x_ref.schema:
        raise ValueError("cohorts must share a schema")
    if x.row_count != x_ref.row_count:
        raise ValueError(f"cohorts must share n, got {x.row_count} and {x_ref.row_count}")
    y = np.asarray(y, dtype=float).ravel()
    y_target = np.asarray(y_target, dtype=float).ravel()
    if y.shape[0] != x.row_count or y_target.shape[0] != x.row_count:
        raise ValueError("output vectors must have one value per row")
    ot_x_sq, plans = sw2(x.values, x_ref.values, projections)
    ot_y_sq, _ = w2_1d(y, y_target)
    per_sample = row_scores_input(x.values, x_ref.values, projections, plans)
    return MetricsReport(
        ot_x_sq=ot_x_sq,
        ot_x=float(np.sqrt(ot_x_sq)),
        ot_y_sq=ot_y_sq,
        ot_y=float(np.sqrt(ot_y_sq)),
        mmd=mmd(x, x_ref),
        per_sample_otx=per_sample,
        n=x.row_count,
        d=x.dim,
        n_projections=projections.count,
        seed=projections.seed,
    )


def _kernel_features(cohort: CohortMatrix, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Standardized numerical columns concatenated with one-hot categoricals."""
    cols = []
    for j, feat in enumerate(cohort.schema):
        col = cohort.values[:, j]
        if feat.kind == CATEGORICAL:
            onehot = np.zeros((cohort.row_count, feat.n_levels))
            onehot[np.arange(cohort.row_count), col.astype(int)] = 1.0
            cols.append(onehot)
        else:
            scale = std[j] if std[j] > 0 else 1.0
            cols.append(((col - mean[j]) / scale)[:, None])
    return np.hstack(cols)


def mmd(a: CohortMatrix, b: CohortMatrix) -> float:
    """Kernel two-sample discrepancy between two cohorts.

    Unbiased U-statistic estimate of the squared discrepancy under a Gaussian
    kernel, clipped at zero, then square-rooted. Numerical features are
    standardized with pooled moments, categoricals one-hot encoded; the
    bandwidth is the median pairwise distance on the pooled sample.
    """
    if a.schema != b.schema:
        raise ValueError("cohorts must share a schema")
    m, n = a.row_count, b.row_count
    if m < 2 or n < 2:
        raise ValueError(f"need at least 2 rows per cohort, got {m} and {n}")
    pooled = np.vstack([a.values, b.values])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    fa = _kernel_features(a, mean, std)
    fb = _kernel_features(b, mean, std)
    bandwidth = float(np.median(pdist(np.vstack([fa, fb]))))
    if bandwidth <= 0:
        bandwidth = 1.0
    gamma = 1.0 / (2.0 * bandwidth * bandwidth)
    kaa = np.exp(-gamma * cdist(fa, fa, "sqeuclidean"))
    kbb = np.exp(-gamma * cdist(fb, fb, "sqeuclidean"))
    kab = np.exp(-gamma * cdist(fa, fb, "sqeuclidean"))
    term_a = (kaa.sum() - np.trace(kaa)) / (m * (m - 1))
    term_b = (kbb.sum() - np.trace(kbb)) / (n * (n - 1))
    mmd_sq = term_a + term_b - 2.0 * kab.mean()
    return float(np.sqrt(max(mmd_sq, 0.0)))


def export_cdf(values: np.ndarray, path: str) -> None:
    """Write the empirical CDF of ``values`` as a two-column CSV."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 1:
        raise ValueError("need at least one value")
    ordered = np.sort(values)
    n = ordered.size
    lines = ["value,cumulative_probability"]
    for i, v in enumerate(ordered, start=1):
        lines.append(f"{format(v, '.17g')},{i / n!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def metrics_json_payload(report: MetricsReport) -> dict:
    """The stable key set of the metrics file."""
    return {
        "ot_x": report.ot_x,
        "ot_x_sq": report.ot_x_sq,
        "ot_y": report.ot_y,
        "ot_y_sq": report.ot_y_sq,
        "mmd": report.mmd,
        "n": report.n,
        "d": report.d,
        "N_projections": report.n_projections,
        "seed": report.seed,
    }


def write_metrics_json(report: MetricsReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics_json_payload(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
