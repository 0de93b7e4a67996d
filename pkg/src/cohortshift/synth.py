"""Bundled synthetic tasks: seeded generators producing a cohort, a trained
built-in predictor, and a target output distribution at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .predict import Predictor, fit_builtin, query
from .tabular import CohortMatrix, FeatureSchema, project_rows

GENERATORS = ("two-gaussians-linear", "mixed-type-stumps")


@dataclass(frozen=True)
class SyntheticTask:
    name: str
    cohort: CohortMatrix
    predictor: Predictor
    predictor_spec: dict
    target: np.ndarray
    seed: int


def _check_n(n: int) -> None:
    if n < 10:
        raise ConfigError(f"generators require n >= 10, got {n}")


def two_gaussians_linear(
    n: int, seed: int, shift: float = 1.0, model: str = "linear"
) -> SyntheticTask:
    """Two tight Gaussian clusters in four dimensions with a linear response.

    The clusters separate along coordinates the response ignores, so the
    output distribution stays unimodal and narrow while the inputs carry
    visible structure. ``model`` selects the predictor fitted to the same
    ground truth: ``linear`` or ``stump_ensemble`` (the non-differentiable
    variant of the identical task).
    """
    _check_n(n)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(101,)))
    schema = tuple(
        FeatureSchema(name=f"f{j}", kind="numerical", range=(-3.0, 3.0)) for j in range(4)
    )
    centers = np.array([[0.0, 0.75, 0.75, 0.0], [0.0, -0.75, -0.75, 0.0]])
    labels = rng.integers(0, 2, size=n)
    values = centers[labels] + 0.1 * rng.standard_normal((n, 4))
    values = project_rows(values, schema)

    # The response is steep and depends only on the coordinates shared by both
    # clusters, so the output distribution stays unimodal and narrow while a
    # unit output shift needs only a small input move.
    w_true = np.array([3.0, 0.0, 0.0, 1.15])
    x_train = np.clip(1.4 * rng.standard_normal((2000, 4)), -3.0, 3.0)
    y_train = x_train @ w_true + 0.01 * rng.standard_normal(2000)
    if model == "linear":
        predictor = fit_builtin("linear", x_train, y_train, seed=seed)
    elif model == "stump_ensemble":
        predictor = fit_builtin(
            "stump_ensemble", x_train, y_train, seed=seed, n_stumps=1500, shrinkage=0.08
        )
    else:
        raise ConfigError(f"unknown model {model!r} for two-gaussians-linear")

    cohort = CohortMatrix(schema, values)
    target = query(predictor, cohort.values) + shift
    return SyntheticTask(
        name="two-gaussians-linear",
        cohort=cohort,
        predictor=predictor,
        predictor_spec=predictor.spec(),
        target=target,
        seed=seed,
    )


def mixed_type_stumps(n: int, seed: int, shift: float = 0.5) -> SyntheticTask:
    """Mixed numerical/categorical cohort scored by a boosted-stump model.

    Includes an immutable numerical feature and two categorical features (one
    with a restricted admissible set), so actionability constraints are
    exercised end to end.
    """
    _check_n(n)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(102,)))
    schema = (
        FeatureSchema(name="amount", kind="numerical", range=(0.0, 10.0)),
        FeatureSchema(name="age", kind="numerical", range=(18.0, 90.0), immutable=True),
        FeatureSchema(name="score", kind="numerical", range=(-4.0, 4.0)),
        FeatureSchema(
            name="tier",
            kind="categorical",
            levels=("bronze", "silver", "gold"),
            admissible_levels=("bronze", "silver", "gold"),
        ),
        FeatureSchema(
            name="channel",
            kind="categorical",
            levels=("web", "phone", "branch", "agent"),
            admissible_levels=("web", "phone", "branch"),
        ),
    )
    amount = np.clip(5.0 + 1.2 * rng.standard_normal(n), 0.0, 10.0)
    age = np.clip(45.0 + 12.0 * rng.standard_normal(n), 18.0, 90.0)
    score = np.clip(0.8 * rng.standard_normal(n), -4.0, 4.0)
    tier = rng.choice(3, size=n, p=(0.5, 0.3, 0.2)).astype(float)
    channel = rng.choice(4, size=n, p=(0.4, 0.3, 0.2, 0.1)).astype(float)
    values = np.column_stack([amount, age, score, tier, channel])
    cohort = CohortMatrix(schema, values)

    # Only the categorical features move the response; the numerical ones are
    # plausibility dimensions the solver must leave intact.
    def ground_truth(m: np.ndarray, noise: np.ndarray) -> np.ndarray:
        return 0.4 * m[:, 3] + 0.2 * (m[:, 4] == 2.0) + noise

    n_train = 800
    train = np.column_stack(
        [
            np.clip(5.0 + 2.2 * rng.standard_normal(n_train), 0.0, 10.0),
            np.clip(45.0 + 15.0 * rng.standard_normal(n_train), 18.0, 90.0),
            np.clip(1.6 * rng.standard_normal(n_train), -4.0, 4.0),
            rng.integers(0, 3, size=n_train).astype(float),
            rng.integers(0, 4, size=n_train).astype(float),
        ]
    )
    y_train = ground_truth(train, 0.02 * rng.standard_normal(n_train))
    predictor = fit_builtin(
        "stump_ensemble", train, y_train, seed=seed, n_stumps=300, shrinkage=0.25
    )
    target = query(predictor, cohort.values) + shift
    return SyntheticTask(
        name="mixed-type-stumps",
        cohort=cohort,
        predictor=predictor,
        predictor_spec=predictor.spec(),
        target=target,
        seed=seed,
    )


def make_task(name: str, n: int, seed: int, shift: float | None = None, model: str | None = None) -> SyntheticTask:
    """Dispatch by generator name; unknown names raise :class:`ConfigError`."""
    if name == "two-gaussians-linear":
        return two_gaussians_linear(
            n, seed, shift=1.0 if shift is None else shift, model=model or "linear"
        )
    if name == "mixed-type-stumps":
        if model not in (None, "stump_ensemble"):
            raise ConfigError(f"mixed-type-stumps does not support model {model!r}")
        return mixed_type_stumps(n, seed, shift=0.5 if shift is None else shift)
    raise ConfigError(f"unknown generator {name!r}; available: {', '.join(GENERATORS)}")
