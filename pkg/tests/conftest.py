import numpy as np
import pytest

from cohortshift import CohortMatrix, FeatureSchema


@pytest.fixture
def simple_schema():
    return (
        FeatureSchema(name="age", kind="numerical", range=(18.0, 90.0)),
        FeatureSchema(name="job", kind="categorical", levels=("clerk", "none")),
    )


@pytest.fixture
def mixed_schema():
    return (
        FeatureSchema(name="x0", kind="numerical", range=(-5.0, 5.0)),
        FeatureSchema(name="x1", kind="numerical", range=(0.0, 10.0), immutable=True),
        FeatureSchema(name="x2", kind="numerical", range=(-2.0, 2.0)),
        FeatureSchema(
            name="c0",
            kind="categorical",
            levels=("a", "b", "c"),
            admissible_levels=("a", "b"),
        ),
        FeatureSchema(name="c1", kind="categorical", levels=("u", "v", "w", "z")),
    )


def random_mixed_cohort(schema, n, rng):
    cols = []
    for feat in schema:
        if feat.kind == "numerical":
            lo, hi = feat.range
            cols.append(rng.uniform(lo, hi, size=n))
        else:
            cols.append(rng.integers(0, feat.n_levels, size=n).astype(float))
    return CohortMatrix(schema, np.column_stack(cols))


@pytest.fixture
def mixed_cohort(mixed_schema):
    return random_mixed_cohort(mixed_schema, 40, np.random.default_rng(11))
