"""The guided cone: directional proposals for numeric and categorical edits.

Numeric coordinates move inside a cone around the negative transport
gradient; categorical coordinates take the same kind of step in a fixed
random embedding space and decode back through a temperature-controlled
softmin over admissible levels.
"""

import math

import numpy as np

from cohortshift import (
    ConeParams,
    FeatureSchema,
    build_embeddings,
    cone_direction,
    propose_categorical_row,
    propose_numeric_row,
)

rng = np.random.default_rng(3)

# Sampled directions stay within the half-angle of the anchor.
anchor = np.array([1.0, 0.0, 0.0])
for phi in (0.0, math.pi / 6, math.pi / 2):
    draws = [cone_direction(anchor, phi, rng) for _ in range(2000)]
    angles = [math.acos(min(1.0, float(np.dot(v, anchor)))) for v in draws]
    print(f"phi={phi:.3f}: max observed angle {max(angles):.3f}")

schema = (
    FeatureSchema(name="income", kind="numerical", range=(0.0, 100.0)),
    FeatureSchema(name="debt", kind="numerical", range=(0.0, 50.0)),
    FeatureSchema(
        name="contract",
        kind="categorical",
        levels=("monthly", "yearly", "none"),
        admissible_levels=("monthly", "yearly"),
    ),
)
tables = build_embeddings(schema, seed=0)
row = np.array([40.0, 20.0, 2.0])  # contract currently "none"

# Guidance says income is too high relative to the factual cohort, so the
# cone biases income downward.
g = np.array([0.8, 0.0, 0.0])
cone = ConeParams(phi=math.pi / 8, lambda_max=0.2)
moves = [
    propose_numeric_row(row, np.array([0, 1]), g, cone, schema, rng)[0] for _ in range(500)
]
print(f"income moves downward in {np.mean(np.array(moves) < row[0]):.0%} of draws")

# The decode temperature trades exploitation for exploration. "none" is not
# admissible, but the no-op keeps it reachable as the current level.
for tau in (0.05, 1.0, 100.0):
    cat_cone = ConeParams(phi=math.pi / 4, lambda_max=0.3, tau=tau)
    levels = [
        int(propose_categorical_row(row, np.array([2]), g, cat_cone, tables, schema, rng)[2])
        for _ in range(2000)
    ]
    counts = np.bincount(levels, minlength=3) / len(levels)
    print(f"tau={tau:>6}: monthly {counts[0]:.2f}, yearly {counts[1]:.2f}, none {counts[2]:.2f}")
