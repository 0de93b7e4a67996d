"""Model-agnostic means process-agnostic: scoring over a pipe.

The solver only ever calls predict(rows). Here the model lives in a separate
process speaking newline-delimited JSON on stdin/stdout, so it could be any
language or framework; the solve is identical to the in-process one.
"""

import math
import sys
import textwrap

import numpy as np

from cohortshift import ConeParams, SolverConfig, external_predictor, solve, two_gaussians_linear
from cohortshift.predict import LinearPredictor, query

task = two_gaussians_linear(n=120, seed=4)

# A single active weight keeps the arithmetic identical on both sides of the
# pipe: summing exact zeros is bit-exact regardless of accumulation order.
model = LinearPredictor(weights=np.array([1.5, 0.0, 0.0, 0.0]), intercept=0.25)
target = query(model, task.cohort.values) + 1.0

# A tiny foreign "model server": reads requests, answers with the same scores.
child = textwrap.dedent(
    """
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        outs = [1.5 * row[0] + 0.25 for row in req["rows"]]
        sys.stdout.write(json.dumps({"id": req["id"], "outputs": outs}) + "\\n")
        sys.stdout.flush()
    """
)

config = SolverConfig(
    u_x=0.8, u_y=0.2, projections=48, top_k=5, feature_budget=3,
    candidates=12, iterations=40, seed=4,
    cone=ConeParams(phi=math.pi, lambda_max=0.1),
)

local = solve(task.cohort, target, model, config)

with external_predictor([sys.executable, "-c", child]) as remote_model:
    sample = query(remote_model, task.cohort.values[:3])
    print("remote outputs for three rows:", np.round(sample, 4))
    remote = solve(task.cohort, target, remote_model, config)

print(f"in-process  final objective: {local.final['q']:.10f}")
print(f"out-of-proc final objective: {remote.final['q']:.10f}")
print("trajectories identical:", local.trajectory == remote.trajectory)
