"""End to end: shift a cohort's predicted outputs by +1 with certification.

A bundled synthetic task supplies a factual cohort, a trained model, and a
target output distribution. The solver edits at most k rows per iteration,
scores every candidate on the certified objective, and returns the cohort
only when both upper confidence limits fall inside the bounds.
"""

import math

import numpy as np

from cohortshift import (
    ConeParams,
    SolverConfig,
    evaluate,
    sample_projections,
    solve,
    two_gaussians_linear,
)
from cohortshift.predict import query

task = two_gaussians_linear(n=300, seed=11, shift=1.0)
print(f"cohort: {task.cohort.row_count} rows x {task.cohort.dim} features")

config = SolverConfig(
    u_x=0.6,
    u_y=0.08,
    projections=100,
    top_k=10,
    feature_budget=3,
    candidates=32,
    iterations=120,
    optimizer="monte_carlo",
    seed=11,
    cone=ConeParams(phi=math.pi, lambda_max=0.1),
)
report = solve(task.cohort, task.target, task.predictor, config)

first, last = report.trajectory[0], report.trajectory[-1]
print(f"certified: {report.certified}")
print(f"output-side cost: {first.q_y:.4f} -> {report.final['q_y']:.5f}")
print(f"input-side cost:  {first.q_x:.4f} -> {report.final['q_x']:.5f}")
print(f"upper limits: input {report.final['ucl_sw']:.3f} (bound {config.u_x}), "
      f"output {report.final['ucl_w']:.4f} (bound {config.u_y})")

feasible_from = next((r.iteration for r in report.trajectory if r.feasible), None)
print(f"first feasible iteration: {feasible_from}")

if report.cohort is not None:
    projections = sample_projections(task.cohort.dim, config.projections, config.seed)
    y_final = query(task.predictor, report.cohort.values)
    metrics = evaluate(report.cohort, task.cohort, y_final, task.target, projections)
    moved = np.any(report.cohort.values != task.cohort.values, axis=1).sum()
    print(f"rows touched overall: {moved} of {task.cohort.row_count}")
    print(f"headline metrics: OT(x) {metrics.ot_x:.4f}, OT(y) {metrics.ot_y:.4f}, "
          f"kernel discrepancy {metrics.mmd:.4f}")
