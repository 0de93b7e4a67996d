import json
import sys
import textwrap

import numpy as np
import pytest

from cohortshift import (
    PredictorError,
    external_predictor,
    fit_builtin,
    predictor_from_spec,
)
from cohortshift.predict import LinearPredictor, query

ECHO_FIRST_COLUMN = textwrap.dedent(
    """
    import json, sys
    for line in sys.stdin:
        req = json.loads(line)
        out = {"id": req["id"], "outputs": [row[0] for row in req["rows"]]}
        sys.stdout.write(json.dumps(out) + "\\n")
        sys.stdout.flush()
    """
)


def echo_command():
    return [sys.executable, "-c", ECHO_FIRST_COLUMN]


class TestQueryContract:
    def test_empty_batch(self):
        p = LinearPredictor(weights=np.array([1.0, 0.0]), intercept=0.0)
        assert query(p, np.empty((0, 2))).shape == (0,)

    def test_linear_definition(self):
        p = LinearPredictor(weights=np.array([1.0, 0.0]), intercept=0.0)
        assert query(p, np.array([[2.5, 9.0]]))[0] == 2.5

    def test_purity(self):
        rng = np.random.default_rng(0)
        p = fit_builtin("linear", rng.normal(size=(50, 3)), rng.normal(size=50))
        rows = rng.normal(size=(10, 3))
        base = query(p, rows)
        for _ in range(100):
            assert np.array_equal(query(p, rows), base)

    def test_nonfinite_output_rejected(self):
        class Bad:
            capabilities = LinearPredictor(np.zeros(1), 0.0).capabilities

            def predict(self, rows):
                return np.full(rows.shape[0], np.inf)

        with pytest.raises(PredictorError, match="non-finite"):
            query(Bad(), np.zeros((3, 1)))

    def test_wrong_length_rejected(self):
        class Short:
            capabilities = LinearPredictor(np.zeros(1), 0.0).capabilities

            def predict(self, rows):
                return np.zeros(rows.shape[0] - 1)

        with pytest.raises(PredictorError, match="outputs"):
            query(Short(), np.zeros((3, 1)))


class TestFitBuiltin:
    def test_linear_recovers_weights(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(200, 4))
        w = np.array([1.5, -2.0, 0.25, 0.0])
        y = x @ w + 3.0
        p = fit_builtin("linear", x, y)
        assert np.allclose(p.weights, w, atol=1e-6)
        assert p.intercept == pytest.approx(3.0, abs=1e-6)

    def test_linear_singular_design(self):
        x = np.zeros((10, 2))
        with pytest.raises(PredictorError, match="singular"):
            fit_builtin("linear", x, np.zeros(10))

    def test_logistic_monotone_on_separable_data(self):
        x = np.linspace(-2, 2, 40).reshape(-1, 1)
        y = (x[:, 0] > 0).astype(float)
        p = fit_builtin("logistic", x, y)
        outputs = query(p, x)
        assert np.all(np.diff(outputs) >= -1e-12)
        assert outputs.min() >= 0.0 and outputs.max() <= 1.0

    def test_logistic_requires_binary_targets(self):
        with pytest.raises(PredictorError, match="0, 1"):
            fit_builtin("logistic", np.zeros((5, 1)), np.arange(5.0))

    def test_stump_ensemble_piecewise_constant(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(300, 2))
        y = np.where(x[:, 0] > 0, 1.0, -1.0) + 0.1 * x[:, 1]
        p = fit_builtin("stump_ensemble", x, y, n_stumps=30)
        thresholds = sorted({s.threshold for s in p.stumps if s.feature == 0})
        base = np.array([[thresholds[0] - 0.5, 0.0]])
        nearby = base + np.array([[1e-9, 0.0]])
        assert query(p, base)[0] == query(p, nearby)[0]

    def test_stump_ensemble_fits_step_function(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1, 1, size=(400, 1))
        y = np.where(x[:, 0] > 0.2, 2.0, -1.0)
        p = fit_builtin("stump_ensemble", x, y, n_stumps=60)
        pred = query(p, x)
        assert np.sqrt(np.mean((pred - y) ** 2)) < 0.1

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            fit_builtin("forest", np.zeros((5, 1)), np.zeros(5))


class TestSpecRoundTrip:
    @pytest.mark.parametrize("kind", ["linear", "logistic", "stump_ensemble"])
    def test_round_trip_exact(self, kind):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(80, 3))
        y = (x[:, 0] > 0).astype(float) if kind == "logistic" else x @ [1.0, -0.5, 2.0]
        p = fit_builtin(kind, x, y, n_stumps=20)
        q = predictor_from_spec(json.loads(json.dumps(p.spec())))
        rows = rng.normal(size=(25, 3))
        assert np.array_equal(query(p, rows), query(q, rows))


class TestExternalPredictor:
    def test_echo_first_column(self):
        with external_predictor(echo_command()) as p:
            rows = np.array([[2.5, 1.0], [-3.0, 9.0]])
            assert np.array_equal(query(p, rows), [2.5, -3.0])

    def test_agrees_with_in_process_model(self, tmp_path):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(60, 3))
        y = x @ [2.0, -1.0, 0.5] + 1.0
        model = fit_builtin("linear", x, y)
        spec_path = tmp_path / "model.json"
        spec_path.write_text(json.dumps(model.spec()))
        script = textwrap.dedent(
            f"""
            import json, sys
            spec = json.load(open({str(spec_path)!r}))
            w = spec["weights"]; b = spec["intercept"]
            for line in sys.stdin:
                req = json.loads(line)
                outs = [sum(wi * vi for wi, vi in zip(w, row)) + b for row in req["rows"]]
                sys.stdout.write(json.dumps({{"id": req["id"], "outputs": outs}}) + "\\n")
                sys.stdout.flush()
            """
        )
        rows = rng.normal(size=(20, 3))
        with external_predictor([sys.executable, "-c", script]) as p:
            remote = query(p, rows)
        assert np.max(np.abs(remote - query(model, rows))) < 1e-12

    def test_float_round_trip_exact(self):
        awkward = np.array([[0.1 + 0.2], [1.0 / 3.0], [1e-308], [123456789.123456789]])
        with external_predictor(echo_command()) as p:
            assert np.array_equal(query(p, awkward), awkward[:, 0])

    def test_dead_process_raises(self):
        with pytest.raises(PredictorError):
            external_predictor([sys.executable, "-c", "import sys; sys.exit(0)"])

    def test_process_killed_mid_run(self):
        script = textwrap.dedent(
            """
            import json, sys
            n = 0
            for line in sys.stdin:
                req = json.loads(line)
                if n >= 2:
                    sys.exit(1)
                n += 1
                out = {"id": req["id"], "outputs": [0.0] * len(req["rows"])}
                sys.stdout.write(json.dumps(out) + "\\n")
                sys.stdout.flush()
            """
        )
        p = external_predictor([sys.executable, "-c", script])
        query(p, np.zeros((2, 1)))
        with pytest.raises(PredictorError, match="exited|died|timed"):
            for _ in range(3):
                query(p, np.zeros((2, 1)))
        p.close()

    def test_mismatched_id_rejected(self):
        script = textwrap.dedent(
            """
            import json, sys
            for line in sys.stdin:
                req = json.loads(line)
                out = {"id": 777, "outputs": [0.0] * len(req["rows"])}
                sys.stdout.write(json.dumps(out) + "\\n")
                sys.stdout.flush()
            """
        )
        with pytest.raises(PredictorError, match="id"):
            external_predictor([sys.executable, "-c", script])

    def test_timeout(self):
        script = "import time\ntime.sleep(60)\n"
        with pytest.raises(PredictorError, match="timed out|exited"):
            external_predictor([sys.executable, "-c", script], timeout=0.5)

    def test_identical_solve_trajectories_across_process_boundary(self):
        # A single active weight makes the arithmetic order-insensitive, so
        # the in-process and out-of-process scores are bit-equal and the two
        # solves follow identical trajectories.
        import math

        from cohortshift import ConeParams, SolverConfig, solve, two_gaussians_linear

        task = two_gaussians_linear(60, seed=8)
        model = LinearPredictor(weights=np.array([2.0, 0.0, 0.0, 0.0]), intercept=0.5)
        target = query(model, task.cohort.values) + 0.8
        child = textwrap.dedent(
            """
            import json, sys
            for line in sys.stdin:
                req = json.loads(line)
                outs = [2.0 * row[0] + 0.5 for row in req["rows"]]
                sys.stdout.write(json.dumps({"id": req["id"], "outputs": outs}) + "\\n")
                sys.stdout.flush()
            """
        )
        config = SolverConfig(
            u_x=1.0, u_y=0.3, projections=24, top_k=4, feature_budget=2,
            candidates=6, iterations=15, seed=8,
            cone=ConeParams(phi=math.pi, lambda_max=0.1),
        )
        local = solve(task.cohort, target, model, config)
        with external_predictor([sys.executable, "-c", child]) as remote_model:
            remote = solve(task.cohort, target, remote_model, config)
        assert local.trajectory == remote.trajectory
        assert np.array_equal(local.last_iterate, remote.last_iterate)
