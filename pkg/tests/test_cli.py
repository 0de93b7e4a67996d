import hashlib
import json

import pytest

from cohortshift.cli import main


def file_hash(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_synth(tmp_path, name="two-gaussians-linear", n=80, seed=7, **extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    spec = {"generator": name, "n": n, "seed": seed, **extra}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    data_dir = tmp_path / "task"
    code = main(["synthesize", "--spec", str(spec_path), "--out", str(data_dir)])
    assert code == 0
    return data_dir


def write_config(tmp_path, data_dir, solver_overrides=None, out_name="out"):
    solver = {
        "U_x": 1.0, "U_y": 0.2, "N": 32, "k": 4, "h": 3, "M": 8, "T": 15,
        "optimizer": "monte_carlo", "seed": 7,
        "cone": {"phi": 3.141592653589793, "lambda_max": 0.1},
    }
    solver.update(solver_overrides or {})
    config = {
        "data": {
            "cohort": str(data_dir / "data.csv"),
            "schema": str(data_dir / "schema.json"),
        },
        "predictor": {"type": "builtin", "spec": str(data_dir / "predictor.json")},
        "target": {"values": str(data_dir / "target.csv")},
        "solver": solver,
        "output": {"dir": str(tmp_path / out_name)},
    }
    path = tmp_path / f"config_{out_name}.json"
    path.write_text(json.dumps(config))
    return path, tmp_path / out_name


class TestSynthesize:
    def test_deterministic_artifacts(self, tmp_path):
        d1 = write_synth(tmp_path / "a", seed=7)
        d2 = write_synth(tmp_path / "b", seed=7)
        for name in ("data.csv", "schema.json", "target.csv", "predictor.json"):
            assert file_hash(d1 / name) == file_hash(d2 / name), name

    def test_mixed_generator_has_categoricals(self, tmp_path):
        d = write_synth(tmp_path, name="mixed-type-stumps", n=40, seed=1)
        schema = json.loads((d / "schema.json").read_text())
        cats = [f for f in schema if f["kind"] == "categorical"]
        assert any(len(f["levels"]) >= 3 for f in cats)

    def test_unknown_generator_exit_2(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"generator": "nope", "n": 50, "seed": 0}))
        assert main(["synthesize", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 2

    def test_tiny_n_exit_2(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"generator": "two-gaussians-linear", "n": 0, "seed": 0}))
        assert main(["synthesize", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 2


class TestSolve:
    def test_quickstart_certifies(self, tmp_path):
        data_dir = write_synth(tmp_path)
        config_path, out_dir = write_config(tmp_path, data_dir, {"T": 60, "k": 6, "M": 16})
        code = main(["solve", "--config", str(config_path), "--threads", "1"])
        assert code == 0
        for name in ("counterfactual.csv", "metrics.json", "trajectory.csv", "report.json"):
            assert (out_dir / name).exists(), name
        report = json.loads((out_dir / "report.json").read_text())
        assert report["certified"] is True
        assert report["config"]["solver"]["T"] == 60

    def test_infeasible_bound_exit_3_no_cohort_file(self, tmp_path):
        data_dir = write_synth(tmp_path)
        config_path, out_dir = write_config(tmp_path, data_dir, {"U_y": 0.0, "T": 3}, "inf")
        code = main(["solve", "--config", str(config_path)])
        assert code == 3
        assert not (out_dir / "counterfactual.csv").exists()
        report = json.loads((out_dir / "report.json").read_text())
        assert report["certified"] is False
        assert (out_dir / "trajectory.csv").exists()
        assert (out_dir / "metrics.json").exists()

    def test_missing_data_file_exit_1(self, tmp_path):
        data_dir = write_synth(tmp_path)
        (data_dir / "data.csv").unlink()
        config_path, _ = write_config(tmp_path, data_dir)
        assert main(["solve", "--config", str(config_path)]) == 1

    def test_config_schema_violation_exit_2(self, tmp_path):
        data_dir = write_synth(tmp_path)
        config_path, _ = write_config(tmp_path, data_dir, {"alpha": 3.0})
        assert main(["solve", "--config", str(config_path)]) == 2

    def test_malformed_json_exit_2_with_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"data": \n  oops')
        assert main(["solve", "--config", str(bad)]) == 2
        err = capsys.readouterr().err
        assert ":2:" in err

    def test_determinism_across_threads(self, tmp_path):
        data_dir = write_synth(tmp_path)
        config_path, out_dir = write_config(tmp_path, data_dir, {"T": 10}, "t")
        hashes = []
        for threads in ("1", "4"):
            assert main(["solve", "--config", str(config_path), "--threads", threads]) in (0, 3)
            hashes.append(
                (file_hash(out_dir / "trajectory.csv"), file_hash(out_dir / "report.json"))
            )
        assert hashes[0] == hashes[1]

    def test_trajectory_columns(self, tmp_path):
        data_dir = write_synth(tmp_path)
        config_path, out_dir = write_config(tmp_path, data_dir, {"T": 5}, "cols")
        main(["solve", "--config", str(config_path)])
        header = (out_dir / "trajectory.csv").read_text().splitlines()[0]
        assert header == "iteration,Q,Q_x,Q_y,ucl_sw,ucl_w,eta,l,r,feasible,k_edited,chosen_candidate"


class TestEvaluate:
    def test_self_evaluation_zero_metrics(self, tmp_path):
        data_dir = write_synth(tmp_path)
        out = tmp_path / "eval"
        # target equal to the factual outputs: rebuild it from the predictor
        spec = json.loads((data_dir / "predictor.json").read_text())
        from cohortshift import load_csv, load_schema
        from cohortshift.predict import predictor_from_spec, query

        schema = load_schema(str(data_dir / "schema.json"))
        cohort = load_csv(str(data_dir / "data.csv"), schema)
        y = query(predictor_from_spec(spec), cohort.values)
        target_path = tmp_path / "self_target.csv"
        target_path.write_text("target\n" + "\n".join(format(v, ".17g") for v in y) + "\n")
        code = main([
            "evaluate",
            "--factual", str(data_dir / "data.csv"),
            "--counterfactual", str(data_dir / "data.csv"),
            "--target", str(target_path),
            "--schema", str(data_dir / "schema.json"),
            "--predictor", str(data_dir / "predictor.json"),
            "--out", str(out),
        ])
        assert code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["ot_x_sq"] == 0.0
        assert metrics["ot_y_sq"] == 0.0
        for name in ("cdf_factual_outputs.csv", "cdf_counterfactual_outputs.csv", "cdf_target.csv"):
            lines = (out / name).read_text().splitlines()
            assert lines[-1].endswith("1.0")

    def test_matches_solve_report_metrics(self, tmp_path):
        data_dir = write_synth(tmp_path)
        config_path, out_dir = write_config(
            tmp_path, data_dir, {"T": 60, "k": 6, "M": 16}, "m"
        )
        assert main(["solve", "--config", str(config_path)]) == 0
        eval_out = tmp_path / "eval"
        code = main([
            "evaluate",
            "--factual", str(data_dir / "data.csv"),
            "--counterfactual", str(out_dir / "counterfactual.csv"),
            "--target", str(data_dir / "target.csv"),
            "--schema", str(data_dir / "schema.json"),
            "--predictor", str(data_dir / "predictor.json"),
            "--projections", "32",
            "--seed", "7",
            "--out", str(eval_out),
        ])
        assert code == 0
        metrics = json.loads((eval_out / "metrics.json").read_text())
        report = json.loads((out_dir / "report.json").read_text())
        assert metrics["ot_x_sq"] == pytest.approx(report["final"]["q_x"], rel=1e-10, abs=1e-12)
        assert metrics["ot_y_sq"] == pytest.approx(report["final"]["q_y"], rel=1e-10, abs=1e-12)

    def test_size_mismatch_exit_1(self, tmp_path, capsys):
        data_dir = write_synth(tmp_path)
        short = tmp_path / "short.csv"
        lines = (data_dir / "data.csv").read_text().splitlines()
        short.write_text("\n".join(lines[:-5]) + "\n")
        code = main([
            "evaluate",
            "--factual", str(data_dir / "data.csv"),
            "--counterfactual", str(short),
            "--target", str(data_dir / "target.csv"),
            "--schema", str(data_dir / "schema.json"),
            "--predictor", str(data_dir / "predictor.json"),
            "--out", str(tmp_path / "e"),
        ])
        assert code == 1
        err = capsys.readouterr().err
        assert "80" in err and "75" in err
