"""Command-line front end: solve, evaluate, and synthesize.

Exit codes are a stable contract: 0 on certified completion, 1 on runtime
error, 2 on configuration error, 3 on uncertified completion. The logging
level is taken from the ``DISCOVER_LOG`` environment variable
(``error``/``info``/``debug``).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys

import jsonschema
import numpy as np

from .errors import CohortShiftError, ConfigError, CsvParseError, SchemaError
from .metrics import evaluate, export_cdf, write_metrics_json
from .predict import ExternalPredictor, Predictor, predictor_from_spec, query
from .proposals import ConeParams
from .solver import SolveReport, SolverConfig, solve
from .synth import make_task
from .tabular import decode_csv, load_csv, load_schema, save_schema
from .transport import sample_projections

log = logging.getLogger("cohortshift.cli")

EXIT_CERTIFIED = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_UNCERTIFIED = 3

CONE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "phi": {"type": "number", "minimum": 0, "maximum": math.pi},
        "lambda_max": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "tau": {"type": "number", "exclusiveMinimum": 0},
    },
}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["data", "predictor", "target", "solver", "output"],
    "properties": {
        "data": {
            "type": "object",
            "additionalProperties": False,
            "required": ["cohort", "schema"],
            "properties": {
                "cohort": {"type": "string"},
                "schema": {"type": "string"},
            },
        },
        "predictor": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["builtin", "external"]},
                "spec": {"type": "string"},
                "command": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "timeout": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "target": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "values": {"type": "string"},
                "transform": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["name"],
                    "properties": {
                        "name": {"enum": ["shift-by-c", "scale-to-mean"]},
                        "c": {"type": "number"},
                        "mean": {"type": "number"},
                    },
                },
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "required": ["U_x", "U_y"],
            "properties": {
                "U_x": {"type": "number", "minimum": 0},
                "U_y": {"type": "number", "minimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                "N": {"type": "integer", "minimum": 1},
                "k": {"type": "integer", "minimum": 1},
                "h": {"type": "integer", "minimum": 0},
                "M": {"type": "integer", "minimum": 1},
                "T": {"type": "integer", "minimum": 1},
                "optimizer": {"enum": ["monte_carlo", "genetic"]},
                "cone": CONE_SCHEMA,
                "kappa": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "seed": {"type": "integer"},
                "grid_size": {"type": "integer", "minimum": 1},
                "p_mut": {"type": "number", "minimum": 0, "maximum": 1},
                "elite_size": {"type": "integer", "minimum": 1},
                "ucl_square_integrand": {"type": "boolean"},
                "per_feature_lambda": {"type": "boolean"},
                "stop_when_certified": {"type": "boolean"},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dir"],
            "properties": {"dir": {"type": "string"}},
        },
    },
}

SYNTH_SPEC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["generator", "n", "seed"],
    "properties": {
        "generator": {"type": "string"},
        "n": {"type": "integer"},
        "seed": {"type": "integer"},
        "shift": {"type": "number"},
        "model": {"type": "string"},
    },
}


def _configure_logging() -> None:
    level_name = os.environ.get("DISCOVER_LOG", "error").lower()
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.ERROR
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_json(path: str, schema: dict, label: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {label} {path!r}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON in {label}: {exc.msg}"
        ) from exc
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        pointer = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: at {pointer}: {exc.message}") from exc
    return doc


def _solver_config(section: dict) -> SolverConfig:
    cone_doc = section.get("cone", {})
    cone = ConeParams(
        phi=cone_doc.get("phi", math.pi / 4),
        lambda_max=cone_doc.get("lambda_max", 0.1),
        tau=cone_doc.get("tau", 1.0),
    )
    return SolverConfig(
        u_x=section["U_x"],
        u_y=section["U_y"],
        alpha=section.get("alpha", 0.1),
        delta=section.get("delta", 0.05),
        projections=section.get("N", 100),
        top_k=section.get("k", 1),
        feature_budget=section.get("h", 3),
        candidates=section.get("M", 16),
        iterations=section.get("T", 50),
        optimizer=section.get("optimizer", "monte_carlo"),
        cone=cone,
        kappa=section.get("kappa", 0.1),
        seed=section.get("seed", 0),
        grid_size=section.get("grid_size", 100),
        p_mut=section.get("p_mut", 0.3),
        elite_size=section.get("elite_size", 4),
        ucl_square_integrand=section.get("ucl_square_integrand", True),
        per_feature_lambda=section.get("per_feature_lambda", False),
        stop_when_certified=section.get("stop_when_certified", False),
    )


def _resolved_config_echo(doc: dict, config: SolverConfig) -> dict:
    """The full configuration with every default made explicit."""
    return {
        "data": doc["data"],
        "predictor": doc["predictor"],
        "target": doc["target"],
        "solver": {
            "U_x": config.u_x,
            "U_y": config.u_y,
            "alpha": config.alpha,
            "delta": config.delta,
            "N": config.projections,
            "k": config.top_k,
            "h": config.feature_budget,
            "M": config.candidates,
            "T": config.iterations,
            "optimizer": config.optimizer,
            "cone": {
                "phi": config.cone.phi,
                "lambda_max": config.cone.lambda_max,
                "tau": config.cone.tau,
            },
            "kappa": config.kappa,
            "seed": config.seed,
            "grid_size": config.grid_size,
            "p_mut": config.p_mut,
            "elite_size": config.elite_size,
            "ucl_square_integrand": config.ucl_square_integrand,
            "per_feature_lambda": config.per_feature_lambda,
            "stop_when_certified": config.stop_when_certified,
        },
        "output": doc["output"],
    }


def _build_predictor(section: dict, base_dir: str) -> Predictor:
    if section["type"] == "builtin":
        if "spec" not in section:
            raise ConfigError("builtin predictor needs a 'spec' path")
        path = os.path.join(base_dir, section["spec"])
        try:
            with open(path, encoding="utf-8") as fh:
                spec = json.load(fh)
        except OSError as exc:
            raise FileNotFoundError(f"cannot read predictor spec {path!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON in predictor spec: {exc.msg}") from exc
        return predictor_from_spec(spec)
    if "command" not in section:
        raise ConfigError("external predictor needs a 'command' argv list")
    return ExternalPredictor(section["command"], timeout=section.get("timeout", 30.0))


def _load_single_column(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvParseError(f"{path}: empty file")
    start = 1 if not _is_number(lines[0]) else 0
    try:
        return np.array([float(v) for v in lines[start:]], dtype=float)
    except ValueError as exc:
        raise CsvParseError(f"{path}: cannot parse target values: {exc}") from exc


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _resolve_target(section: dict, y_factual: np.ndarray, base_dir: str) -> np.ndarray:
    if "values" in section:
        # Explicit values take precedence over any transform.
        return _load_single_column(os.path.join(base_dir, section["values"]))
    transform = section.get("transform")
    if transform is None:
        raise ConfigError("target needs either 'values' or 'transform'")
    if transform["name"] == "shift-by-c":
        if "c" not in transform:
            raise ConfigError("shift-by-c transform needs 'c'")
        return y_factual + transform["c"]
    if "mean" not in transform:
        raise ConfigError("scale-to-mean transform needs 'mean'")
    current = float(np.mean(y_factual))
    if current == 0.0:
        raise ConfigError("scale-to-mean is undefined for zero-mean factual outputs")
    return y_factual * (transform["mean"] / current)


def _dump_json(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_trajectory(report: SolveReport, path: str) -> None:
    header = "iteration,Q,Q_x,Q_y,ucl_sw,ucl_w,eta,l,r,feasible,k_edited,chosen_candidate"
    lines = [header]
    for rec in report.trajectory:
        lines.append(
            ",".join(
                [
                    str(rec.iteration),
                    repr(rec.q),
                    repr(rec.q_x),
                    repr(rec.q_y),
                    repr(rec.ucl_sw),
                    repr(rec.ucl_w),
                    repr(rec.eta),
                    repr(rec.lower),
                    repr(rec.upper),
                    "true" if rec.feasible else "false",
                    str(rec.edited_rows),
                    str(rec.chosen_candidate),
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_solve(args: argparse.Namespace) -> int:
    doc = _load_json(args.config, RUN_CONFIG_SCHEMA, "run config")
    base_dir = os.path.dirname(os.path.abspath(args.config))
    config = _solver_config(doc["solver"])
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)

    schema = load_schema(os.path.join(base_dir, doc["data"]["schema"]))
    factual = load_csv(os.path.join(base_dir, doc["data"]["cohort"]), schema)
    predictor = _build_predictor(doc["predictor"], base_dir)
    try:
        y_factual = query(predictor, factual.values)
        target = _resolve_target(doc["target"], y_factual, base_dir)
        report = solve(factual, target, predictor, config, threads=args.threads)
        # Uncertified runs still surface metrics for the last iterate; the
        # counterfactual file itself stays absent.
        final_cohort = (
            report.cohort
            if report.cohort is not None
            else factual.with_values(report.last_iterate)
        )
        y_final = query(predictor, final_cohort.values)
    finally:
        if isinstance(predictor, ExternalPredictor):
            predictor.close()

    out_dir = os.path.join(base_dir, doc["output"]["dir"])
    os.makedirs(out_dir, exist_ok=True)
    projections = sample_projections(factual.dim, config.projections, config.seed)
    metrics = evaluate(final_cohort, factual, y_final, target, projections)
    write_metrics_json(metrics, os.path.join(out_dir, "metrics.json"))
    _write_trajectory(report, os.path.join(out_dir, "trajectory.csv"))
    if report.certified and report.cohort is not None:
        decode_csv(report.cohort, os.path.join(out_dir, "counterfactual.csv"))
    _dump_json(
        {
            "certified": report.certified,
            "iterations_run": report.iterations_run,
            "final": report.final,
            "config": _resolved_config_echo(doc, config),
        },
        os.path.join(out_dir, "report.json"),
    )
    return EXIT_CERTIFIED if report.certified else EXIT_UNCERTIFIED


def cmd_evaluate(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    factual = load_csv(args.factual, schema)
    counterfactual = load_csv(args.counterfactual, schema)
    if factual.row_count != counterfactual.row_count:
        raise CohortShiftError(
            f"cohort sizes differ: factual has {factual.row_count} rows, "
            f"counterfactual has {counterfactual.row_count}"
        )
    target = _load_single_column(args.target)
    if target.shape[0] != factual.row_count:
        raise CohortShiftError(
            f"target has {target.shape[0]} values for {factual.row_count} rows"
        )
    with open(args.predictor, encoding="utf-8") as fh:
        predictor = predictor_from_spec(json.load(fh))
    y_factual = query(predictor, factual.values)
    y_counter = query(predictor, counterfactual.values)
    projections = sample_projections(factual.dim, args.projections, args.seed)
    metrics = evaluate(counterfactual, factual, y_counter, target, projections)
    os.makedirs(args.out, exist_ok=True)
    write_metrics_json(metrics, os.path.join(args.out, "metrics.json"))
    export_cdf(y_factual, os.path.join(args.out, "cdf_factual_outputs.csv"))
    export_cdf(y_counter, os.path.join(args.out, "cdf_counterfactual_outputs.csv"))
    export_cdf(target, os.path.join(args.out, "cdf_target.csv"))
    return EXIT_CERTIFIED


def cmd_synthesize(args: argparse.Namespace) -> int:
    spec = _load_json(args.spec, SYNTH_SPEC_SCHEMA, "generator spec")
    task = make_task(
        spec["generator"],
        n=spec["n"],
        seed=spec["seed"],
        shift=spec.get("shift"),
        model=spec.get("model"),
    )
    os.makedirs(args.out, exist_ok=True)
    decode_csv(task.cohort, os.path.join(args.out, "data.csv"))
    save_schema(task.cohort.schema, os.path.join(args.out, "schema.json"))
    with open(os.path.join(args.out, "target.csv"), "w", encoding="utf-8") as fh:
        fh.write("target\n")
        fh.write("\n".join(format(v, ".17g") for v in task.target) + "\n")
    _dump_json(task.predictor_spec, os.path.join(args.out, "predictor.json"))
    return EXIT_CERTIFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohortshift",
        description="Certified distributional counterfactuals for tabular cohorts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a solve from a JSON config")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_eval = sub.add_parser("evaluate", help="compute metrics for an edited cohort")
    p_eval.add_argument("--factual", required=True)
    p_eval.add_argument("--counterfactual", required=True)
    p_eval.add_argument("--target", required=True)
    p_eval.add_argument("--schema", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--predictor", required=True, help="built-in predictor spec JSON")
    p_eval.add_argument("--projections", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.set_defaults(func=cmd_evaluate)

    p_synth = sub.add_parser("synthesize", help="generate a bundled synthetic task")
    p_synth.add_argument("--spec", required=True)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=cmd_synthesize)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        log.error("%s", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CohortShiftError as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
