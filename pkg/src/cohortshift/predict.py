"""Black-box predictor abstraction: built-in reference models and a
language-neutral external-process protocol.

The solver only ever calls ``predict(rows)``; no gradient or parameter access
exists on this interface. The wire protocol for external predictors is
newline-delimited JSON over the child's standard input/output:

    request   {"id": <int>, "rows": [[<number>, ...], ...]}
    response  {"id": <int>, "outputs": [<number>, ...]}

with matching id and length, one request in flight at a time, and the
handshake ``{"id": 0, "rows": []}`` answered by ``{"id": 0, "outputs": []}``.
"""

from __future__ import annotations

import json
import os
import select
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.special import expit

from .errors import PredictorError


@dataclass(frozen=True)
class PredictorCapabilities:
    concurrent_safe: bool = True
    batch_preferred: bool = True


@runtime_checkable
class Predictor(Protocol):
    capabilities: PredictorCapabilities

    def predict(self, rows: np.ndarray) -> np.ndarray: ...


def query(predictor: Predictor, rows: np.ndarray) -> np.ndarray:
    """Call a predictor and enforce its output contract."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise PredictorError(f"predictor input must be 2-D, got shape {rows.shape}")
    out = np.asarray(predictor.predict(rows), dtype=float).ravel()
    if out.shape[0] != rows.shape[0]:
        raise PredictorError(
            f"predictor returned {out.shape[0]} outputs for {rows.shape[0]} rows"
        )
    if out.size and not np.all(np.isfinite(out)):
        bad = int(np.nonzero(~np.isfinite(out))[0][0])
        raise PredictorError(f"predictor returned a non-finite output at row {bad}")
    return out


@dataclass(frozen=True)
class LinearPredictor:
    weights: np.ndarray
    intercept: float
    capabilities: PredictorCapabilities = PredictorCapabilities()

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return np.asarray(rows, dtype=float) @ self.weights + self.intercept

    def spec(self) -> dict:
        return {
            "kind": "linear",
            "weights": [float(w) for w in self.weights],
            "intercept": float(self.intercept),
        }


@dataclass(frozen=True)
class LogisticPredictor:
    weights: np.ndarray
    intercept: float
    capabilities: PredictorCapabilities = PredictorCapabilities()

    def predict(self, rows: np.ndarray) -> np.ndarray:
        z = np.asarray(rows, dtype=float) @ self.weights + self.intercept
        return expit(z)

    def spec(self) -> dict:
        return {
            "kind": "logistic",
            "weights": [float(w) for w in self.weights],
            "intercept": float(self.intercept),
        }


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    left: float   # contribution when value <= threshold
    right: float  # contribution when value > threshold


@dataclass(frozen=True)
class StumpEnsemblePredictor:
    """Sum of depth-1 decision trees; deliberately piecewise constant."""

    init: float
    stumps: tuple[Stump, ...]
    capabilities: PredictorCapabilities = PredictorCapabilities()

    def __post_init__(self) -> None:
        object.__setattr__(self, "_features", np.array([s.feature for s in self.stumps], dtype=np.intp))
        object.__setattr__(self, "_thresholds", np.array([s.threshold for s in self.stumps]))
        object.__setattr__(self, "_left", np.array([s.left for s in self.stumps]))
        object.__setattr__(self, "_right", np.array([s.right for s in self.stumps]))

    def predict(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if not self.stumps:
            return np.full(rows.shape[0], self.init)
        below = rows[:, self._features] <= self._thresholds
        return self.init + np.where(below, self._left, self._right).sum(axis=1)

    def spec(self) -> dict:
        return {
            "kind": "stump_ensemble",
            "init": float(self.init),
            "stumps": [
                {
                    "feature": s.feature,
                    "threshold": float(s.threshold),
                    "left": float(s.left),
                    "right": float(s.right),
                }
                for s in self.stumps
            ],
        }


def _fit_linear(x: np.ndarray, y: np.ndarray) -> LinearPredictor:
    n, d = x.shape
    design = np.hstack([x, np.ones((n, 1))])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < d + 1:
        raise PredictorError(f"singular design matrix (rank {rank} < {d + 1})")
    return LinearPredictor(weights=coef[:-1], intercept=float(coef[-1]))


def _fit_logistic(x: np.ndarray, y: np.ndarray, tol: float = 1e-8, max_iter: int = 100) -> LogisticPredictor:
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise PredictorError("logistic fitting requires targets in {0, 1}")
    n, d = x.shape
    design = np.hstack([x, np.ones((n, 1))])
    beta = np.zeros(d + 1)
    for _ in range(max_iter):
        p = expit(design @ beta)
        w = np.maximum(p * (1.0 - p), 1e-12)
        # One reweighted least-squares step with a tiny ridge for stability.
        h = design.T @ (design * w[:, None]) + 1e-10 * np.eye(d + 1)
        grad = design.T @ (y - p)
        try:
            delta = np.linalg.solve(h, grad)
        except np.linalg.LinAlgError as exc:
            raise PredictorError("singular design matrix in logistic fit") from exc
        beta = beta + delta
        if np.max(np.abs(delta)) < tol:
            break
    return LogisticPredictor(weights=beta[:-1], intercept=float(beta[-1]))


def _best_stump(x: np.ndarray, residual: np.ndarray) -> Stump | None:
    """Exhaustive best depth-1 split over all features and midpoints."""
    n, d = x.shape
    best: tuple[float, Stump] | None = None
    total = float(np.sum(residual))
    for j in range(d):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        rs = residual[order]
        csum = np.cumsum(rs)
        distinct = np.nonzero(xs[:-1] < xs[1:])[0]
        if distinct.size == 0:
            continue
        n_left = distinct + 1
        sum_left = csum[distinct]
        sum_right = total - sum_left
        left_mean = sum_left / n_left
        right_mean = sum_right / (n - n_left)
        # Maximizing explained sum of squares is minimizing the split SSE.
        gain = n_left * left_mean**2 + (n - n_left) * right_mean**2
        best_pos = int(np.argmax(gain))
        g = float(gain[best_pos])
        if best is None or g > best[0] + 1e-15:
            cut = distinct[best_pos]
            stump = Stump(
                feature=j,
                threshold=float((xs[cut] + xs[cut + 1]) / 2.0),
                left=float(left_mean[best_pos]),
                right=float(right_mean[best_pos]),
            )
            best = (g, stump)
    return best[1] if best is not None else None


def _fit_stump_ensemble(
    x: np.ndarray, y: np.ndarray, n_stumps: int, shrinkage: float
) -> StumpEnsemblePredictor:
    init = float(np.mean(y))
    pred = np.full(y.shape, init)
    stumps: list[Stump] = []
    for _ in range(n_stumps):
        stump = _best_stump(x, y - pred)
        if stump is None:
            break
        scaled = Stump(
            feature=stump.feature,
            threshold=stump.threshold,
            left=shrinkage * stump.left,
            right=shrinkage * stump.right,
        )
        stumps.append(scaled)
        pred += np.where(x[:, scaled.feature] <= scaled.threshold, scaled.left, scaled.right)
    return StumpEnsemblePredictor(init=init, stumps=tuple(stumps))


def fit_builtin(
    kind: str,
    x: np.ndarray,
    y: np.ndarray,
    seed: int = 0,
    n_stumps: int = 50,
    shrinkage: float = 0.1,
) -> Predictor:
    """Fit one of the built-in reference models.

    ``linear`` and ``logistic`` fit to a 1e-8 tolerance; ``stump_ensemble``
    boosts depth-1 trees on squared loss with the given shrinkage. The seed is
    accepted for interface stability; all three fits are deterministic.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"inconsistent shapes {x.shape} and {y.shape}")
    if kind == "linear":
        return _fit_linear(x, y)
    if kind == "logistic":
        return _fit_logistic(x, y)
    if kind == "stump_ensemble":
        return _fit_stump_ensemble(x, y, n_stumps, shrinkage)
    raise ValueError(f"unknown builtin predictor kind {kind!r}")


def predictor_from_spec(spec: dict) -> Predictor:
    """Rebuild a built-in predictor from its JSON spec."""
    kind = spec.get("kind")
    if kind == "linear":
        return LinearPredictor(np.asarray(spec["weights"], dtype=float), float(spec["intercept"]))
    if kind == "logistic":
        return LogisticPredictor(np.asarray(spec["weights"], dtype=float), float(spec["intercept"]))
    if kind == "stump_ensemble":
        stumps = tuple(
            Stump(int(s["feature"]), float(s["threshold"]), float(s["left"]), float(s["right"]))
            for s in spec["stumps"]
        )
        return StumpEnsemblePredictor(init=float(spec["init"]), stumps=stumps)
    raise ValueError(f"unknown predictor spec kind {kind!r}")


class ExternalPredictor:
    """Long-lived child process speaking the newline-delimited JSON protocol.

    Requests are serialized over the single process; the class is safe to call
    from multiple threads but never has more than one request in flight.
    """

    def __init__(self, command: list[str], timeout: float = 30.0):
        self.capabilities = PredictorCapabilities(concurrent_safe=False, batch_preferred=True)
        self._command = list(command)
        self._timeout = timeout
        self._lock = threading.Lock()
        self._next_id = 0
        self._buffer = b""
        try:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise PredictorError(f"cannot spawn predictor process {command!r}: {exc}") from exc
        # Handshake proves the child speaks the protocol before any real work.
        self._roundtrip([])

    def predict(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        payload = [[float(v) for v in row] for row in rows]
        outputs = self._roundtrip(payload)
        return np.asarray(outputs, dtype=float)

    def close(self) -> None:
        proc = getattr(self, "_proc", None)
        if proc is None:
            return
        if proc.stdin:
            try:
                proc.stdin.close()
            except OSError:
                pass
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self) -> "ExternalPredictor":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _roundtrip(self, rows: list[list[float]]) -> list[float]:
        with self._lock:
            request_id = self._next_id
            self._next_id += 1
            message = json.dumps({"id": request_id, "rows": rows}, allow_nan=False)
            try:
                self._proc.stdin.write(message.encode("utf-8") + b"\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise PredictorError(
                    f"predictor process died while writing request {request_id}"
                ) from exc
            line = self._read_line()
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PredictorError(f"malformed predictor response: {line[:200]!r}") from exc
        if "error" in response:
            raise PredictorError(f"predictor reported an error: {response['error']}")
        if response.get("id") != request_id:
            raise PredictorError(
                f"predictor response id {response.get('id')} does not match request {request_id}"
            )
        outputs = response.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != len(rows):
            raise PredictorError(
                f"predictor returned {len(outputs) if isinstance(outputs, list) else 'no'} "
                f"outputs for {len(rows)} rows"
            )
        return outputs

    def _read_line(self) -> bytes:
        deadline = time.monotonic() + self._timeout
        stdout = self._proc.stdout
        while b"\n" not in self._buffer:
            if self._proc.poll() is not None and b"\n" not in self._buffer:
                raise PredictorError(
                    f"predictor process exited with code {self._proc.returncode}"
                )
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise PredictorError(f"predictor timed out after {self._timeout} s")
            ready, _, _ = select.select([stdout], [], [], min(remaining, 0.25))
            if not ready:
                continue
            chunk = os.read(stdout.fileno(), 65536)
            if not chunk:
                if self._proc.poll() is not None:
                    raise PredictorError(
                        f"predictor process exited with code {self._proc.returncode}"
                    )
                raise PredictorError("predictor closed its output stream")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line


def external_predictor(command: list[str], timeout: float = 30.0) -> ExternalPredictor:
    """Spawn and handshake an external predictor process."""
    return ExternalPredictor(command, timeout=timeout)
