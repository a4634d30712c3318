"""CSV time series, JSON reports and JSON model files."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ShapeError
from .models import SirParams, SirSystem, sir_build
from .ode_young import CoefficientSet
from .paths import SamplePath

__all__ = [
    "MODEL_REGISTRY",
    "LoadedModel",
    "write_paths_csv",
    "read_paths_csv",
    "write_trajectory_csv",
    "write_json",
    "file_sha256",
    "load_model",
    "model_from_dict",
    "to_jsonable",
]

MODEL_REGISTRY = ("none", "sir", "custom-affine")


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_rows(target, header, times, columns) -> None:
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, t in enumerate(times):
            w.writerow([_fmt(t)] + [_fmt(c[i]) for c in columns])


def write_paths_csv(target, paths: list[SamplePath]) -> None:
    """Scalar paths on a common grid as ``t,path_0,...,path_{k-1}``."""
    if not paths:
        raise DomainError("nothing to write")
    ref = paths[0]
    for p in paths:
        if p.dim != 1:
            raise ShapeError("write_paths_csv takes scalar paths")
        if not p.same_grid(ref):
            raise ShapeError("all paths must share one grid")
    header = ["t"] + [f"path_{k}" for k in range(len(paths))]
    _write_rows(target, header, ref.times, [p.scalar for p in paths])


def write_trajectory_csv(target, traj: SamplePath) -> None:
    """Vector path as ``t,x_0,...,x_{d-1}``."""
    header = ["t"] + [f"x_{k}" for k in range(traj.dim)]
    _write_rows(target, header, traj.times, list(traj.values.T))


def _grid_from_times(t: np.ndarray) -> tuple[float, int]:
    if t.size < 2:
        raise ShapeError("a path file needs at least two rows")
    dt = (t[-1] - t[0]) / (t.size - 1)
    steps = 1.0 / dt
    if abs(steps - round(steps)) < 1e-6 * steps:
        dt = 1.0 / round(steps)
    start = int(round(t[0] / dt))
    if np.max(np.abs((start + np.arange(t.size)) * dt - t)) > 1e-9 * max(1.0, np.abs(t).max()):
        raise ShapeError("time column is not a uniform grid")
    return dt, start


def read_paths_csv(source) -> list[SamplePath]:
    """Inverse of :func:`write_paths_csv` (also reads trajectory files, one path per column)."""
    with open(source, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ShapeError(f"{source}: expected a header starting with 't'")
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    if data.ndim != 2 or data.shape[1] < 2:
        raise ShapeError(f"{source}: no data columns")
    dt, start = _grid_from_times(data[:, 0])
    return [SamplePath(data[:, k].copy(), dt, start) for k in range(1, data.shape[1])]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(target, payload) -> None:
    with open(target, "w") as fh:
        json.dump(to_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True, eq=False)
class LoadedModel:
    name: str
    coeffs: CoefficientSet
    sir: SirSystem | None = None


def _matrix(raw, d, key) -> np.ndarray:
    M = np.array(raw, dtype=float)
    if M.shape != (d, d):
        raise ShapeError(f"model field {key!r} must be a {d}x{d} matrix (row-major)")
    return M


def model_from_dict(spec: dict) -> LoadedModel:
    """Build coefficients from a parsed model file.

    ``{"nonlinearity": "sir", "params": {...}, "coordinates": "original"|"transformed"}``
    or ``{"d": d, "A": [[...]], "C": [[...]], "nonlinearity": "none"|"custom-affine",
    "params": {"W": [[...]], "b": [...]}}``; ``lipschitz`` and ``dissipativity``
    may override the derived metadata.
    """
    name = spec.get("nonlinearity", "none")
    if name not in MODEL_REGISTRY:
        raise DomainError(f"unknown nonlinearity {name!r}; registry: {', '.join(MODEL_REGISTRY)}")
    if name == "sir":
        system = sir_build(SirParams(**spec.get("params", {})))
        coords = spec.get("coordinates", "transformed")
        if coords not in ("original", "transformed"):
            raise DomainError("coordinates must be 'original' or 'transformed'")
        return LoadedModel("sir", getattr(system, coords), system)
    d = int(spec["d"])
    A = _matrix(spec["A"], d, "A")
    C = _matrix(spec.get("C", np.zeros((d, d))), d, "C")
    F = None
    lip = 0.0
    if name == "custom-affine":
        params = spec.get("params", {})
        W = _matrix(params.get("W", np.zeros((d, d))), d, "params.W")
        b = np.array(params.get("b", np.zeros(d)), dtype=float)
        if b.shape != (d,):
            raise ShapeError(f"params.b must have length {d}")
        F = lambda t, x, _W=W, _b=b: _W @ x + _b  # noqa: E731
        lip = float(np.linalg.norm(W, 2))
    lip = float(spec.get("lipschitz", lip))
    h = spec.get("dissipativity")
    return LoadedModel(name, CoefficientSet(d, A, C, F, lip, None if h is None else float(h), name))


def load_model(path) -> LoadedModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
