"""Uniformly sampled paths on an integer-anchored grid.

Every grid time is ``(start + i) * dt`` for integer ``i``; times are never
accumulated by repeated addition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import RangeError, ShapeError

# off-grid tolerance, as a fraction of dt
_GRID_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SamplePath:
    """A scalar or vector path sampled on a uniform grid.

    Parameters
    ----------
    raw : array of shape (n,) or (n, d)
        Sample values before the anchor offset is removed.
    dt : float
        Grid spacing.
    start : int
        Integer index of the first sample, so that ``t0 = start * dt``.
    offset : array of shape (d,), optional
        Vector subtracted from every raw sample. Wiener shifts only change
        the offset, which keeps shifted values bit-identical under
        composition of shifts.
    """

    raw: np.ndarray
    dt: float
    start: int = 0
    offset: np.ndarray | None = field(default=None)

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=float)
        if raw.ndim == 1:
            raw = raw[:, None]
        if raw.ndim != 2 or raw.shape[0] == 0 or raw.shape[1] == 0:
            raise ShapeError(f"path values must be a nonempty (n,) or (n, d) array, got shape {raw.shape}")
        if not np.all(np.isfinite(raw)):
            raise ValueError("path values must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        raw.setflags(write=False)
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "start", int(self.start))
        off = np.zeros(raw.shape[1]) if self.offset is None else np.asarray(self.offset, dtype=float).reshape(-1)
        if off.shape != (raw.shape[1],):
            raise ShapeError("offset dimension does not match path dimension")
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)

    @classmethod
    def on_grid(cls, t0: float, dt: float, values) -> "SamplePath":
        """Build a path whose first time ``t0`` must be a multiple of ``dt``."""
        start = int(round(t0 / dt))
        if abs(start * dt - t0) > _GRID_TOL * dt * max(1, abs(start)):
            raise RangeError(f"t0={t0} is not an integer multiple of dt={dt}")
        return cls(values, dt, start)

    @cached_property
    def values(self) -> np.ndarray:
        v = self.raw - self.offset if np.any(self.offset) else self.raw
        v = np.array(v, copy=True)
        v.setflags(write=False)
        return v

    @property
    def n(self) -> int:
        return self.raw.shape[0]

    @property
    def dim(self) -> int:
        return self.raw.shape[1]

    @property
    def t0(self) -> float:
        return self.start * self.dt

    @property
    def t_end(self) -> float:
        return (self.start + self.n - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return (self.start + np.arange(self.n)) * self.dt

    @property
    def scalar(self) -> np.ndarray:
        """Values of a one-dimensional path as a flat array."""
        if self.dim != 1:
            raise ShapeError(f"path has dimension {self.dim}, expected a scalar path")
        return self.values[:, 0]

    def index_of(self, t: float) -> int:
        """Position (0-based, within this path) of grid time ``t``."""
        k = int(round(t / self.dt))
        if abs(k * self.dt - t) > _GRID_TOL * self.dt * max(1, abs(k)):
            raise RangeError(f"time {t} is not a grid point (dt={self.dt})")
        i = k - self.start
        if not 0 <= i < self.n:
            raise RangeError(f"time {t} outside path domain [{self.t0}, {self.t_end}]")
        return i

    def interval_indices(self, interval) -> tuple[int, int]:
        a, b = interval
        i, j = self.index_of(a), self.index_of(b)
        if j < i:
            raise RangeError(f"interval ({a}, {b}) is reversed")
        return i, j

    def at(self, t: float) -> np.ndarray:
        return self.values[self.index_of(t)]

    def restrict(self, interval) -> "SamplePath":
        """Sub-path on a grid interval; keeps the anchor offset."""
        i, j = self.interval_indices(interval)
        return SamplePath(self.raw[i : j + 1], self.dt, self.start + i, self.offset)

    def same_grid(self, other: "SamplePath") -> bool:
        return self.dt == other.dt and self.start == other.start and self.n == other.n

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"SamplePath(n={self.n}, dim={self.dim}, t=[{self.t0:g}, {self.t_end:g}], dt={self.dt:g})"
