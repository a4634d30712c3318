"""Exact grid p-variation, Hölder seminorms and control functions.

All suprema run over partitions whose points lie on the sample grid; on that
set the dynamic programme is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, RangeError, ResourceError
from .paths import SamplePath

__all__ = [
    "VariationResult",
    "ControlGrid",
    "MAX_DP_POINTS",
    "pvar_seminorm",
    "pvar_of_values",
    "running_pvar",
    "pvar_table",
    "block_seminorms",
    "matrix_pvar",
    "holder_seminorm",
    "apriori_qvar_constant",
    "apriori_qvar_bound",
    "apriori_qvar_verify",
    "control_from_table",
    "pvar_control",
    "control_superadditivity_check",
]

MAX_DP_POINTS = 2**16


@dataclass(frozen=True)
class VariationResult:
    p: float
    interval: tuple[float, float]
    value: float
    argmax_partition: tuple[int, ...]
    increments: np.ndarray  # norms of the partition increments, in order

    def recompute(self) -> float:
        """Seminorm recomputed from the stored partition increments."""
        return _partition_value(self.increments, self.p)


def _partition_value(norms: np.ndarray, p: float) -> float:
    return math.fsum(float(a) ** p for a in norms) ** (1.0 / p)


def _check_p(p: float) -> None:
    if not (p >= 1 and math.isfinite(p)):
        raise DomainError(f"p must be a finite real >= 1, got {p}")


def _norms(v: np.ndarray, idx) -> np.ndarray:
    inc = np.diff(v[np.asarray(idx)], axis=0)
    return np.sqrt(np.sum(inc * inc, axis=1)) if v.shape[1] > 1 else np.abs(inc[:, 0])


def pvar_of_values(v: np.ndarray, p: float) -> tuple[float, tuple[int, ...], np.ndarray]:
    """Seminorm, argmax partition and increment norms for raw samples ``v`` (n, d)."""
    _check_p(p)
    v = np.ascontiguousarray(v, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    n = v.shape[0]
    if n == 1:
        return 0.0, (0,), np.zeros(0)
    if n > MAX_DP_POINTS:
        raise ResourceError(
            f"{n} grid points exceeds MAX_DP_POINTS={MAX_DP_POINTS}; use block_seminorms for long horizons"
        )
    if p == 1:
        # the full grid is optimal by the triangle inequality and lexicographically smallest
        part = tuple(range(n))
    else:
        if v.shape[1] == 1:
            cand = _kernels.turning_points(v[:, 0])
        else:
            cand = np.arange(n)
        _, nxt = _kernels.suffix_dp(np.ascontiguousarray(v[cand]), float(p))
        chain = [0]
        while chain[-1] != len(cand) - 1:
            chain.append(int(nxt[chain[-1]]))
        part = tuple(int(cand[c]) for c in chain)
        if v.shape[1] == 1:
            part = _lex_smallest(v[:, 0], part)
    norms = _norms(v, part)
    return _partition_value(norms, p), part, norms


def _lex_smallest(x: np.ndarray, part: tuple[int, ...]) -> tuple[int, ...]:
    """Insert every zero-cost point into an optimal scalar partition for p > 1.

    Between consecutive points a < b only samples equal to x[a] or x[b] can be
    added without lowering the sum; taking the x[a]-valued ones before the first
    x[b]-valued one and all x[b]-valued ones after it gives the lexicographically
    smallest optimal index set.
    """
    out = [part[0]]
    for a, b in zip(part[:-1], part[1:]):
        inner = np.arange(a + 1, b)
        seg = x[a + 1 : b]
        hit_b = np.flatnonzero(seg == x[b])
        k = hit_b[0] if hit_b.size else seg.size
        out.extend(int(i) for i in inner[:k][seg[:k] == x[a]])
        out.extend(int(i) for i in inner[k:][seg[k:] == x[b]])
        out.append(b)
    return tuple(out)


def pvar_seminorm(path: SamplePath, p: float, interval=None) -> VariationResult:
    """Grid p-variation seminorm of ``path`` on ``interval`` (defaults to the whole path).

    The returned partition indices are positions within ``path``.
    """
    if interval is None:
        interval = (path.t0, path.t_end)
    i, j = path.interval_indices(interval)
    if i == j:
        raise RangeError("p-variation needs a nondegenerate interval")
    value, part, norms = pvar_of_values(path.values[i : j + 1], p)
    return VariationResult(float(p), (float(interval[0]), float(interval[1])), value, tuple(i + k for k in part), norms)


def running_pvar(path: SamplePath, p: float, start: float, stop: float | None = None) -> np.ndarray:
    """Seminorms on [start, t] for every grid time t from start to stop."""
    _check_p(p)
    i = path.index_of(start)
    j = path.n - 1 if stop is None else path.index_of(stop)
    v = np.ascontiguousarray(path.values[i : j + 1])
    return _kernels.prefix_dp(v, float(p)) ** (1.0 / p)


def pvar_table(path: SamplePath, p: float, interval=None, *, power: float | None = None) -> np.ndarray:
    """All-pairs table ``T[a, b]`` of seminorms on [t_a, t_b] within ``interval``.

    With ``power`` set, the table holds ``seminorm ** power`` instead;
    ``power=p`` returns the raw partition sums.
    """
    _check_p(p)
    if interval is None:
        interval = (path.t0, path.t_end)
    i, j = path.interval_indices(interval)
    sums = _kernels.all_pairs_dp(np.ascontiguousarray(path.values[i : j + 1]), float(p))
    if power is None:
        power = 1.0
    return sums ** (power / p)


def block_seminorms(path: SamplePath, p: float, first: int, count: int, *, block=1.0) -> np.ndarray:
    """Seminorms on consecutive blocks [first + k*block, first + (k+1)*block], k < count."""
    out = np.empty(count)
    for k in range(count):
        a = first + k * block
        out[k] = pvar_seminorm(path, p, (a, a + block)).value
    return out


def matrix_pvar(mats: np.ndarray, p: float) -> float:
    """p-variation seminorm of a sampled matrix-valued path under the operator 2-norm."""
    _check_p(p)
    mats = np.asarray(mats, dtype=float)
    n = mats.shape[0]
    if n < 2:
        return 0.0
    diff = mats[None, :, :, :] - mats[:, None, :, :]
    dpow = np.linalg.norm(diff, ord=2, axis=(2, 3)) ** p
    best, _ = _kernels.suffix_dp_dist(np.ascontiguousarray(dpow))
    return float(best[0]) ** (1.0 / p)


def holder_seminorm(path: SamplePath, nu: float, interval=None) -> float:
    """Max over grid pairs of |x(t) - x(s)| / (t - s)**nu."""
    if not 0 < nu < 1:
        raise DomainError(f"Hölder exponent must lie in (0, 1), got {nu}")
    if interval is None:
        interval = (path.t0, path.t_end)
    i, j = path.interval_indices(interval)
    return float(_kernels.holder_scan(np.ascontiguousarray(path.values[i : j + 1]), path.dt, float(nu)))


def apriori_qvar_constant(b: float, p: float) -> float:
    return 2.0 * max((4.0 * b) ** p, 4.0 * b)


def apriori_qvar_bound(b: float, p: float, dt_len: float, omega_pvar: float) -> float:
    """A-priori q-variation bound for a path obeying the linear-growth hypothesis.

    Returns ``C(b) * max{len**p + W**p, len + W}`` with ``C(b) = 2 max{(4b)**p, 4b}``
    and ``W`` the driver's p-variation on the interval.
    """
    if b < 0 or dt_len < 0 or omega_pvar < 0:
        raise DomainError("apriori_qvar_bound needs b, interval length and seminorm >= 0")
    if not 1 < p < 2:
        raise DomainError(f"p must lie in (1, 2), got {p}")
    return apriori_qvar_constant(b, p) * max(dt_len**p + omega_pvar**p, dt_len + omega_pvar)


def apriori_qvar_verify(y: SamplePath, omega: SamplePath, p: float, q: float) -> tuple[float, list]:
    """Check the a-priori bound on every grid subinterval.

    The growth constant ``b`` is taken as the smallest value for which the
    hypothesis holds on all grid subintervals. Returns ``(b, violations)``;
    each violation is ``(s, t, seminorm, bound)``.
    """
    if not y.same_grid(omega):
        raise RangeError("y and omega must share a grid")
    ty = pvar_table(y, q)
    tw = pvar_table(omega, p)
    n = y.n
    ii, jj = np.triu_indices(n, k=1)
    lens = (jj - ii) * y.dt
    ys, ws = ty[ii, jj], tw[ii, jj]
    b = float(np.max(ys / ((1.0 + ys) * (lens + ws))))
    viol = []
    for a, c, L, Y, W in zip(ii, jj, lens, ys, ws):
        bound = apriori_qvar_bound(b, p, L, W)
        if Y > bound:
            viol.append((y.times[a], y.times[c], float(Y), bound))
    return b, viol


@dataclass(frozen=True)
class ControlGrid:
    times: np.ndarray
    table: np.ndarray  # table[a, b] = control on [times[a], times[b]] for a <= b


def control_from_table(times, table) -> ControlGrid:
    return ControlGrid(np.asarray(times, dtype=float), np.asarray(table, dtype=float))


def pvar_control(path: SamplePath, p: float, power: float | None = None, interval=None) -> ControlGrid:
    """Control candidate (s, t) -> seminorm**power; ``power`` defaults to p."""
    if interval is None:
        interval = (path.t0, path.t_end)
    i, j = path.interval_indices(interval)
    tab = pvar_table(path, p, interval, power=p if power is None else power)
    return ControlGrid(path.times[i : j + 1], tab)


def control_superadditivity_check(ctrl: ControlGrid, rtol: float = 1e-12) -> list:
    """Violations of the two control axioms on every grid triple.

    Entries are ``(s, t, u, deficit)``; diagonal violations appear with
    ``s == t == u``. ``rtol`` absorbs floating round-off relative to the
    larger side.
    """
    tab = ctrl.table
    t = ctrl.times
    n = len(t)
    out = []
    diag = np.diagonal(tab)
    for a in np.flatnonzero(np.abs(diag) > 0):
        out.append((t[a], t[a], t[a], float(diag[a])))
    for mid in range(1, n - 1):
        left = tab[: mid + 1, mid][:, None]
        right = tab[mid, mid:][None, :]
        whole = tab[: mid + 1, mid:]
        deficit = left + right - whole
        bad = np.argwhere(deficit > rtol * np.maximum(np.abs(whole), 1e-300))
        for a, c in bad:
            if a == mid or c == 0:
                continue
            out.append((t[a], t[mid], t[mid + c], float(deficit[a, c])))
    return out
