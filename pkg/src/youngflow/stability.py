"""Exponential-stability criterion for linear-plus-Lipschitz Young equations.

Limsup/liminf quantities are replaced by finite Cesàro means over unit blocks
[k, k+1]; each report carries the number of blocks and a drift diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, NearZeroError, RangeError
from .ode_young import CoefficientSet, dissipativity_of, fundamental_matrix, solve_young_sde
from .paths import SamplePath
from .variation import matrix_pvar, pvar_seminorm, running_pvar
from .young import k_constant

__all__ = [
    "BlockStats",
    "KappaParams",
    "StabilityReport",
    "DEFAULT_DELTA",
    "EPS_DISC",
    "default_nu",
    "default_p",
    "op_norm",
    "g_constant",
    "block_stats",
    "cesaro_limit",
    "criterion_rhs",
    "criterion_report",
    "lyapunov_estimate",
    "kappa",
    "kappa_from_seminorm",
    "kappa_on_grid",
    "phi_bound_check",
]

DEFAULT_DELTA = 0.1
EPS_DISC = 1e-6


def default_nu(hurst: float) -> float:
    """Midpoint (H + 1/2)/2 of the admissible Hölder range."""
    if not 0.5 < hurst < 1:
        raise DomainError(f"hurst must lie in (1/2, 1), got {hurst}")
    return 0.5 * (hurst + 0.5)


def default_p(hurst: float) -> float:
    return 1.0 / default_nu(hurst)


def op_norm(M) -> float:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return float(np.linalg.norm(M, 2))


def g_constant(a: float, c: float, K: float, p: float) -> float:
    """max{8a, 16Kc, (8a)^p, (16Kc)^p}; used for both G and its block version."""
    return max(8 * a, 16 * K * c, (8 * a) ** p, (16 * K * c) ** p)


@dataclass(frozen=True)
class BlockStats:
    drift: np.ndarray  # sup-norm of A plus sup of f on each block
    diffusion: np.ndarray  # q-variation norm of C on each block
    driver: np.ndarray  # p-variation seminorm of omega on each block


def _block_times(omega: SamplePath, k: int) -> np.ndarray:
    i, j = omega.interval_indices((k, k + 1))
    return omega.times[i : j + 1]


def block_stats(coeffs: CoefficientSet, omega: SamplePath, m: int, p: float, q: float) -> BlockStats:
    """Per-block norms on [k, k+1], k = 0..m-1."""
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    if omega.t0 > 0 or omega.t_end < m:
        raise RangeError(f"omega covers [{omega.t0:g}, {omega.t_end:g}] but [0, {m}] is needed")
    drift = np.empty(m)
    diff = np.empty(m)
    drv = np.empty(m)
    A_c, C_c = coeffs.constant_drift, coeffs.constant_diffusion
    lip_const = not callable(coeffs.lipschitz)
    for k in range(m):
        ts = None if (A_c is not None and C_c is not None and lip_const) else _block_times(omega, k)
        a_sup = op_norm(A_c) if A_c is not None else max(op_norm(coeffs.A(t)) for t in ts)
        f_sup = coeffs.f(k) if lip_const else max(coeffs.f(t) for t in ts)
        drift[k] = a_sup + f_sup
        if C_c is not None:
            diff[k] = op_norm(C_c)
        else:
            mats = np.array([coeffs.C(t) for t in ts])
            diff[k] = op_norm(mats[0]) + matrix_pvar(mats, q)
        drv[k] = pvar_seminorm(omega, p, (k, k + 1)).value
    return BlockStats(drift, diff, drv)


def cesaro_limit(values, exponent: float) -> float:
    """(mean of v**exponent)**(1/exponent) over the supplied block values."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DomainError("cesaro_limit needs at least one value")
    if not exponent > 0:
        raise DomainError(f"exponent must be positive, got {exponent}")
    if np.any(v < 0):
        raise DomainError("cesaro_limit values must be nonnegative")
    return float(np.mean(v**exponent) ** (1.0 / exponent))


def _drift(values, exponent) -> float:
    """Relative change of the Cesàro mean between the first 3/4 and all blocks."""
    v = np.asarray(values, dtype=float)
    cut = max(1, (3 * v.size) // 4)
    full = cesaro_limit(v, exponent)
    part = cesaro_limit(v[:cut], exponent)
    return 0.0 if full == 0 else abs(full - part) / full


def criterion_rhs(K: float, G_hat: float, C_hat: float, gamma2: float, gamma4: float, gamma2p2: float, p: float) -> float:
    return K * (1 + 4 * G_hat) * C_hat * (gamma2 + gamma4**2 + gamma2p2 ** (p + 1))


@dataclass(frozen=True)
class StabilityReport:
    p: float
    q: float
    m_blocks: int
    h0: float
    A_hat: float
    C_hat: float
    gamma2: float
    gamma4: float
    gamma2p2: float
    K: float
    G_hat: float
    criterion_lhs: float
    criterion_rhs: float
    verdict: bool
    lyapunov_estimate: float = float("nan")
    drift: dict = field(default_factory=dict)

    def recompute_rhs(self) -> float:
        return criterion_rhs(self.K, self.G_hat, self.C_hat, self.gamma2, self.gamma4, self.gamma2p2, self.p)

    def to_dict(self) -> dict:
        return asdict(self)


def _h0_surrogate(coeffs: CoefficientSet, omega: SamplePath, m: int) -> float:
    if coeffs.constant_drift is not None and not callable(coeffs.lipschitz) and coeffs.dissipativity is None:
        return coeffs.h(0.0) - coeffs.f(0.0)
    i, j = omega.interval_indices((0, m))
    ts = omega.times[i : j + 1]
    g = np.array([coeffs.h(t) - coeffs.f(t) for t in ts])
    return float(trapezoid(g, ts) / m)


def criterion_report(coeffs: CoefficientSet, omega: SamplePath, m: int, p: float, q: float | None = None, *,
                     h0: float | None = None, x0=None, tail_fraction: float = 0.5, substeps: int = 1) -> StabilityReport:
    """Evaluate both sides of the stability criterion on m unit blocks of ``omega``.

    With ``x0`` given, the trajectory from x0 on [0, m] is solved and its
    Lyapunov exponent estimate is stored in the report.
    """
    q = p if q is None else q
    K = k_constant(p, q)
    stats = block_stats(coeffs, omega, m, p, q)
    A_hat = cesaro_limit(stats.drift, 4 * p)
    C_hat = cesaro_limit(stats.diffusion, 2 * p + 2)
    g2 = cesaro_limit(stats.driver, 2)
    g4 = cesaro_limit(stats.driver, 4)
    g2p2 = cesaro_limit(stats.driver, 2 * p + 2)
    G_hat = g_constant(A_hat, C_hat, K, p)
    lhs = _h0_surrogate(coeffs, omega, m) if h0 is None else float(h0)
    rhs = criterion_rhs(K, G_hat, C_hat, g2, g4, g2p2, p)
    lyap = float("nan")
    if x0 is not None:
        traj = solve_young_sde(coeffs, omega, x0, (0, m), substeps)
        lyap = lyapunov_estimate(traj, tail_fraction)
    drift = {
        "A_hat": _drift(stats.drift, 4 * p),
        "C_hat": _drift(stats.diffusion, 2 * p + 2),
        "gamma2": _drift(stats.driver, 2),
        "gamma4": _drift(stats.driver, 4),
        "gamma2p2": _drift(stats.driver, 2 * p + 2),
    }
    return StabilityReport(float(p), float(q), int(m), lhs, A_hat, C_hat, g2, g4, g2p2, K, G_hat, lhs, rhs,
                           bool(lhs > rhs), lyap, drift)


def lyapunov_estimate(traj: SamplePath, tail_fraction: float = 0.5) -> float:
    """Least-squares slope of log|x(t)| over the final ``tail_fraction`` of the grid."""
    if not 0 < tail_fraction <= 1:
        raise DomainError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    n = traj.n
    first = min(n - 2, int(math.floor(n * (1 - tail_fraction))))
    if first < 0:
        raise RangeError("trajectory needs at least two points")
    r = np.linalg.norm(traj.values[first:], axis=1)
    if np.any(~(r > 0)):
        raise NearZeroError("trajectory norm vanishes on the tail window")
    t = traj.times[first:]
    return float(np.polyfit(t, np.log(r), 1)[0])


@dataclass(frozen=True)
class KappaParams:
    delta: float
    p: float
    K: float
    G: float

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")

    @classmethod
    def from_matrices(cls, A, C, p: float, q: float | None = None, delta: float = DEFAULT_DELTA) -> "KappaParams":
        K = k_constant(p, p if q is None else q)
        return cls(float(delta), float(p), K, g_constant(op_norm(A), op_norm(C), K, p))


def kappa_from_seminorm(V, t, params: KappaParams):
    """δ^{1-p} V^p + 4KG V (t + V + V^p) for seminorm V on an interval of length t."""
    V = np.asarray(V, dtype=float)
    p = params.p
    out = params.delta ** (1 - p) * V**p + 4 * params.K * params.G * V * (t + V + V**p)
    return float(out) if out.ndim == 0 else out


def kappa(t: float, omega: SamplePath, params: KappaParams) -> float:
    """κ(t, ω) built from the p-variation of ω on [0, t], t in [0, 1]."""
    if not 0 <= t <= 1:
        raise RangeError(f"t must lie in [0, 1], got {t}")
    if t == 0 or omega.index_of(t) == omega.index_of(0.0):
        return 0.0
    V = pvar_seminorm(omega, params.p, (0.0, t)).value
    return kappa_from_seminorm(V, t, params)


def kappa_on_grid(omega: SamplePath, params: KappaParams, start: float = 0.0, length: float = 1.0):
    """(times, κ) for t in [0, length] of the path shifted to ``start``; uses the running p-variation."""
    i = omega.index_of(start)
    j = omega.index_of(start + length)
    V = running_pvar(omega, params.p, start, start + length)
    t = (np.arange(j - i + 1)) * omega.dt
    return t, kappa_from_seminorm(V, t, params)


def phi_bound_check(A, C, omega: SamplePath, delta: float = DEFAULT_DELTA, *, p: float, q: float | None = None,
                    h_A: float | None = None, slack: float = EPS_DISC, substeps: int = 1) -> list:
    """Grid points t in [0, 1] where |Φ(t)| exceeds exp(-h_A t + δ + max{|C|, |C|^p} κ(t)) + slack.

    Returns a list of (t, norm, bound).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if h_A is None:
        h_A = dissipativity_of(A)
    params = KappaParams.from_matrices(A, C, p, q, delta)
    flow = fundamental_matrix(A, C, omega, (0.0, 1.0), substeps)
    norms = flow.norms()[::substeps]
    t, kap = kappa_on_grid(omega, params, 0.0, 1.0)
    c = op_norm(C)
    with np.errstate(over="ignore"):
        bound = np.exp(-h_A * t + delta + max(c, c**p) * kap)
    bad = np.flatnonzero(norms > bound + slack)
    return [(float(t[k]), float(norms[k]), float(bound[k])) for k in bad]
