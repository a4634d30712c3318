"""Young integrals as left-point Riemann sums, and the Young-Loeve check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .paths import SamplePath
from .variation import pvar_seminorm

__all__ = [
    "YoungLoeveCertificate",
    "k_constant",
    "young_integral",
    "young_integral_running",
    "riemann_sum",
    "young_loeve_certify",
]


def k_constant(p: float, q: float) -> float:
    """Young-Loeve constant ``(1 - 2**(1 - theta))**-1`` with ``theta = 1/p + 1/q``."""
    theta = 1.0 / p + 1.0 / q
    if not theta > 1:
        raise DomainError(f"Young condition 1/p + 1/q > 1 violated (p={p}, q={q})")
    return 1.0 / (1.0 - 2.0 ** (1.0 - theta))


def riemann_sum(x: np.ndarray, domega: np.ndarray, compensated: bool = False) -> np.ndarray:
    """Sum of ``x[i] * domega[i]`` over rows; ``x`` is (n, d), ``domega`` is (n,)."""
    terms = x * domega[:, None]
    if compensated:
        return np.array([math.fsum(col) for col in terms.T])
    return terms.sum(axis=0)


def young_integral(x: SamplePath, omega: SamplePath, interval=None, *, compensated: bool = False) -> np.ndarray:
    """Left-point Riemann sum of x dω over the full grid partition of ``interval``.

    ``compensated=True`` switches to exactly rounded (fsum) summation.
    """
    if x.dt != omega.dt:
        raise ShapeError("x and omega must share the grid spacing")
    if omega.dim != 1:
        raise ShapeError("the driver omega must be scalar")
    if interval is None:
        interval = (max(x.t0, omega.t0), min(x.t_end, omega.t_end))
    i, j = x.interval_indices(interval)
    a, b = omega.interval_indices(interval)
    w = omega.scalar[a : b + 1]
    return riemann_sum(x.values[i:j], np.diff(w), compensated)


def young_integral_running(x: SamplePath, omega: SamplePath) -> np.ndarray:
    """Left sums over [x.t0, t] for every grid time t of ``x``; shape (n, d).

    ``omega`` must cover the grid of ``x``.
    """
    if x.dt != omega.dt:
        raise ShapeError("x and omega must share the grid spacing")
    if omega.dim != 1:
        raise ShapeError("the driver omega must be scalar")
    a, b = omega.interval_indices((x.t0, x.t_end))
    terms = x.values[:-1] * np.diff(omega.scalar[a : b + 1])[:, None]
    return np.vstack([np.zeros((1, x.dim)), np.cumsum(terms, axis=0)])


@dataclass(frozen=True)
class YoungLoeveCertificate:
    interval: tuple[float, float]
    lhs: float
    rhs: float
    K: float
    p: float
    q: float
    slack: float = 0.0

    @property
    def violated(self) -> bool:
        return self.lhs > self.rhs + self.slack


def young_loeve_certify(x: SamplePath, omega: SamplePath, interval, p: float, q: float, *, slack: float = 0.0):
    """Evaluate both sides of the Young-Loeve estimate on the sampled data.

    ``lhs = |∫ x dω - x(s)(ω(t) - ω(s))|`` and ``rhs = K |x|_{q-var} |ω|_{p-var}``,
    with both seminorms taken on the same grid as the Riemann sum.
    """
    K = k_constant(p, q)
    s, t = interval
    i, j = x.interval_indices(interval)
    if i == j:
        return YoungLoeveCertificate((s, t), 0.0, 0.0, K, p, q, slack)
    integral = young_integral(x, omega, interval)
    first = x.at(s) * (omega.at(t)[0] - omega.at(s)[0])
    lhs = float(np.linalg.norm(integral - first))
    rhs = K * pvar_seminorm(x, q, interval).value * pvar_seminorm(omega, p, interval).value
    return YoungLoeveCertificate((float(s), float(t)), lhs, float(rhs), K, p, q, slack)
