"""Pathwise solution of dx = [A(t)x + F(t,x)]dt + C(t)x dω.

The only scheme is explicit Euler on the driver's grid, optionally refined by
linear interpolation of ω between samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivergenceError, DomainError, NearZeroError, RangeError, ShapeError, SolvabilityError
from .paths import SamplePath
from .young import young_integral_running

__all__ = [
    "CoefficientSet",
    "FlowMatrix",
    "dissipativity_of",
    "refine_driver",
    "solve_young_sde",
    "fundamental_matrix",
    "variation_of_parameters_check",
    "polar_dynamics_check",
    "check_hypotheses",
    "conjugate",
    "NEAR_ZERO_FLOOR",
]

NEAR_ZERO_FLOOR = 1e-30
MatrixLike = "np.ndarray | Callable[[float], np.ndarray]"


def dissipativity_of(A: np.ndarray) -> float:
    """Largest h with <x, Ax> <= -h|x|^2: smallest eigenvalue of -(A + A^T)/2."""
    A = np.asarray(A, dtype=float)
    return float(np.linalg.eigvalsh(-0.5 * (A + A.T))[0])


def _as_time_fn(obj, shape=None):
    if callable(obj):
        return obj, None
    arr = np.array(obj, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ShapeError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return (lambda t, _a=arr: _a), arr


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Coefficients (A, F, C) plus the dissipativity rate h(t) and Lipschitz bound f(t).

    ``drift`` and ``diffusion`` are constant (d, d) arrays or callables of t.
    ``lipschitz`` and ``dissipativity`` are constants or callables of t;
    ``dissipativity=None`` derives h(t) from the symmetric part of A(t).
    """

    dim: int
    drift: object
    diffusion: object
    nonlinearity: Callable[[float, np.ndarray], np.ndarray] | None = None
    lipschitz: object = 0.0
    dissipativity: object = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        shape = (self.dim, self.dim)
        self._cache["A"], self._cache["A_const"] = _as_time_fn(self.drift, shape)
        self._cache["C"], self._cache["C_const"] = _as_time_fn(self.diffusion, shape)
        if self.dissipativity is None and self._cache["A_const"] is not None:
            self._cache["h_const"] = dissipativity_of(self._cache["A_const"])

    def A(self, t: float) -> np.ndarray:
        return self._cache["A"](t)

    def C(self, t: float) -> np.ndarray:
        return self._cache["C"](t)

    def F(self, t: float, x: np.ndarray) -> np.ndarray:
        if self.nonlinearity is None:
            return np.zeros(self.dim)
        return np.asarray(self.nonlinearity(t, x), dtype=float)

    def f(self, t: float) -> float:
        return float(self.lipschitz(t) if callable(self.lipschitz) else self.lipschitz)

    def h(self, t: float) -> float:
        if self.dissipativity is None:
            if "h_const" in self._cache:
                return self._cache["h_const"]
            return dissipativity_of(self.A(t))
        return float(self.dissipativity(t) if callable(self.dissipativity) else self.dissipativity)

    @property
    def constant_drift(self) -> np.ndarray | None:
        return self._cache["A_const"]

    @property
    def constant_diffusion(self) -> np.ndarray | None:
        return self._cache["C_const"]

    @property
    def autonomous(self) -> bool:
        return self.constant_drift is not None and self.constant_diffusion is not None


def refine_driver(omega: SamplePath, interval=None, substeps: int = 1) -> SamplePath:
    """Driver restricted to ``interval``, linearly interpolated ``substeps`` times per cell."""
    if omega.dim != 1:
        raise ShapeError("the driver must be scalar")
    if int(substeps) != substeps or substeps < 1:
        raise DomainError(f"substeps must be a positive integer, got {substeps}")
    sub = omega if interval is None else omega.restrict(interval)
    if sub.n < 2:
        raise RangeError("interval must contain at least one grid step")
    if substeps == 1:
        return sub
    w = sub.scalar
    frac = np.arange(substeps) / substeps
    fine = (w[:-1, None] + frac[None, :] * np.diff(w)[:, None]).reshape(-1)
    fine = np.append(fine, w[-1])
    return SamplePath(fine, sub.dt / substeps, sub.start * substeps)


def _first_bad_row(traj: np.ndarray) -> int | None:
    ok = np.isfinite(traj).reshape(traj.shape[0], -1).all(axis=1)
    bad = np.flatnonzero(~ok)
    return int(bad[0]) if bad.size else None


def solve_young_sde(coeffs: CoefficientSet, omega: SamplePath, x0, interval=None, substeps: int = 1) -> SamplePath:
    """Explicit Euler path on the (refined) driver grid.

    ``x_{k+1} = x_k + [A(t_k)x_k + F(t_k, x_k)] dt + C(t_k) x_k (ω_{k+1} - ω_k)``
    """
    drv = refine_driver(omega, interval, substeps)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (coeffs.dim,):
        raise ShapeError(f"x0 must have dimension {coeffs.dim}")
    dt = drv.dt
    dw = np.diff(drv.scalar)
    n = drv.n
    traj = np.empty((n, coeffs.dim))
    traj[0] = x0
    x = x0.copy()
    A_c, C_c = coeffs.constant_drift, coeffs.constant_diffusion
    F = coeffs.nonlinearity
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n - 1):
            t = (drv.start + k) * dt
            A = A_c if A_c is not None else coeffs.A(t)
            C = C_c if C_c is not None else coeffs.C(t)
            drift = A @ x
            if F is not None:
                drift = drift + F(t, x)
            x = x + drift * dt + (C @ x) * dw[k]
            traj[k + 1] = x
    bad = _first_bad_row(traj)
    if bad is not None:
        raise DivergenceError(f"non-finite state at step {bad} (t={(drv.start + bad) * dt:g})", step=bad)
    return SamplePath(traj, dt, drv.start)


@dataclass(frozen=True, eq=False)
class FlowMatrix:
    dt: float
    start: int
    mats: np.ndarray  # (n, d, d)

    @property
    def times(self) -> np.ndarray:
        return (self.start + np.arange(len(self.mats))) * self.dt

    @property
    def condition_numbers(self) -> np.ndarray:
        return np.linalg.cond(self.mats)

    @property
    def invertible(self) -> bool:
        c = self.condition_numbers
        return bool(np.all(np.isfinite(c)) and c.max() < 1e14)

    def norms(self) -> np.ndarray:
        """Operator 2-norm of every matrix."""
        return np.linalg.norm(self.mats, ord=2, axis=(1, 2))

    def at_index(self, i: int) -> np.ndarray:
        return self.mats[i]


def fundamental_matrix(A, C, omega: SamplePath, interval=None, substeps: int = 1) -> FlowMatrix:
    """Matrix solution of dz = A z dt + C z dω with identity initial value.

    The columns evolve exactly as solver runs from the canonical basis.
    """
    drv = refine_driver(omega, interval, substeps)
    A_fn, A_c = _as_time_fn(A)
    C_fn, C_c = _as_time_fn(C)
    d = (A_c if A_c is not None else A_fn(drv.t0)).shape[0]
    dt = drv.dt
    dw = np.diff(drv.scalar)
    mats = np.empty((drv.n, d, d))
    X = np.eye(d)
    mats[0] = X
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(drv.n - 1):
            t = (drv.start + k) * dt
            Ak = A_c if A_c is not None else A_fn(t)
            Ck = C_c if C_c is not None else C_fn(t)
            X = X + (Ak @ X) * dt + (Ck @ X) * dw[k]
            mats[k + 1] = X
    bad = _first_bad_row(mats)
    if bad is not None:
        raise DivergenceError(f"non-finite flow at step {bad}", step=bad)
    return FlowMatrix(dt, drv.start, mats)


def variation_of_parameters_check(coeffs: CoefficientSet, omega: SamplePath, x0, interval=None, substeps: int = 1) -> float:
    """Sup-norm gap between the solver path and Φ(t)x0 + Σ Φ(t - s, θ_s ω) F(x(s)) ds.

    The shifted flow is evaluated through the cocycle Φ(t - s, θ_s ω) = Φ(t) Φ(s)^{-1}.
    """
    if not coeffs.autonomous:
        raise DomainError("variation-of-parameters check needs constant A and C")
    x = solve_young_sde(coeffs, omega, x0, interval, substeps)
    flow = fundamental_matrix(coeffs.constant_drift, coeffs.constant_diffusion, omega, interval, substeps)
    if not flow.invertible:
        raise SolvabilityError("fundamental matrix is numerically singular on the interval")
    xs = x.values
    times = x.times
    Fx = np.array([coeffs.F(t, xi) for t, xi in zip(times, xs)])
    u_inc = np.linalg.solve(flow.mats, Fx[:, :, None])[:, :, 0] * x.dt
    u = np.asarray(x0, dtype=float)[None, :] + np.vstack([np.zeros((1, coeffs.dim)), np.cumsum(u_inc[:-1], axis=0)])
    recon = np.einsum("nij,nj->ni", flow.mats, u)
    return float(np.max(np.linalg.norm(xs - recon, axis=1)))


def polar_dynamics_check(coeffs: CoefficientSet, omega: SamplePath, x0, interval=None, substeps: int = 1,
                         floor: float = NEAR_ZERO_FLOOR) -> float:
    """Sup over the grid of |log r(t) - log r(0) - ∫ drift ds - ∫ <y, C y> dω|.

    Here r = |x| and y = x / r are taken from the Euler path.
    """
    x = solve_young_sde(coeffs, omega, x0, interval, substeps)
    drv = refine_driver(omega, interval, substeps)
    xs = x.values
    r = np.linalg.norm(xs, axis=1)
    if r.min() < floor:
        k = int(np.argmin(r))
        raise NearZeroError(f"|x| = {r[k]:.3e} below floor {floor:g} at t={x.times[k]:g}")
    y = xs / r[:, None]
    times = x.times
    drift = np.empty(x.n)
    noise = np.empty(x.n)
    for k, t in enumerate(times):
        drift[k] = y[k] @ coeffs.A(t) @ y[k] + y[k] @ coeffs.F(t, xs[k]) / r[k]
        noise[k] = y[k] @ coeffs.C(t) @ y[k]
    ds = np.concatenate([[0.0], np.cumsum(drift[:-1] * x.dt)])
    dn = young_integral_running(SamplePath(noise, x.dt, x.start), drv)[:, 0]
    resid = np.log(r) - np.log(r[0]) - ds - dn
    return float(np.max(np.abs(resid)))


def check_hypotheses(coeffs: CoefficientSet, times, rng: np.random.Generator, n_samples: int = 100,
                     sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None) -> dict:
    """Spot-check the declared dissipativity h(t) and Lipschitz f(t).

    Returns the largest excess found for each hypothesis (<= 0 means no
    violation observed). ``sampler(rng, d)`` draws the points used for the
    Lipschitz pairs; standard normal by default.
    """
    d = coeffs.dim
    draw = sampler or (lambda g, dim: g.standard_normal(dim))
    h1 = -np.inf
    h2 = -np.inf
    for t in times:
        A = coeffs.A(t)
        for _ in range(n_samples):
            u = rng.standard_normal(d)
            u /= np.linalg.norm(u)
            h1 = max(h1, float(u @ A @ u + coeffs.h(t)))
            a, b = draw(rng, d), draw(rng, d)
            gap = np.linalg.norm(a - b)
            if gap > 0:
                h2 = max(h2, float(np.linalg.norm(coeffs.F(t, a) - coeffs.F(t, b)) - coeffs.f(t) * gap))
    return {"dissipativity": h1, "lipschitz": h2}


def conjugate(coeffs: CoefficientSet, T, name: str | None = None) -> CoefficientSet:
    """Coefficients of x~ = T x: (T A T^-1, T F(t, T^-1 x~), T C T^-1).

    The Lipschitz metadata is scaled by |T| |T^-1|; h(t) is recomputed from
    the new drift.
    """
    T = np.asarray(T, dtype=float)
    Ti = np.linalg.inv(T)
    cond = float(np.linalg.norm(T, 2) * np.linalg.norm(Ti, 2))
    if coeffs.constant_drift is not None:
        A = T @ coeffs.constant_drift @ Ti
    else:
        A = lambda t: T @ coeffs.A(t) @ Ti  # noqa: E731
    if coeffs.constant_diffusion is not None:
        C = T @ coeffs.constant_diffusion @ Ti
    else:
        C = lambda t: T @ coeffs.C(t) @ Ti  # noqa: E731
    F = None
    if coeffs.nonlinearity is not None:
        F = lambda t, x: T @ coeffs.F(t, Ti @ x)  # noqa: E731
    f = coeffs.lipschitz
    lip = (lambda t: cond * coeffs.f(t)) if callable(f) else cond * float(f)
    return CoefficientSet(coeffs.dim, A, C, F, lip, None, name or f"{coeffs.name}~")
