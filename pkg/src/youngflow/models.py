"""Concrete systems: stochastic SIR dynamics and Lyapunov-equation transforms."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import DomainError, SolvabilityError, TransformError
from .ode_young import CoefficientSet, conjugate, solve_young_sde
from .paths import SamplePath

__all__ = [
    "SirParams",
    "SirSystem",
    "sir_build",
    "sir_nonlinearity",
    "sir_positivity_probe",
    "lipschitz_certificate",
    "lyapunov_transform",
]


@dataclass(frozen=True)
class SirParams:
    q: float = 0.0
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    gamma: float = 0.0
    sigma1: float = 0.0
    sigma2: float = 0.0
    sigma3: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"SIR parameter {f.name} must be finite and >= 0, got {v}")

    @property
    def sigma_max(self) -> float:
        return max(self.sigma1, self.sigma2, self.sigma3)

    def to_dict(self) -> dict:
        return asdict(self)


def sir_nonlinearity(params: SirParams):
    """F(y) = (q - γ SI/N, γ SI/N, 0) with SI/N taken as 0 at N = 0."""
    q, g = params.q, params.gamma

    def F(t, y):
        S, I, R = y
        N = S + I + R
        frac = 0.0 if N == 0 else S * I / N
        return np.array([q - g * frac, g * frac, 0.0])

    return F


def _sir_original(params: SirParams) -> CoefficientSet:
    a, b, c = params.a, params.b, params.c
    A = np.array([[-a, b, 0.0], [0.0, -a - b - c, 0.0], [0.0, c, -a]])
    C = np.diag([params.sigma1, params.sigma2, params.sigma3])
    return CoefficientSet(3, A, C, sir_nonlinearity(params), math.sqrt(3) * params.gamma, None, "sir")


@dataclass(frozen=True, eq=False)
class SirSystem:
    params: SirParams
    original: CoefficientSet  # y = (S, I, R)
    transformed: CoefficientSet  # x = P^{-1} y
    P: np.ndarray
    Pinv: np.ndarray
    D: np.ndarray

    def to_transformed(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) @ self.Pinv.T

    def to_original(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.P.T


def sir_build(params: SirParams) -> SirSystem:
    """Original and diagonalised SIR coefficient sets.

    The transformed system has drift D = diag(-a, -a, -a-b-c), nonlinearity
    P^{-1} F(P x) and diffusion P^{-1} C P; its Lipschitz metadata is
    √3 γ |P| |P^{-1}|.
    """
    a, b, c = params.a, params.b, params.c
    if not b + c > 0:
        raise DomainError("b + c must be positive for the diagonalising transform")
    s = b + c
    D = np.diag([-a, -a, -a - b - c])
    P = np.array([[1.0, 0.0, b / s], [0.0, 0.0, -1.0], [0.0, 1.0, c / s]])
    Pinv = np.array([[1.0, b / s, 0.0], [0.0, c / s, 1.0], [0.0, -1.0, 0.0]])
    original = _sir_original(params)
    transformed = conjugate(original, Pinv, name="sir-diagonal")
    # conjugate() keeps P^{-1} A P as computed; store the exact diagonal instead
    transformed = CoefficientSet(3, D, transformed.constant_diffusion, transformed.nonlinearity,
                                 transformed.lipschitz, None, "sir-diagonal")
    return SirSystem(params, original, transformed, P, Pinv, D)


def lipschitz_certificate(F, dim: int, rng: np.random.Generator, n_pairs: int = 1000, *, scale: float = 1.0,
                          sampler=None) -> float:
    """Largest observed |F(u) - F(v)| / |u - v| over random pairs (default: uniform on the orthant box)."""
    draw = sampler or (lambda g: g.uniform(0.0, scale, dim))
    best = 0.0
    for _ in range(n_pairs):
        u, v = draw(rng), draw(rng)
        gap = np.linalg.norm(u - v)
        if gap > 0:
            best = max(best, float(np.linalg.norm(F(0.0, u) - F(0.0, v)) / gap))
    return best


def sir_positivity_probe(params: SirParams, omega: SamplePath, y0, horizon: float, *, substeps: int = 1):
    """First grid time in (0, horizon] at which a component of (S, I, R) is <= 0, or None."""
    y0 = np.asarray(y0, dtype=float)
    if np.any(y0 <= 0):
        raise DomainError("initial state must be componentwise positive")
    traj = solve_young_sde(_sir_original(params), omega, y0, (0.0, horizon), substeps)
    bad = np.flatnonzero(np.any(traj.values <= 0, axis=1))
    return None if bad.size == 0 else float(traj.times[bad[0]])


def lyapunov_transform(A, D_target) -> tuple[np.ndarray, float]:
    """Solve A^T X + X A = 2 D for X = Q^2 and return (Q, λ_D / |Q|^2).

    λ_D is the smallest eigenvalue of -D; Q is the principal symmetric
    square root of X.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    D = np.atleast_2d(np.asarray(D_target, dtype=float))
    d = A.shape[0]
    if A.shape != (d, d) or D.shape != (d, d):
        raise DomainError("A and D must be square of equal size")
    if not np.allclose(D, D.T, rtol=0, atol=1e-14 * max(1.0, np.abs(D).max())):
        raise DomainError("D must be symmetric")
    lam_D = float(np.linalg.eigvalsh(-D)[0])
    if not lam_D > 0:
        raise DomainError("D must be negative definite")
    if not np.all(np.linalg.eigvals(A).real < 0):
        raise SolvabilityError("A is not Hurwitz; the Lyapunov equation has no positive solution")
    eye = np.eye(d)
    # column-major vec: vec(A^T X) = (I ⊗ A^T) vec X, vec(X A) = (A^T ⊗ I) vec X
    L = np.kron(eye, A.T) + np.kron(A.T, eye)
    X = np.linalg.solve(L, 2.0 * D.reshape(-1, order="F")).reshape(d, d, order="F")
    X = 0.5 * (X + X.T)
    w, V = np.linalg.eigh(X)
    if not w[0] > 0:
        raise TransformError(f"solution X is not positive definite (smallest eigenvalue {w[0]:.3e})")
    Q = (V * np.sqrt(w)) @ V.T
    return Q, lam_D / float(np.linalg.norm(Q, 2)) ** 2
