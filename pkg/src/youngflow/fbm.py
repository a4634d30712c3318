"""Two-sided fractional Brownian motion on a uniform grid.

Increments (fractional Gaussian noise) are sampled exactly by circulant
embedding (Davies-Harte). Grids with at most ``CHOLESKY_CUTOFF`` increments
use a dense Cholesky factor of the Toeplitz increment covariance instead.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky, toeplitz

from .errors import DomainError, RangeError, ResourceError
from .paths import SamplePath

__all__ = [
    "FbmSpec",
    "SamplePath",
    "CHOLESKY_CUTOFF",
    "MAX_STEPS_PER_SIDE",
    "covariance_rh",
    "fgn_autocovariance",
    "generate_fbm",
    "generate_one_sided",
    "generate_ensemble",
    "wiener_shift",
]

CHOLESKY_CUTOFF = 64
MAX_STEPS_PER_SIDE = 2**24
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class FbmSpec:
    hurst: float
    horizon: float
    steps_per_unit: int
    seed: int = 0

    def __post_init__(self):
        if not 0.5 < self.hurst < 1:
            raise DomainError(f"hurst must lie in (1/2, 1), got {self.hurst}")
        if self.horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {self.horizon}")
        if int(self.steps_per_unit) != self.steps_per_unit or self.steps_per_unit < 2:
            raise DomainError(f"steps_per_unit must be an integer >= 2, got {self.steps_per_unit}")
        if not 0 <= int(self.seed) <= _SEED_MASK:
            raise DomainError("seed must be a 64-bit unsigned integer")
        n = self.horizon * self.steps_per_unit
        if abs(n - round(n)) > 1e-9:
            raise DomainError("horizon * steps_per_unit must be an integer")

    @property
    def dt(self) -> float:
        return 1.0 / self.steps_per_unit

    @property
    def steps_per_side(self) -> int:
        return int(round(self.horizon * self.steps_per_unit))


def covariance_rh(s: float, t: float, hurst: float) -> float:
    """Covariance ½(|t|^{2H} + |s|^{2H} - |t-s|^{2H}) of fBm."""
    if not (np.isfinite(s) and np.isfinite(t) and np.isfinite(hurst)):
        raise DomainError("covariance_rh needs finite inputs")
    if not 0 < hurst < 1:
        raise DomainError(f"hurst must lie in (0, 1), got {hurst}")
    h2 = 2.0 * hurst
    return 0.5 * (abs(t) ** h2 + abs(s) ** h2 - abs(t - s) ** h2)


def fgn_autocovariance(k, hurst: float) -> np.ndarray:
    """Autocovariance of unit-spacing fractional Gaussian noise at lags ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1) ** h2 - 2 * k**h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=32)
def _circulant_sqrt_eigs(n: int, hurst: float) -> np.ndarray:
    gamma = fgn_autocovariance(np.arange(n + 1), hurst)
    row = np.concatenate([gamma, gamma[-2:0:-1]])  # length 2n
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        raise RuntimeError(f"circulant embedding not nonnegative definite (min eigenvalue {eig.min():.3e})")
    return np.sqrt(np.clip(eig, 0.0, None) / (2 * n))


@lru_cache(maxsize=32)
def _cholesky_factor(n: int, hurst: float) -> np.ndarray:
    return cholesky(toeplitz(fgn_autocovariance(np.arange(n), hurst)), lower=True)


def _fgn(n: int, hurst: float, rng: np.random.Generator) -> np.ndarray:
    """Exact unit-spacing fGn sample of length n."""
    if n <= CHOLESKY_CUTOFF:
        return _cholesky_factor(n, hurst) @ rng.standard_normal(n)
    lam = _circulant_sqrt_eigs(n, hurst)
    z = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
    return np.fft.fft(lam * z)[:n].real


def _one_sided(n: int, dt: float, hurst: float, rng: np.random.Generator) -> np.ndarray:
    if n > MAX_STEPS_PER_SIDE:
        raise ResourceError(f"{n} steps per side exceeds the exact-sampler limit MAX_STEPS_PER_SIDE={MAX_STEPS_PER_SIDE}")
    out = np.empty(n + 1)
    out[0] = 0.0
    np.cumsum(_fgn(n, hurst, rng) * dt**hurst, out=out[1:])
    return out


def generate_one_sided(spec: FbmSpec) -> SamplePath:
    """fBm on [0, horizon] only; same law as the positive half of ``generate_fbm``."""
    rng = np.random.default_rng(int(spec.seed))
    return SamplePath(_one_sided(spec.steps_per_side, spec.dt, spec.hurst, rng), spec.dt, 0)


def generate_fbm(spec: FbmSpec) -> SamplePath:
    """Two-sided fBm on [-horizon, horizon] with value exactly 0 at t = 0.

    The two halves are independent one-sided fBms; the negative half is
    reflected in time and glued at the origin.
    """
    n = spec.steps_per_side
    rng = np.random.default_rng(int(spec.seed))
    pos = _one_sided(n, spec.dt, spec.hurst, rng)
    neg = _one_sided(n, spec.dt, spec.hurst, rng)
    return SamplePath(np.concatenate([neg[:0:-1], pos]), spec.dt, -n)


def derived_seed(seed: int, k: int) -> int:
    return (int(seed) ^ int(k)) & _SEED_MASK


def generate_ensemble(spec: FbmSpec, count: int, *, one_sided=False, threads: int = 1) -> list[SamplePath]:
    """``count`` paths using per-path seeds ``seed XOR k``."""
    if count < 1:
        raise DomainError(f"ensemble size must be positive, got {count}")
    gen = generate_one_sided if one_sided else generate_fbm
    specs = [replace(spec, seed=derived_seed(spec.seed, k)) for k in range(count)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(gen, specs))
    return [gen(s) for s in specs]


def wiener_shift(path: SamplePath, t: float) -> SamplePath:
    """The shifted path s -> omega(t + s) - omega(t) on the remaining grid."""
    try:
        k = path.index_of(t)
    except RangeError as exc:
        raise RangeError(f"cannot shift by {t}: {exc}") from None
    kt = int(round(t / path.dt))
    return SamplePath(path.raw, path.dt, path.start - kt, path.raw[k])
