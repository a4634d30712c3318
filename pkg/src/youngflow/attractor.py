"""Random pullback attractor machinery: Gronwall bound, absorbing radius,
temperedness series and pullback convergence experiments."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DivergenceError, DomainError, RangeError
from .fbm import wiener_shift
from .ode_young import CoefficientSet, solve_young_sde
from .paths import SamplePath
from .stability import KappaParams, kappa_from_seminorm, op_norm
from .variation import block_seminorms

__all__ = [
    "AttractorReport",
    "SeriesResult",
    "TemperednessResult",
    "SERIES_MIN_TERMS",
    "SERIES_RTOL",
    "gronwall_bound",
    "beta_bound",
    "beta_floor",
    "noise_weight",
    "attractor_rhs",
    "attractor_criterion",
    "block_kappas",
    "kappa_series",
    "absorbing_radius",
    "temperedness_probe",
    "pullback_experiment",
    "cube_points",
    "fit_decay_slope",
    "largest_admissible_scale",
]

SERIES_MIN_TERMS = 20
SERIES_RTOL = 1e-12


def gronwall_bound(z0: float, times, alpha, eta: float) -> np.ndarray:
    """z0 e^{η(t-a)} + ∫_a^t α(s) e^{η(t-s)} ds at every grid time, a = times[0].

    The integral uses the trapezoid rule on the supplied grid.
    """
    times = np.asarray(times, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if not (z0 > 0 and eta > 0):
        raise DomainError("gronwall_bound needs z0 > 0 and eta > 0")
    if alpha.shape != times.shape:
        raise DomainError("alpha must be tabulated on the time grid")
    if np.any(alpha < 0):
        raise DomainError("alpha must be nonnegative")
    s = times - times[0]
    growth = np.exp(eta * s)
    inner = cumulative_trapezoid(alpha * np.exp(-eta * s), s, initial=0.0)
    return growth * (z0 + inner)


def beta_floor(hurst: float, p: float) -> int:
    """Smallest admissible moment order max{ceil(2/(H - ν)), ceil(2p + 2)} with ν = 1/p."""
    nu = 1.0 / p
    if not nu < hurst:
        raise DomainError(f"need 1/p < hurst, got p={p}, hurst={hurst}")
    return max(math.ceil(2.0 / (hurst - nu)), math.ceil(2 * p + 2))


def beta_bound(q0: int, hurst: float | None = None, p: float | None = None) -> float:
    """Moment bound 32 sqrt(2(q0 + 1)).

    The floor on q0 is enforced when both ``hurst`` and ``p`` are given.
    """
    if int(q0) != q0 or q0 < 1:
        raise DomainError(f"q0 must be a positive integer, got {q0}")
    if hurst is not None and p is not None:
        floor = beta_floor(hurst, p)
        if q0 < floor:
            raise DomainError(f"q0={q0} is below the admissible floor {floor}")
    return 32.0 * math.sqrt(2.0 * (q0 + 1))


def noise_weight(C_norm: float, p: float) -> float:
    return max(C_norm, C_norm**p)


def _moment_factor(delta: float, p: float, K: float, G: float, beta: float) -> float:
    return max(delta ** (1 - p), 4 * K * G) * (beta + beta**p + beta**2 + beta ** (p + 1))


def attractor_rhs(delta: float, C_norm: float, p: float, K: float, G: float, beta: float) -> float:
    return 2 ** (p + 1) * noise_weight(C_norm, p) * _moment_factor(delta, p, K, G, beta)


def attractor_criterion(h_A: float, c_f: float, delta: float, C_norm: float, p: float, K: float, G: float,
                        beta: float) -> tuple[float, bool]:
    """Margin h = h_A - c_f e^δ - δ and whether it exceeds the noise term."""
    if not h_A > c_f:
        raise DomainError(f"need h_A > c_f, got h_A={h_A}, c_f={c_f}")
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    h = h_A - c_f * math.exp(delta) - delta
    return h, bool(h > attractor_rhs(delta, C_norm, p, K, G, beta))


def largest_admissible_scale(h: float, delta: float, p: float, K: float, G: float, beta: float,
                             norm_per_unit: float = 1.0) -> float:
    """Largest s with h > 2^{p+1} max{s·n, (s·n)^p} · (moment factor), n = ``norm_per_unit``."""
    if h <= 0:
        return 0.0
    budget = h / (2 ** (p + 1) * _moment_factor(delta, p, K, G, beta))
    # invert max{c, c^p} = budget
    c = budget if budget <= 1 else budget ** (1.0 / p)
    return c / norm_per_unit


def block_kappas(omega: SamplePath, params: KappaParams, first: int, count: int) -> np.ndarray:
    """κ(1, θ_j ω) for j = first..first+count-1, from unit-block seminorms."""
    if omega.t0 > first or omega.t_end < first + count:
        raise RangeError(f"omega covers [{omega.t0:g}, {omega.t_end:g}], need [{first}, {first + count}]")
    V = block_seminorms(omega, params.p, first, count)
    return kappa_from_seminorm(V, 1.0, params)


@dataclass(frozen=True)
class SeriesResult:
    partial: np.ndarray  # running value 1 + lead * sum of terms
    terms: np.ndarray
    truncated_at: int  # number of terms kept
    converged: bool  # stopping rule met
    diverging: bool  # tail terms growing when coverage ran out

    @property
    def value(self) -> float:
        return float(self.partial[-1])


def kappa_series(kappas_back: np.ndarray, h: float, c: float, lead: float = 1.0, *,
                 min_terms: int = SERIES_MIN_TERMS, rtol: float = SERIES_RTOL) -> SeriesResult:
    """Partial values of 1 + lead Σ_k exp(-hk + c Σ_{i<k} κ_i).

    ``kappas_back[i]`` is κ(1, θ_{-i}ω). Summation stops once the last term is
    below ``rtol`` times the running value and at least ``min_terms`` terms are
    in, or when the supplied κ values run out.
    """
    kb = np.asarray(kappas_back, dtype=float)
    if kb.size == 0:
        raise RangeError("no κ values supplied")
    k = np.arange(1, kb.size + 1)
    expo = -h * k + c * np.cumsum(kb)
    terms = lead * np.exp(expo)
    partial = 1.0 + np.cumsum(terms)
    stop = kb.size
    converged = False
    for n in range(min_terms, kb.size + 1):
        if terms[n - 1] <= rtol * partial[n - 1]:
            stop = n
            converged = True
            break
    tail = terms[max(0, stop - 5) : stop]
    diverging = (not converged) and tail.size >= 2 and bool(tail[-1] > tail[0])
    return SeriesResult(partial[:stop], terms[:stop], stop, bool(converged), diverging)


def absorbing_radius(omega: SamplePath, coeffs: CoefficientSet, delta: float, n_terms: int, p: float,
                     q: float | None = None, *, h: float | None = None) -> SeriesResult:
    """Partial sums of the absorbing radius b(ω) for k = 1..n_terms.

    Requires autonomous coefficients; h defaults to h_A - c_f e^δ - δ.
    """
    if not coeffs.autonomous:
        raise DomainError("absorbing_radius needs constant A and C")
    A, C = coeffs.constant_drift, coeffs.constant_diffusion
    params = KappaParams.from_matrices(A, C, p, q, delta)
    if h is None:
        h = coeffs.h(0.0) - coeffs.f(0.0) * math.exp(delta) - delta
    f0 = float(np.linalg.norm(coeffs.F(0.0, np.zeros(coeffs.dim))))
    lead = f0 * math.exp(3 * h + 2 * delta) / (h + delta)
    c = 2 ** (p + 1) * noise_weight(op_norm(C), p)
    kb = block_kappas(omega, params, -(n_terms - 1), n_terms)[::-1]
    return kappa_series(kb, h, c, lead)


@dataclass(frozen=True)
class TemperednessResult:
    m: np.ndarray
    slope_forward: np.ndarray  # (1/m) log ξ(θ_m ω)
    slope_backward: np.ndarray  # (1/m) log ξ(θ_{-m} ω)
    xi_forward: np.ndarray
    xi_backward: np.ndarray
    xi_zero: float
    diverging: bool


def temperedness_probe(omega: SamplePath, h: float, c: float, m_max: int, params: KappaParams, *,
                       min_terms: int = SERIES_MIN_TERMS, rtol: float = SERIES_RTOL) -> TemperednessResult:
    """ξ(θ_{±m} ω) and (1/m) log ξ(θ_{±m} ω) for m = 1..m_max.

    ``omega`` must cover [-(m_max + N), m_max + 1] where N is the number of
    series terms needed; series that stop on coverage without meeting the
    truncation rule are flagged through ``diverging``.
    """
    lo = math.ceil(omega.t0 - 1e-9)
    hi = math.floor(omega.t_end + 1e-9)
    if hi < m_max + 1 or lo > -m_max - min_terms:
        raise RangeError(f"omega covers [{omega.t0:g}, {omega.t_end:g}], need at least [{-m_max - min_terms}, {m_max + 1}]")
    kap = block_kappas(omega, params, lo, hi - lo)  # kap[j - lo] = κ(1, θ_j ω)

    def xi_at(shift: int) -> SeriesResult:
        back = kap[: shift - lo + 1][::-1]
        return kappa_series(back, h, c, 1.0, min_terms=min_terms, rtol=rtol)

    ms = np.arange(1, m_max + 1)
    fwd, bwd = [], []
    flagged = False
    for m in ms:
        for shift, out in ((int(m), fwd), (-int(m), bwd)):
            res = xi_at(shift)
            flagged |= not res.converged
            out.append(res.value)
    zero = xi_at(0)
    xf, xb = np.array(fwd), np.array(bwd)
    return TemperednessResult(ms, np.log(xf) / ms, np.log(xb) / ms, xf, xb, zero.value, flagged or not zero.converged)


@dataclass(frozen=True)
class AttractorReport:
    h: float
    delta: float
    b_partial: np.ndarray
    xi_partial: np.ndarray
    pullback_distances: np.ndarray  # rows (t, max pairwise distance)
    decay_slope: float
    criterion_ok: bool
    absorbing_time: float = float("nan")
    fit_floor: float = 0.0
    extras: dict = field(default_factory=dict)

    def recompute_slope(self) -> float:
        return fit_decay_slope(self.pullback_distances, self.absorbing_time, self.fit_floor)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        return d


def cube_points(center, half_width: float, per_axis: int = 2) -> np.ndarray:
    """Grid of points on [center - w, center + w]^d with ``per_axis`` points per axis."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    axis = np.linspace(-half_width, half_width, per_axis)
    return np.array([center + np.array(v) for v in itertools.product(axis, repeat=center.size)])


def fit_decay_slope(distances: np.ndarray, absorbing_time: float = float("nan"), floor: float = 0.0) -> float:
    """Least-squares slope of log distance against t.

    Only rows with t >= ``absorbing_time`` (when finite) and distance > ``floor``
    enter the fit; NaN when fewer than two rows qualify.
    """
    d = np.asarray(distances, dtype=float)
    keep = d[:, 1] > floor
    if math.isfinite(absorbing_time):
        keep &= d[:, 0] >= absorbing_time
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(d[keep, 0], np.log(d[keep, 1]), 1)[0])


def _max_pairwise(points: np.ndarray) -> float:
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=2)).max())


def pullback_experiment(coeffs: CoefficientSet, omega: SamplePath, x0_set, times, *, substeps: int = 1,
                        b_radius: float | None = None, fit_floor: float = 0.0, h: float = float("nan"),
                        delta: float = float("nan"), criterion_ok: bool = False,
                        b_partial=None, xi_partial=None) -> AttractorReport:
    """Pull every x0 back over [-t, 0] and record the spread at the fiber ω.

    Each run integrates on [0, t] against θ_{-t}ω. The decay slope uses the
    rows after the first t whose spread is below ``b_radius`` (all rows if
    None) and above ``fit_floor``.
    """
    x0_set = np.atleast_2d(np.asarray(x0_set, dtype=float))
    if x0_set.shape[0] < 2:
        raise DomainError("pullback_experiment needs at least two initial points")
    times = np.asarray(sorted(float(t) for t in times))
    if omega.t0 > -times[-1] + 1e-9 * omega.dt or omega.t_end < 0:
        raise RangeError(f"omega must cover [{-times[-1]:g}, 0]")
    rows = []
    finals = []
    for t in times:
        drv = wiener_shift(omega, -t)
        ends = []
        for x0 in x0_set:
            try:
                traj = solve_young_sde(coeffs, drv, x0, (0.0, t), substeps)
            except DivergenceError as exc:
                raise DivergenceError(f"pullback from t={t:g}, x0={x0.tolist()}: {exc}", step=exc.step) from None
            ends.append(traj.values[-1])
        ends = np.array(ends)
        finals.append(ends)
        rows.append((t, _max_pairwise(ends)))
    dist = np.array(rows)
    t_abs = float("nan")
    if b_radius is not None:
        below = np.flatnonzero(dist[:, 1] < b_radius)
        if below.size:
            t_abs = float(dist[below[0], 0])
    slope = fit_decay_slope(dist, t_abs, fit_floor)
    return AttractorReport(
        h=float(h),
        delta=float(delta),
        b_partial=np.asarray([] if b_partial is None else b_partial, dtype=float),
        xi_partial=np.asarray([] if xi_partial is None else xi_partial, dtype=float),
        pullback_distances=dist,
        decay_slope=slope,
        criterion_ok=bool(criterion_ok),
        absorbing_time=t_abs,
        fit_floor=float(fit_floor),
        extras={"fiber_point": finals[-1].mean(axis=0).tolist()},
    )
