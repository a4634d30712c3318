import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from youngflow.errors import DomainError, NearZeroError, RangeError
from youngflow.fbm import FbmSpec, generate_one_sided, wiener_shift
from youngflow.ode_young import CoefficientSet, solve_young_sde
from youngflow.paths import SamplePath
from youngflow.stability import (
    DEFAULT_DELTA,
    KappaParams,
    block_stats,
    cesaro_limit,
    criterion_report,
    default_nu,
    default_p,
    g_constant,
    kappa,
    kappa_on_grid,
    lyapunov_estimate,
    op_norm,
    phi_bound_check,
)
from youngflow.variation import pvar_seminorm
from youngflow.young import k_constant

H = 0.75
P = default_p(H)


@pytest.fixture(scope="module")
def long_path():
    return generate_one_sided(FbmSpec(H, 24, 64, seed=5))


def scaled(path, lam):
    return SamplePath(lam * path.raw, path.dt, path.start, lam * path.offset)


def system(c_norm, f=0.0):
    return CoefficientSet(2, -np.eye(2), c_norm * np.array([[1.0, 0.0], [0.0, -1.0]]),
                          (lambda t, x: f * np.tanh(x)) if f else None, lipschitz=f)


class TestDefaults:
    def test_nu_and_p(self):
        assert default_nu(0.7) == pytest.approx(0.6)
        assert default_p(0.7) == pytest.approx(1 / 0.6)
        with pytest.raises(DomainError):
            default_nu(0.5)

    def test_g_constant(self):
        assert g_constant(0.5, 0.0, 2.0, 1.5) == pytest.approx(4.0**1.5)
        assert g_constant(0.0, 0.0, 2.0, 1.5) == 0.0

    def test_kappa_params_recomputable(self):
        A, C = -np.eye(2), 0.2 * np.eye(2)
        kp = KappaParams.from_matrices(A, C, 1.6)
        K = k_constant(1.6, 1.6)
        assert kp.K == K
        expected = max(8 * 1.0, 16 * K * 0.2, 8**1.6, (16 * K * 0.2) ** 1.6)
        assert kp.G == pytest.approx(expected, rel=1e-14)
        assert kp.delta == DEFAULT_DELTA
        with pytest.raises(DomainError):
            KappaParams(0.0, 1.6, K, 1.0)


class TestCesaro:
    @pytest.mark.parametrize("exponent", [0.5, 2.0, 7.2])
    def test_constant(self, exponent):
        assert cesaro_limit(np.full(9, 1.7), exponent) == pytest.approx(1.7, rel=1e-14)

    def test_two_values(self):
        assert cesaro_limit([0.0, 2.0], 2.0) == pytest.approx(math.sqrt(2.0))

    @pytest.mark.parametrize("values, exponent", [([], 2.0), ([1.0], 0.0), ([1.0, -0.1], 2.0)])
    def test_domain(self, values, exponent):
        with pytest.raises(DomainError):
            cesaro_limit(values, exponent)

    def test_fbm_blocks_approach_moment(self):
        # block seminorms of one long path against an ensemble of unit paths
        exponent = 2 * P + 2
        one = generate_one_sided(FbmSpec(H, 256, 32, seed=77))
        blocks = [pvar_seminorm(one, P, (k, k + 1)).value for k in range(256)]
        ens = [pvar_seminorm(generate_one_sided(FbmSpec(H, 1, 32, seed=1000 + k)), P).value for k in range(1000)]
        assert cesaro_limit(blocks, exponent) == pytest.approx(cesaro_limit(ens, exponent), rel=0.1)


class TestBlockStats:
    def test_autonomous_values(self, long_path):
        co = system(0.3, f=0.2)
        st_ = block_stats(co, long_path, 5, P, P)
        assert np.allclose(st_.drift, 1.0 + 0.2)
        assert np.allclose(st_.diffusion, 0.3)
        for k in range(5):
            assert st_.driver[k] == pvar_seminorm(long_path, P, (k, k + 1)).value

    def test_zero_diffusion(self, long_path):
        assert np.all(block_stats(system(0.0), long_path, 4, P, P).diffusion == 0.0)

    def test_time_dependent_diffusion(self, long_path):
        co = CoefficientSet(1, np.array([[-1.0]]), lambda t: np.array([[0.1 * math.sin(t)]]))
        st_ = block_stats(co, long_path, 3, P, P)
        assert np.all(st_.diffusion > 0)

    def test_coverage(self, long_path):
        with pytest.raises(RangeError):
            block_stats(system(0.1), long_path, 30, P, P)


class TestCriterion:
    def test_no_noise(self, long_path):
        rep = criterion_report(system(0.0, f=0.4), long_path, 8, P)
        assert rep.criterion_rhs == 0.0
        assert rep.h0 == pytest.approx(0.6)
        assert rep.verdict

    def test_h_equals_f(self, long_path):
        co = CoefficientSet(2, -np.eye(2), 0.1 * np.eye(2), lambda t, x: np.tanh(x), lipschitz=1.0)
        rep = criterion_report(co, long_path, 8, P)
        assert rep.h0 == 0.0 and rep.criterion_rhs > 0 and not rep.verdict

    def test_report_is_consistent(self, long_path):
        rep = criterion_report(system(0.05), long_path, 16, P, x0=[1.0, 1.0])
        assert rep.recompute_rhs() == rep.criterion_rhs
        assert rep.verdict == (rep.criterion_lhs > rep.criterion_rhs)
        assert rep.K == k_constant(P, P)
        assert math.isfinite(rep.lyapunov_estimate)
        assert set(rep.drift) == {"A_hat", "C_hat", "gamma2", "gamma4", "gamma2p2"}
        assert rep.to_dict()["m_blocks"] == 16

    def test_time_dependent_h0(self, long_path):
        co = CoefficientSet(1, np.array([[-1.0]]), np.zeros((1, 1)), dissipativity=lambda t: 1.0 + math.cos(t))
        rep = criterion_report(co, long_path, 4, P)
        assert rep.h0 == pytest.approx(1.0 + math.sin(4.0) / 4, abs=1e-5)

    def test_rhs_monotone_in_diffusion(self, long_path):
        rhs = [criterion_report(system(c), long_path, 8, P).criterion_rhs for c in (0.01, 0.05, 0.2, 1.0)]
        assert all(b > a for a, b in zip(rhs, rhs[1:]))

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_scale_covariance(self, long_path, lam):
        base = criterion_report(system(0.1), long_path, 8, P)
        other = criterion_report(system(0.1), scaled(long_path, lam), 8, P)
        assert other.gamma2 == pytest.approx(lam * base.gamma2, rel=1e-12)
        assert other.gamma2p2 == pytest.approx(lam * base.gamma2p2, rel=1e-12)
        assert other.A_hat == base.A_hat and other.K == base.K
        assert (other.criterion_rhs > base.criterion_rhs) == (lam > 1)

    def test_sweep_flips_once(self, long_path):
        verdicts = [criterion_report(system(c), long_path, 16, P).verdict for c in np.geomspace(1e-7, 1.0, 25)]
        assert verdicts[0] and not verdicts[-1]
        flips = sum(a != b for a, b in zip(verdicts, verdicts[1:]))
        assert flips == 1


class TestLyapunov:
    def test_exponential(self):
        t = np.linspace(0, 5, 501)
        traj = SamplePath(np.exp(-2 * t)[:, None] * np.array([3.0, 4.0]), 0.01)
        assert lyapunov_estimate(traj) == pytest.approx(-2.0, abs=1e-6)

    def test_constant(self):
        assert lyapunov_estimate(SamplePath(np.ones((100, 2)), 0.1)) == pytest.approx(0.0, abs=1e-12)

    def test_scalar_noisy_tends_to_minus_one(self):
        w = generate_one_sided(FbmSpec(0.7, 200, 16, seed=2))
        co = CoefficientSet(1, np.array([[-1.0]]), np.array([[0.5]]))
        traj = solve_young_sde(co, w, [1.0])
        assert lyapunov_estimate(traj, 0.5) == pytest.approx(-1.0, abs=0.1)

    def test_zero_norm(self):
        with pytest.raises(NearZeroError):
            lyapunov_estimate(SamplePath(np.zeros(10), 0.1))

    def test_bad_fraction(self):
        with pytest.raises(DomainError):
            lyapunov_estimate(SamplePath(np.ones(10), 0.1), 0.0)


class TestKappa:
    params = KappaParams.from_matrices(-np.eye(2), 0.3 * np.eye(2), P)

    def test_zero_path(self):
        w = SamplePath(np.zeros(65), 1 / 64)
        assert kappa(1.0, w, self.params) == 0.0

    def test_range(self, long_path):
        with pytest.raises(RangeError):
            kappa(1.5, long_path, self.params)

    def test_monotone(self, long_path):
        _, kap = kappa_on_grid(long_path, self.params)
        assert np.all(np.diff(kap) >= 0)
        assert kap[-1] == pytest.approx(kappa(1.0, long_path, self.params), rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(start=st.integers(0, 20), s=st.integers(1, 63), t=st.integers(2, 64))
    def test_superadditive(self, long_path, start, s, t):
        if s >= t:
            return
        w = wiener_shift(long_path, float(start))
        lhs = kappa(t / 64, w, self.params)
        rhs = kappa(s / 64, w, self.params) + kappa((t - s) / 64, wiener_shift(w, s / 64), self.params)
        assert lhs >= rhs * (1 - 1e-12)


class TestPhiBound:
    def test_no_noise(self, long_path):
        A = np.array([[-1.0, 0.5], [-0.5, -2.0]])
        assert phi_bound_check(A, np.zeros((2, 2)), long_path, 0.1, p=P) == []

    @pytest.mark.parametrize("a, c", [(-1.0, 0.5), (-0.2, 2.0), (-3.0, 0.1)])
    def test_scalar(self, long_path, a, c):
        assert phi_bound_check([[a]], [[c]], long_path, 0.1, p=P) == []

    @pytest.mark.parametrize("seed", range(5))
    def test_random_negative_definite(self, seed):
        rng = np.random.default_rng(seed)
        M = rng.standard_normal((3, 3))
        A = -(M @ M.T) - 0.1 * np.eye(3) + (M - M.T)
        C = rng.standard_normal((3, 3))
        C *= 0.5 / op_norm(C)
        w = generate_one_sided(FbmSpec(H, 1, 256, seed=seed))
        assert phi_bound_check(A, C, w, p=P) == []
