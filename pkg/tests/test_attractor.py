import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.stats import kendalltau

from youngflow.attractor import (
    absorbing_radius,
    attractor_criterion,
    attractor_rhs,
    beta_bound,
    beta_floor,
    block_kappas,
    cube_points,
    fit_decay_slope,
    gronwall_bound,
    kappa_series,
    largest_admissible_scale,
    pullback_experiment,
    temperedness_probe,
)
from youngflow.errors import DomainError, RangeError
from youngflow.fbm import FbmSpec, generate_ensemble, generate_fbm, wiener_shift
from youngflow.ode_young import CoefficientSet
from youngflow.stability import KappaParams, default_p, kappa
from youngflow.variation import pvar_seminorm
from youngflow.young import k_constant

H = 0.75
P = default_p(H)


@pytest.fixture(scope="module")
def two_sided():
    return generate_fbm(FbmSpec(H, 80, 32, seed=17))


class TestGronwall:
    def test_no_forcing(self):
        t = np.linspace(0, 2, 201)
        assert gronwall_bound(2.0, t, np.zeros_like(t), 0.5) == pytest.approx(2.0 * np.exp(0.5 * t), rel=1e-14)

    def test_unit_case(self):
        t = np.linspace(0, 1, 10_001)
        b = gronwall_bound(1.0, t, np.ones_like(t), 1.0)
        assert b[-1] == pytest.approx(2 * math.e - 1, abs=1e-7)
        assert b[-1] == pytest.approx(4.43656, abs=1e-5)

    @settings(max_examples=25, deadline=None)
    @given(z0=st.floats(0.1, 5.0), eta=st.floats(0.05, 3.0), amp=st.floats(0.0, 2.0), freq=st.floats(0.0, 6.0))
    def test_dominates_equality_case(self, z0, eta, amp, freq):
        t = np.linspace(0, 1, 4001)
        alpha_fn = lambda s: amp * (1 + np.sin(freq * s))  # noqa: E731
        sol = solve_ivp(lambda s, z: alpha_fn(s) + eta * z, (0, 1), [z0], t_eval=t, rtol=1e-11, atol=1e-12)
        bound = gronwall_bound(z0, t, alpha_fn(t), eta)
        assert np.all(sol.y[0] <= bound * (1 + 1e-6))

    @pytest.mark.parametrize("z0, eta, alpha", [(0.0, 1.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, -0.1)])
    def test_domain(self, z0, eta, alpha):
        t = np.linspace(0, 1, 5)
        with pytest.raises(DomainError):
            gronwall_bound(z0, t, np.full_like(t, alpha), eta)


class TestBeta:
    @pytest.mark.parametrize("q0, expected", [(7, 128.0), (49, 320.0)])
    def test_values(self, q0, expected):
        assert beta_bound(q0) == pytest.approx(expected, rel=1e-15)

    def test_floor(self):
        floor = beta_floor(0.75, 1 / 0.7)
        assert floor == max(math.ceil(2 / (0.75 - 0.7)), math.ceil(2 / 0.7 + 2))
        with pytest.raises(DomainError, match=str(floor)):
            beta_bound(floor - 1, 0.75, 1 / 0.7)
        assert beta_bound(floor, 0.75, 1 / 0.7) > 0

    def test_empirical_moment_below_bound(self):
        q0 = beta_floor(H, P)
        spec = FbmSpec(H, 1, 64, seed=4)
        vals = np.array([pvar_seminorm(w, P).value for w in generate_ensemble(spec, 2000, one_sided=True)])
        assert np.mean(vals**q0) ** (1 / q0) <= beta_bound(q0)


class TestCriterion:
    K = k_constant(P, P)

    def test_no_noise(self):
        h, ok = attractor_criterion(2.0, 0.5, 0.1, 0.0, P, self.K, 100.0, 128.0)
        assert h == pytest.approx(2.0 - 0.5 * math.exp(0.1) - 0.1)
        assert ok

    def test_margin_exhausted(self):
        h, ok = attractor_criterion(1.0, 0.9, 0.2, 0.0, P, self.K, 100.0, 128.0)
        assert h <= 0 and not ok

    def test_hypothesis(self):
        with pytest.raises(DomainError):
            attractor_criterion(1.0, 1.0, 0.1, 0.0, P, self.K, 1.0, 1.0)

    def test_largest_scale_is_threshold(self):
        h, delta, G, beta = 1.5, 0.1, 50.0, 128.0
        s = largest_admissible_scale(h, delta, P, self.K, G, beta, norm_per_unit=2.0)
        assert attractor_rhs(delta, 2.0 * s * 0.999, P, self.K, G, beta) < h
        assert attractor_rhs(delta, 2.0 * s * 1.001, P, self.K, G, beta) > h


class TestSeries:
    def test_no_noise_geometric(self):
        res = kappa_series(np.ones(200), 1.0, 0.0)
        assert res.converged
        assert res.value == pytest.approx(1 + 1 / (math.e - 1), rel=1e-11)
        assert res.partial[0] >= 1 and np.all(np.diff(res.partial) >= 0)

    def test_min_terms(self):
        res = kappa_series(np.ones(200), 50.0, 0.0)
        assert res.truncated_at == 20

    def test_diverging_flagged(self):
        res = kappa_series(np.ones(30), 0.1, 1.0)
        assert not res.converged and res.diverging

    def test_absorbing_radius_trivial(self, two_sided):
        co = CoefficientSet(2, -np.eye(2), np.zeros((2, 2)))
        res = absorbing_radius(two_sided, co, 0.1, 40, P)
        assert np.all(res.partial == 1.0)

    def test_absorbing_radius_decays(self, two_sided):
        co = CoefficientSet(2, -2 * np.eye(2), 1e-6 * np.eye(2), lambda t, x: 0.3 + 0.1 * np.tanh(x), lipschitz=0.1)
        res = absorbing_radius(two_sided, co, 0.1, 60, P)
        assert res.value >= 1 and res.converged
        assert np.all(res.terms > 0)
        ratios = res.terms[-5:] / res.terms[-6:-1]
        assert np.all(ratios < 1)

    def test_coverage(self, two_sided):
        co = CoefficientSet(1, np.array([[-1.0]]), np.zeros((1, 1)))
        with pytest.raises(RangeError):
            absorbing_radius(two_sided, co, 0.1, 200, P)


class TestTemperedness:
    params = KappaParams.from_matrices(-np.eye(2), 0.01 * np.eye(2), P)

    def test_no_noise(self, two_sided):
        res = temperedness_probe(two_sided, 1.0, 0.0, 20, self.params)
        geo = 1 + 1 / (math.e - 1)
        assert np.allclose(res.xi_forward, geo) and np.allclose(res.xi_backward, geo)
        assert res.slope_forward[-1] == pytest.approx(math.log(geo) / 20)
        assert not res.diverging

    def test_small_c(self, two_sided):
        res = temperedness_probe(two_sided, 1.0, 1e-8, 40, self.params)
        assert np.all(res.xi_forward >= 1) and np.all(res.xi_backward >= 1)
        assert abs(res.slope_forward[-1]) < 0.05 and abs(res.slope_backward[-1]) < 0.05

    def test_coverage(self, two_sided):
        with pytest.raises(RangeError):
            temperedness_probe(two_sided, 1.0, 0.0, 79, self.params)


class TestKappaShift:
    params = KappaParams.from_matrices(-np.eye(2), 0.2 * np.eye(2), P)

    @settings(max_examples=60, deadline=None)
    @given(base=st.integers(-70, 70), k=st.integers(0, 32))
    def test_shift_bound(self, two_sided, base, k):
        w = wiener_shift(two_sided, float(base))
        lhs = kappa(1.0, wiener_shift(w, k / 32), self.params)
        rhs = 2**P * (kappa(1.0, w, self.params) + kappa(1.0, wiener_shift(w, 1.0), self.params))
        assert lhs <= rhs * (1 + 1e-12)

    def test_block_kappas_match(self, two_sided):
        ks = block_kappas(two_sided, self.params, -3, 3)
        for j, b in enumerate(range(-3, 0)):
            assert ks[j] == pytest.approx(kappa(1.0, wiener_shift(two_sided, float(b)), self.params), rel=1e-12)


class TestPullback:
    def test_linear_deterministic_slope(self, two_sided):
        A = np.array([[-1.0, 0.0], [0.0, -3.0]])
        co = CoefficientSet(2, A, np.zeros((2, 2)))
        rep = pullback_experiment(co, two_sided, [[0.0, 0.0], [1.0, 0.0]], [1, 2, 4, 6, 8])
        # Euler contracts by (1 - dt) per step, which tends to the eigenvalue -1
        dt = two_sided.dt
        assert rep.decay_slope == pytest.approx(math.log(1 - dt) / dt, rel=1e-9)
        assert rep.decay_slope == pytest.approx(-1.0, abs=0.02)
        assert rep.recompute_slope() == rep.decay_slope

    def test_constant_forcing_single_point(self, two_sided):
        co = CoefficientSet(2, -np.eye(2), 0.02 * np.eye(2), lambda t, x: np.array([1.0, -0.5]))
        pts = cube_points([0.0, 0.0], 2.0)
        rep = pullback_experiment(co, two_sided, pts, [5, 10, 20, 32])
        assert rep.pullback_distances[-1, 1] < 1e-6
        # the fiber point sits near the deterministic equilibrium
        assert np.allclose(rep.extras["fiber_point"], [1.0, -0.5], atol=0.2)

    def test_distances_trend_down(self, two_sided):
        co = CoefficientSet(2, np.array([[-1.0, 0.3], [-0.3, -1.2]]), 0.05 * np.eye(2), lambda t, x: 0.2 * np.tanh(x))
        times = np.arange(1, 21)
        rep = pullback_experiment(co, two_sided, cube_points([1.0, 1.0], 1.0), times)
        tau, pval = kendalltau(rep.pullback_distances[:, 0], rep.pullback_distances[:, 1])
        assert tau < 0 and pval < 0.01

    def test_absorbing_time_and_floor(self):
        dist = np.array([[1, 5.0], [2, 0.5], [3, 0.05], [4, 0.005], [5, 1e-20]])
        assert fit_decay_slope(dist, 2.0, 1e-15) == pytest.approx(-math.log(10), rel=1e-12)
        assert math.isnan(fit_decay_slope(dist[:1]))

    def test_errors(self, two_sided):
        co = CoefficientSet(1, np.array([[-1.0]]), np.zeros((1, 1)))
        with pytest.raises(DomainError):
            pullback_experiment(co, two_sided, [[1.0]], [1, 2])
        with pytest.raises(RangeError):
            pullback_experiment(co, two_sided, [[1.0], [2.0]], [100])

    def test_cube(self):
        pts = cube_points([1.0, 2.0, 3.0], 0.5)
        assert pts.shape == (8, 3)
        assert np.allclose(pts.mean(axis=0), [1.0, 2.0, 3.0])
