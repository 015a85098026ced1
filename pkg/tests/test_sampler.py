import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from geonest.distributions import Model, Sinusoidal, Uniform
from geonest.geometry import Circular, Linear, ParameterSpace, sph_to_cart
from geonest.models import circle_model, sphere_model, torus_model
from geonest.nested import LivePointSet
from geonest.sampler import (
    ProposalConfig,
    SamplerStall,
    _FastLogPrior,
    _proposer,
    _walk,
    adapt_sigma_scale,
    arc_spread,
    constrained_accept_log_ratio,
    evolve_chain,
    metropolis_walk,
    propose,
    trial_sigma_per_dim,
)

TWO_PI = 2 * math.pi


def angle_between(a, b):
    return np.arccos(np.clip(np.sum(a * b, axis=-1), -1.0, 1.0))


class TestTrialSigma:
    def test_linear_spread(self):
        space = ParameterSpace((Linear(-5, 5),))
        live = LivePointSet(np.array([[0.0], [1.0], [2.0]]), np.zeros(3))
        assert trial_sigma_per_dim(live, space, ProposalConfig())[0] == pytest.approx(0.2)

    def test_collapsed_spread(self):
        space = ParameterSpace((Linear(0, 4),))
        live = LivePointSet(np.full((3, 1), 1.5), np.zeros(3))
        assert trial_sigma_per_dim(live, space, ProposalConfig())[0] == pytest.approx(4e-3)

    def test_sphere_fixed(self):
        space = ParameterSpace.spheres(1)
        live = LivePointSet(np.array([[0.1, 0.2], [3.0, 2.0]]), np.zeros(2))
        np.testing.assert_allclose(trial_sigma_per_dim(live, space, ProposalConfig()), [0.2, 0.2])
        vanilla = trial_sigma_per_dim(live, space, ProposalConfig(mode="vanilla"))
        np.testing.assert_allclose(vanilla, [0.29, 0.18])

    def test_circular_arc(self):
        space = ParameterSpace.circles(1)
        live = LivePointSet(np.array([[0.1], [TWO_PI - 0.1]]), np.zeros(2))
        assert trial_sigma_per_dim(live, space, ProposalConfig())[0] == pytest.approx(0.02)
        plain = trial_sigma_per_dim(live, space, ProposalConfig(circular_spread="linear"))
        assert plain[0] == pytest.approx(0.1 * (TWO_PI - 0.2))

    def test_arc_spread_columns(self):
        v = np.array([[0.0, 1.0], [0.5, 2.0], [5.9, 3.0]])
        got = arc_spread(v, np.zeros(2), np.full(2, TWO_PI))
        np.testing.assert_allclose(got, [0.5 + TWO_PI - 5.9, 2.0])


class TestProposal:
    def test_wrapped_example(self):
        space = ParameterSpace((Circular(0, 1),))
        prop = _proposer(space, "geometric")
        out = prop(np.array([0.05]), np.array([0.15]), np.array([-1.0]))
        assert out[0] == pytest.approx(0.90, abs=1e-12)

    def test_zero_step_limit(self):
        space = ParameterSpace.spheres(1)
        rng = np.random.default_rng(0)
        x = np.array([1.2, 0.7])
        out = propose(x, np.array([1e-12, 1e-12]), space, rng)
        np.testing.assert_allclose(out, x, atol=1e-10)

    def test_circle_symmetry(self):
        # P(a -> near b) equals P(b -> near a) across the seam
        space = ParameterSpace.circles(1)
        rng = np.random.default_rng(11)
        n, sigma, half = 1_000_000, np.array([0.5]), 0.05
        a, b = 0.1, TWO_PI - 0.2

        def hit(src, dst):
            out = propose(np.full((n, 1), src), sigma, space, rng)[:, 0]
            d = np.abs((out - dst + math.pi) % TWO_PI - math.pi)
            return np.mean(d < half)

        p_ab, p_ba = hit(a, b), hit(b, a)
        se = math.sqrt((p_ab * (1 - p_ab) + p_ba * (1 - p_ba)) / n)
        assert p_ab > 0.01
        assert abs(p_ab - p_ba) < 3 * se

    @pytest.mark.parametrize("a, b", [((0.3, 0.2), (2.0, 0.1)), ((1.0, 1.4), (1.3, 1.7))])
    def test_sphere_symmetry(self, a, b):
        # caps of equal area around each endpoint
        space = ParameterSpace.spheres(1)
        rng = np.random.default_rng(12)
        n, r = 1_000_000, 0.1
        sigma = np.array([0.2, 0.2])

        def hit(src, dst):
            out = propose(np.tile(src, (n, 1)), sigma, space, rng)
            return np.mean(angle_between(sph_to_cart(out[:, 0], out[:, 1]), sph_to_cart(*dst)) < r)

        p_ab, p_ba = hit(np.array(a), b), hit(np.array(b), a)
        se = math.sqrt((p_ab * (1 - p_ab) + p_ba * (1 - p_ba)) / n)
        assert p_ab > 0.01
        assert abs(p_ab - p_ba) < 3 * se

    def test_step_size_independent_of_location(self):
        space = ParameterSpace.spheres(1)
        rng = np.random.default_rng(13)
        sigma = np.array([0.2, 0.2])
        means = []
        for start in ((0.4, 0.1), (0.4, math.pi / 2)):
            out = propose(np.tile(start, (100_000, 1)), sigma, space, rng)
            means.append(angle_between(sph_to_cart(out[:, 0], out[:, 1]), sph_to_cart(*start)).mean())
        assert means[0] == pytest.approx(means[1], rel=0.05)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0, TWO_PI, exclude_max=True), st.floats(0, math.pi),
        st.floats(0, TWO_PI, exclude_max=True), st.floats(1e-6, 10.0), st.integers(0, 2**32 - 1),
    )
    def test_stays_in_support(self, phi, theta, c, sigma, seed):
        space = ParameterSpace.spheres(1)
        rng = np.random.default_rng(seed)
        out = propose(np.array([phi, theta]), np.array([sigma, sigma]), space, rng)
        assert 0 <= out[0] < TWO_PI and 0 <= out[1] <= math.pi
        circ = ParameterSpace.circles(1)
        w = propose(np.array([c]), np.array([sigma]), circ, rng)
        assert 0 <= w[0] < TWO_PI


class TestAcceptance:
    def test_below_threshold(self):
        prior = (Uniform(0, 1),)
        assert constrained_accept_log_ratio([0.5], [0.4], -1.0, -1.0, prior) == -math.inf

    def test_flat_prior(self):
        prior = (Uniform(0, 1),)
        assert constrained_accept_log_ratio([0.5], [0.4], 0.0, -1.0, prior) == 0.0

    def test_prior_ratio(self):
        prior = (Sinusoidal(0, math.pi),)
        got = constrained_accept_log_ratio([math.pi / 6], [math.pi / 2], 0.0, -1.0, prior)
        assert got == pytest.approx(math.log(0.5))

    def test_outside_support(self):
        prior = (Uniform(0, 1),)
        assert constrained_accept_log_ratio([1.5], [0.4], 0.0, -1.0, prior) == -math.inf

    def test_unconstrained_accepts_everything(self):
        m = circle_model()
        rng = np.random.default_rng(0)
        _, _, n_acc, _ = metropolis_walk([1.0], m, [0.3], 500, rng)
        assert n_acc == 500

    def test_adaptation(self):
        assert adapt_sigma_scale(1.0, 4, 2) == pytest.approx(math.exp(0.25))
        assert adapt_sigma_scale(1.0, 2, 4) == pytest.approx(math.exp(-0.25))


class TestPriorTargeting:
    """With no likelihood constraint the chain must sample the prior."""

    def test_circle(self):
        rng = np.random.default_rng(21)
        _, _, _, trace = metropolis_walk([0.5], circle_model(), [2.0], 500_000, rng, thin=5)
        assert stats.kstest(trace[:, 0], stats.uniform(0, TWO_PI).cdf).pvalue > 0.01

    @pytest.mark.parametrize("mode", ["geometric", "vanilla"])
    def test_sphere(self, mode):
        rng = np.random.default_rng(22)
        cfg = ProposalConfig(mode=mode)
        sigmas = [1.0, 1.0] if mode == "geometric" else [3.0, 1.0]
        _, _, _, trace = metropolis_walk([1.0, 1.0], sphere_model(1), sigmas, 400_000, rng, cfg, thin=4)
        assert stats.kstest(trace[:, 0], stats.uniform(0, TWO_PI).cdf).pvalue > 0.01
        assert stats.kstest(trace[:, 1], lambda t: (1 - np.cos(t)) / 2).pvalue > 0.01

    def test_literal_prior_double_counts(self):
        # the coordinate prior would apply sin(theta) twice under the Cartesian move
        m = sphere_model(1)
        rng = np.random.default_rng(23)
        _, _, _, trace = _walk(
            _proposer(m.space, "geometric"), _FastLogPrior(m.prior), m.log_likelihood,
            np.array([1.0, 1.0]), 0.0, np.array([1.0, 1.0]), -math.inf, 200_000, rng, 100, 10,
        )
        theta = np.array(trace)[:, 1]
        assert stats.kstest(theta, lambda t: (1 - np.cos(t)) / 2).pvalue < 1e-6


class TestEvolveChain:
    def test_result_above_threshold(self):
        m = torus_model(3)
        rng = np.random.default_rng(4)
        pts = rng.uniform(0, TWO_PI, (40, 3))
        ll = m.log_likelihood_many(pts)
        thr = np.median(ll)
        live = LivePointSet(pts[ll > thr], ll[ll > thr])
        out = evolve_chain(live, thr, m, ProposalConfig(), rng)
        assert out.new_loglike > thr
        assert out.new_loglike == pytest.approx(m.log_likelihood(out.new_point))
        assert out.n_accepted + out.n_rejected == 60
        assert np.all((out.new_point >= 0) & (out.new_point < TWO_PI))

    def test_does_not_mutate_live(self):
        m = circle_model()
        rng = np.random.default_rng(5)
        pts = rng.uniform(0, TWO_PI, (10, 1))
        live = LivePointSet(pts.copy(), m.log_likelihood_many(pts))
        evolve_chain(live, -math.inf, m, ProposalConfig(), rng)
        np.testing.assert_array_equal(live.points, pts)

    def test_stall(self):
        m = circle_model()
        rng = np.random.default_rng(6)
        pts = rng.uniform(0, TWO_PI, (5, 1))
        live = LivePointSet(pts, m.log_likelihood_many(pts))
        with pytest.raises(SamplerStall) as info:
            evolve_chain(live, 100.0, m, ProposalConfig(max_restarts=2), rng)
        assert info.value.n_restarts == 2

    def test_vanilla_adapts_scale(self):
        m = circle_model()
        rng = np.random.default_rng(7)
        pts = rng.uniform(0, TWO_PI, (10, 1))
        live = LivePointSet(pts, m.log_likelihood_many(pts))
        out = evolve_chain(live, -math.inf, m, ProposalConfig(mode="vanilla"), rng)
        # unconstrained: 20 trials, few leave the box, so the scale grows
        assert out.sigma_scale > 1.0

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            ProposalConfig(mode="fast")
        with pytest.raises(ValueError):
            ProposalConfig(nt_multiplier=0)
