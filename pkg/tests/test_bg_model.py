"""Generative model, prior construction and the joint log-probability."""

import math

import numpy as np
import pytest
from scipy import stats

from bgpursuit.bg_model import (
    P_CLAMP,
    GroundTruth,
    ModelParams,
    generate_trial,
    load_priors,
    log_joint,
    perturb_priors,
    posterior_prior_draw,
    save_priors,
    trial_rng,
)
from bgpursuit.core_linalg import Dictionary


class TestModelParams:
    def test_derived_quantities(self):
        prm = ModelParams.uniform(3, 0.2, 0.5, 2.0)
        assert prm.eps == pytest.approx(0.25)
        assert prm.shrink == pytest.approx(2.0 / 2.5)
        np.testing.assert_allclose(prm.penalty, 2 * 0.5 * math.log(4.0))

    def test_flat_prior_is_exact(self):
        prm = ModelParams.uniform(2, 0.1, 1e-3, math.inf)
        assert prm.flat_prior and prm.eps == 0.0 and prm.shrink == 1.0

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, float("nan")])
    def test_rejects_bad_probability(self, p):
        with pytest.raises(ValueError):
            ModelParams.uniform(2, p, 1.0, 1.0)

    @pytest.mark.parametrize("s2w, s2x", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
    def test_rejects_bad_variances(self, s2w, s2x):
        with pytest.raises(ValueError):
            ModelParams.uniform(2, 0.5, s2w, s2x)

    def test_p_half_has_zero_penalty(self):
        np.testing.assert_allclose(ModelParams.uniform(4, 0.5, 1.0, 1.0).penalty, 0.0, atol=1e-15)


class TestTrialRng:
    def test_same_key_same_stream(self):
        a = trial_rng(5, 1, 2).standard_normal(10)
        b = trial_rng(5, 1, 2).standard_normal(10)
        np.testing.assert_array_equal(a, b)

    def test_distinct_keys_differ(self):
        draws = {tuple(trial_rng(5, *k).integers(0, 2**62, 2)) for k in [(0, 0), (0, 1), (1, 0), (6, 0)]}
        assert len(draws) == 4
        assert not np.array_equal(trial_rng(5, 0).random(3), trial_rng(6, 0).random(3))


class TestGenerateTrial:
    def test_support_size_and_synthesis(self):
        rng = np.random.default_rng(0)
        d = Dictionary.gaussian(20, 40, rng)
        t = generate_trial(d, 5, rng, sigma2_x=1.0, sigma2_w=0.0)
        assert t.K == 5
        assert np.all(t.x[~t.s] == 0)
        np.testing.assert_allclose(t.y, d.data @ t.x, atol=1e-13)

    def test_support_positions_are_uniform(self):
        rng = np.random.default_rng(1)
        d = Dictionary.gaussian(4, 10, rng)
        counts = np.zeros(10)
        for _ in range(4000):
            counts += generate_trial(d, 3, rng, sigma2_x=1.0, sigma2_w=0.0).s
        # each atom active with probability 3/10
        chi2 = np.sum((counts - 1200) ** 2 / 1200)
        assert stats.chi2.sf(chi2, 9) > 1e-3

    def test_noise_variance(self):
        rng = np.random.default_rng(2)
        d = Dictionary.gaussian(500, 5, rng)
        t = generate_trial(d, 0, rng, sigma2_x=1.0, sigma2_w=0.04)
        assert np.var(t.y) == pytest.approx(0.04, rel=0.2)

    def test_rejects_k_above_m(self):
        d = Dictionary.gaussian(3, 4, np.random.default_rng(0))
        with pytest.raises(ValueError):
            generate_trial(d, 5, np.random.default_rng(0), sigma2_x=1.0, sigma2_w=0.0)

    def test_save_load(self, tmp_path):
        rng = np.random.default_rng(3)
        d = Dictionary.gaussian(6, 9, rng)
        t = generate_trial(d, 2, rng, sigma2_x=1.0, sigma2_w=0.1)
        t.save(tmp_path / "t")
        back = GroundTruth.load(tmp_path / "t")
        np.testing.assert_array_equal(back.s, t.s)
        np.testing.assert_array_equal(back.x, t.x)
        np.testing.assert_array_equal(back.y, t.y)


class TestPriors:
    def test_posterior_draw_means(self):
        s = np.array([True] * 2000 + [False] * 2000)
        p = posterior_prior_draw(s, 0.4, 0.4, np.random.default_rng(0))
        # Beta(1.4, 0.4) and Beta(0.4, 1.4)
        assert p[s].mean() == pytest.approx(1.4 / 1.8, abs=0.02)
        assert p[~s].mean() == pytest.approx(0.4 / 1.8, abs=0.02)

    def test_probabilities_are_clamped(self):
        p = posterior_prior_draw(np.zeros(5000, bool), 0.05, 5.0, np.random.default_rng(1))
        assert p.min() >= P_CLAMP and p.max() <= 1 - P_CLAMP

    def test_perturbation_stays_in_window(self):
        p = np.random.default_rng(2).random(1000)
        q = perturb_priors(p, 0.3, np.random.default_rng(3))
        assert np.all(q >= np.maximum(P_CLAMP, p - 0.3) - 1e-15)
        assert np.all(q <= np.minimum(1 - P_CLAMP, p + 0.3) + 1e-15)

    def test_zero_perturbation_is_identity(self):
        p = np.array([0.1, 0.5, 0.9])
        np.testing.assert_allclose(perturb_priors(p, 0.0, np.random.default_rng(0)), p)

    def test_save_load(self, tmp_path):
        p = np.array([0.1, 0.25, 0.7])
        save_priors(tmp_path / "p.csv", p)
        np.testing.assert_array_equal(load_priors(tmp_path / "p.csv"), p)


class TestLogJoint:
    def _setup(self, sigma2_x=2.0):
        rng = np.random.default_rng(11)
        d = Dictionary.gaussian(7, 9, rng)
        p = rng.uniform(0.05, 0.9, 9)
        s = rng.random(9) < 0.5
        x = rng.standard_normal(9)
        y = rng.standard_normal(7)
        return d, ModelParams(0.3, sigma2_x, p), x, s, y

    def test_matches_density_sum(self):
        """Independent oracle: Gaussian and Bernoulli log densities from scipy."""
        d, prm, x, s, y = self._setup()
        expected = (
            stats.multivariate_normal(d.data @ (s * x), 0.3 * np.eye(7)).logpdf(y)
            + stats.norm(0, math.sqrt(2.0)).logpdf(x).sum()
            + stats.bernoulli(prm.p).logpmf(s.astype(int)).sum()
        )
        assert log_joint(d, prm, x, s, y) == pytest.approx(expected, rel=1e-12)

    def test_flat_prior_drops_coefficient_term(self):
        d, prm, x, s, y = self._setup(math.inf)
        expected = (
            stats.multivariate_normal(d.data @ (s * x), 0.3 * np.eye(7)).logpdf(y)
            + stats.bernoulli(prm.p).logpmf(s.astype(int)).sum()
        )
        assert log_joint(d, prm, x, s, y) == pytest.approx(expected, rel=1e-12)

    def test_support_difference_matches_penalty(self):
        """Adding an atom with x_i = 0 changes 2 sigma2_w log p by -lambda_i."""
        d, prm, x, s, y = self._setup()
        i = int(np.flatnonzero(~s)[0])
        x = x.copy()
        x[i] = 0.0
        s2 = s.copy()
        s2[i] = True
        delta = 2 * prm.sigma2_w * (log_joint(d, prm, x, s2, y) - log_joint(d, prm, x, s, y))
        assert delta == pytest.approx(-prm.penalty[i], rel=1e-10)
