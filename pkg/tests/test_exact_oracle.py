"""Exhaustive l0 and BG-MAP solvers and the solution-set comparison between them."""

import math

import numpy as np
import pytest

from bgpursuit.bg_model import ModelParams, generate_trial
from bgpursuit.core_linalg import Dictionary
from bgpursuit.exact_oracle import (
    all_supports,
    l0_cost,
    l0_count,
    map_cost,
    same_sets,
    solve_bg_map,
    solve_l0,
    theorem1_lambda,
    verify_theorem1,
)
from bgpursuit.local_metrics import threshold


def small(seed, N=4, M=6):
    rng = np.random.default_rng(seed)
    return Dictionary.gaussian(N, M, rng), rng


class TestEnumeration:
    def test_order_and_count(self):
        sups = [tuple(np.flatnonzero(s)) for s in all_supports(3)]
        assert sups == [(), (0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
        assert sum(1 for _ in all_supports(10)) == 1024

    def test_refuses_large_m(self):
        with pytest.raises(ValueError):
            next(all_supports(21))

    def test_l0_count_relative_zero(self):
        assert l0_count([1.0, 1e-12, 0.0, -2.0]) == 2
        assert l0_count(np.zeros(4)) == 0


class TestL0:
    def test_lambda_zero_contains_pinv(self):
        d, rng = small(0)
        y = rng.standard_normal(4)
        sol = solve_l0(d, y, 0.0)
        assert sol.objective_value == pytest.approx(0.0, abs=1e-20)
        assert any(np.allclose(x, np.linalg.pinv(d.data) @ y, atol=1e-9) for x in sol.coefs)

    def test_huge_lambda_gives_zero(self):
        d, rng = small(1)
        sol = solve_l0(d, rng.standard_normal(4), 1e6)
        assert len(sol) == 1
        np.testing.assert_array_equal(sol.coefs[0], 0.0)

    def test_noise_free_two_sparse_recovered(self):
        d, rng = small(2)
        t = generate_trial(d, 2, rng, sigma2_x=1.0, sigma2_w=0.0)
        sol = solve_l0(d, t.y, 1e-4)
        assert len(sol) == 1
        np.testing.assert_allclose(sol.coefs[0], t.x, atol=1e-10)

    def test_scaling_invariance(self):
        d, rng = small(3)
        y = rng.standard_normal(4)
        a = solve_l0(d, y, 0.3)
        b = solve_l0(d, 7.0 * y, 0.3 * 49.0)
        key = lambda sol: sorted(tuple(np.flatnonzero(np.abs(x) > 0)) for x in sol.coefs)
        assert key(a) == key(b)

    def test_members_reach_minimum(self):
        d, rng = small(4)
        y = rng.standard_normal(4)
        sol = solve_l0(d, y, 0.5)
        for s in sol.supports:
            assert l0_cost(d, y, s, 0.5)[0] <= sol.objective_value + 1e-9


class TestMap:
    def test_tiny_prior_gives_empty_support(self):
        d, rng = small(5)
        prm = ModelParams.uniform(6, 1e-9, 1e-3, 1.0)
        sol = solve_bg_map(d, rng.standard_normal(4) * 0.1, prm)
        assert len(sol) == 1 and not sol.supports[0].any()

    def test_single_atom_decision_matches_threshold(self):
        d = Dictionary(np.array([[1.0]]))
        prm = ModelParams(0.1, 2.0, np.array([0.2]))
        level = math.sqrt(threshold(prm, 0))
        for y0, active in ((0.99 * level, False), (1.01 * level, True)):
            sol = solve_bg_map(d, np.array([y0]), prm)
            assert bool(sol.supports[0][0]) is active

    def test_g_dominates_f(self):
        """g(s) - f(s) = lam (|s| - ||x*(s)||_0) >= 0 at very large sigma2_x."""
        d, rng = small(6, N=3, M=6)
        y = rng.standard_normal(3)
        p, s2w = 0.3, 0.01
        lam = theorem1_lambda(p, s2w)
        prm = ModelParams.uniform(6, p, s2w, 1e12)
        for s in all_supports(6):
            f, xs = l0_cost(d, y, s, lam)
            g, _ = map_cost(d, y, s, prm)
            assert g - f >= -1e-4
            assert g - f == pytest.approx(lam * (s.sum() - l0_count(xs)), abs=1e-4)

    def test_canonical_support(self):
        d, rng = small(7, N=3, M=6)
        y = rng.standard_normal(3)
        lam = theorem1_lambda(0.3, 0.01)
        prm = ModelParams.uniform(6, 0.3, 0.01, 1e12)
        for s in all_supports(6):
            f, xs = l0_cost(d, y, s, lam)
            canon = np.abs(xs) > 1e-9 * np.linalg.norm(xs)
            assert l0_cost(d, y, canon, lam)[0] == pytest.approx(f, abs=1e-6)
            assert map_cost(d, y, canon, prm)[0] == pytest.approx(f, abs=1e-4)


class TestTheorem1:
    def test_zero_observation(self):
        d, _ = small(8, N=5, M=8)
        rep = verify_theorem1(d, np.zeros(5), 0.25, 1e-3)
        assert rep.match and len(rep.l0_set) == 1
        np.testing.assert_array_equal(rep.map_set.coefs[0], 0.0)

    @pytest.mark.parametrize("K", [1, 3, 4])
    def test_noise_free_below_dimension(self, K):
        d, rng = small(9 + K, N=5, M=8)
        t = generate_trial(d, K, rng, sigma2_x=1.0, sigma2_w=0.0)
        rep = verify_theorem1(d, t.y, 0.25, 1e-3)
        assert rep.match
        assert rep.lambda_used == pytest.approx(2e-3 * math.log(3.0))

    def test_rejects_small_sigma2_x(self):
        d, _ = small(10)
        with pytest.raises(ValueError):
            verify_theorem1(d, np.ones(4), 0.25, 1e-3, 1e4)

    def test_same_sets(self):
        a = [np.array([1.0, 0.0]), np.array([0.0, 2.0])]
        assert same_sets(a, a[::-1], 1e-9)
        assert not same_sets(a, a[:1], 1e-9)
