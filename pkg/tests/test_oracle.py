from fractions import Fraction

import numpy as np
import pytest

from conftest import constant, dictator, majority, parity, random_junta, random_table
from juntatest.estimators import LocalEstimatorConfig, local_mean_estimate_all
from juntatest.flatpoly import build_minimax
from juntatest.fourier import noise_exact, wht
from juntatest.hypercube import BudgetError, TableSource, k_subsets
from juntatest.oracle import (
    exact_dist_to_juntas,
    exact_dist_to_set,
    exact_estimator_stats,
    exact_holdout_noise,
    exact_stats,
    literal_dist_to_set,
)


class TestDistances:
    def test_junta_on_set(self, rng):
        t = random_junta(8, [1, 4, 6], rng)
        assert exact_dist_to_set(t, [1, 4, 6]) == 0

    def test_majority_one_coordinate(self):
        assert exact_dist_to_set(majority(3, [0, 1, 2]), [0]) == Fraction(1, 4)
        assert literal_dist_to_set(majority(3, [0, 1, 2]), [0]) == Fraction(1, 4)

    def test_parity_two_coordinates(self):
        assert exact_dist_to_set(parity(3, [0, 1, 2]), [0, 1]) == Fraction(1, 2)

    def test_dictator_k1(self):
        d, S = exact_dist_to_juntas(dictator(6, 4), 1)
        assert d == 0 and S == 1 << 4

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_parity_far(self, k):
        d, S = exact_dist_to_juntas(parity(k + 3, range(k + 1)), k)
        assert d == Fraction(1, 2)
        assert S == (1 << k) - 1  # ties go to the smallest mask

    def test_matches_literal(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(3, 9))
            t = random_table(n, rng)
            size = int(rng.integers(0, 4))
            S = sorted(rng.permutation(n)[:size].tolist())
            assert exact_dist_to_set(t, S) == literal_dist_to_set(t, S)

    def test_minimum_consistency(self, rng):
        t = random_table(8, rng)
        d, S, table = exact_dist_to_juntas(t, 3, per_set=True)
        assert len(table) == 56
        assert all(d <= v <= Fraction(1, 2) for v in table.values())
        assert table[S] == d
        assert d == exact_dist_to_set(t, S)

    def test_sampled_juntas_upper_bound(self, rng):
        t = random_table(10, rng)
        d, S = exact_dist_to_juntas(t, 3)
        vals = t.values()
        for T in list(k_subsets(10, 3))[:20]:
            for _ in range(5):
                g = random_junta(10, [i for i in range(10) if T >> i & 1], rng).values()
                assert Fraction(int(np.count_nonzero(g != vals)), 1024) >= d

    def test_budget(self, rng):
        with pytest.raises(BudgetError):
            exact_dist_to_juntas(random_table(10, rng), 5, budget=100)

    def test_stats(self):
        s = exact_stats(majority(5, [0, 1, 2]), 3)
        assert s.dist_k == 0 and s.best_set == 0b111
        assert s.mean == 0
        assert s.to_dict()["best_set"] == [0, 1, 2]


class TestHoldout:
    def test_rho_one(self, rng):
        t = random_table(6, rng)
        for x in (0, 13, 63):
            assert exact_holdout_noise(t, [1, 2], Fraction(1), x) == t(x)

    def test_rho_zero_empty(self, rng):
        t = random_table(6, rng)
        assert exact_holdout_noise(t, [], Fraction(0), 5) == Fraction(int(t.values().sum()), 64)

    def test_dictator_outside(self):
        t = dictator(5, 3)
        for x in range(32):
            sign = 1 if x >> 3 & 1 else -1
            assert exact_holdout_noise(t, [0, 1], Fraction(3, 10), x) == Fraction(3, 10) * sign

    def test_dictator_inside(self):
        t = dictator(5, 1)
        assert exact_holdout_noise(t, [1, 2], Fraction(1, 5), 0b00010) == 1

    def test_empty_set_matches_spectrum(self, rng):
        t = random_table(8, rng)
        spec = noise_exact(wht(t), 0.35)
        pointwise = np.array([(-1) ** np.array([bin(S & ~x).count("1") for S in range(256)]) @ spec.coeffs
                              for x in range(256)])
        for x in range(0, 256, 7):
            assert exact_holdout_noise(t, [], 0.35, x) == pytest.approx(pointwise[x], abs=1e-10)

    def test_rate_range(self, rng):
        with pytest.raises(ValueError):
            exact_holdout_noise(random_table(3, rng), [], 1.5, 0)


class TestEstimatorStats:
    def test_constant(self):
        mean, var = exact_estimator_stats(constant(6), build_minimax(2, 6), 2)
        assert mean == 1 and var == 0

    def test_parity_flat_at_two(self):
        # the exact interpolant on {1, 2} has p(2) = 1, killing the only nonzero level
        flat = build_minimax(2, 2)
        assert flat.values[2] == 1
        _, var = exact_estimator_stats(parity(5, [0, 1]), flat, 2)
        assert var == 0

    def test_matches_enumeration(self, rng):
        t = random_table(10, rng)
        cfg = LocalEstimatorConfig(3, build_minimax(3, 10))
        g = local_mean_estimate_all(TableSource(t), cfg)
        mean, var = exact_estimator_stats(t, cfg.flat, 3)
        assert g.mean() == pytest.approx(mean, abs=1e-9)
        assert g.var() == pytest.approx(var, abs=1e-9)
