from fractions import Fraction

import mpmath
import numpy as np
import pytest

from conftest import constant, majority, parity, random_table
from juntatest.estimators import (
    ConfigurationError,
    EstarConfig,
    LocalEstimatorConfig,
    abs_mean_from_estimates,
    estar,
    estar_coefficients,
    estar_exact_all,
    local_mean_estimate,
    local_mean_estimate_all,
    local_mean_estimate_batch,
    smoothed_g_exact_all,
)
from juntatest.flatpoly import build_chebyshev, build_minimax
from juntatest.fourier import noise_exact, wht
from juntatest.hypercube import GuardedSource, PackedTruthTable, Point, TableSource, ball_masks, ball_size
from juntatest.oracle import exact_estimator_stats
from juntatest.rng import stream


def and_of_first(n, k):
    return PackedTruthTable.from_function(n, lambda m: np.where((m & ((1 << k) - 1)) == (1 << k) - 1, -1, 1))


def cfg_for(n, r, method="minimax"):
    flat = build_minimax(r, n) if method == "minimax" else build_chebyshev(r, n)
    return LocalEstimatorConfig(r, flat)


class TestConfig:
    def test_degree_mismatch(self):
        with pytest.raises(ConfigurationError):
            LocalEstimatorConfig(3, build_minimax(2, 5))

    def test_radius_too_large(self):
        f = TableSource(constant(3))
        with pytest.raises(ConfigurationError):
            local_mean_estimate(f, 0, cfg_for(5, 4))

    def test_estar_rate_range(self):
        with pytest.raises(ConfigurationError):
            EstarConfig(2, 1.0, 1e-3, build_minimax(2, 5))
        with pytest.raises(ConfigurationError):
            EstarConfig(2, 0.5, 0.0, build_minimax(2, 5))


class TestBallEstimator:
    def test_constant(self):
        f = TableSource(constant(6))
        for x in range(64):
            assert local_mean_estimate(f, x, cfg_for(6, 3)) == 1.0

    def test_majority_unbiased(self):
        t = majority(9, [0, 1, 2])
        g = local_mean_estimate_all(TableSource(t), cfg_for(9, 3))
        assert abs(g.mean()) <= 1e-12

    def test_query_count(self, rng):
        f = TableSource(random_table(9, rng))
        local_mean_estimate(f, 77, cfg_for(9, 3))
        assert f.queries == ball_size(9, 3)

    def test_query_confinement(self, rng):
        t = random_table(8, rng)
        for x in (0, 0b10110011, 255):
            allowed = x ^ ball_masks(8, 2)
            f = GuardedSource(TableSource(t), allowed)
            local_mean_estimate(f, Point(8, x), cfg_for(8, 2))

    def test_batch_matches_single(self, rng):
        t = random_table(7, rng)
        cfg = cfg_for(7, 3)
        centers = np.array([0, 5, 99, 127])
        batch = local_mean_estimate_batch(TableSource(t), centers, cfg)
        single = [local_mean_estimate(TableSource(t), int(c), cfg) for c in centers]
        assert np.allclose(batch, single, atol=1e-14)

    def test_clamp(self):
        t = parity(6, range(6))
        cfg = LocalEstimatorConfig(2, build_minimax(2, 2), bound=0.5)
        g = local_mean_estimate_all(TableSource(t), cfg)
        assert np.max(np.abs(g)) <= 0.5

    def test_parity_above_radius(self):
        # levels above N are multiplied by 1 - p(l), which can be large but is exact
        t = parity(6, [0, 1, 2, 3])
        cfg = cfg_for(6, 2)
        g = local_mean_estimate_all(TableSource(t), cfg)
        chis = wht(t).coeffs[0b1111]
        factor = float(cfg.flat.one_minus_p(4)[4])
        assert np.allclose(g, factor * chis * np.array([(-1) ** bin(0b1111 & ~x).count("1") for x in range(64)]))

    @pytest.mark.parametrize("n, r", [(8, 2), (10, 3), (12, 4)])
    def test_unbiased_and_variance(self, rng, n, r):
        for method in ("minimax", "chebyshev"):
            t = random_table(n, rng)
            cfg = cfg_for(n, r, method)
            g = local_mean_estimate_all(TableSource(t), cfg)
            mean, var = exact_estimator_stats(t, cfg.flat, r)
            assert g.mean() == pytest.approx(mean, abs=1e-9)
            assert g.var() == pytest.approx(var, abs=1e-9)

    def test_pointwise_identity(self, rng):
        t = random_table(8, rng)
        cfg = cfg_for(8, 3)
        g = local_mean_estimate_all(TableSource(t), cfg)
        assert np.max(np.abs(g - smoothed_g_exact_all(wht(t), cfg.flat, 1.0))) <= 1e-12


class TestAbsMean:
    def test_constant_samples(self):
        assert abs_mean_from_estimates([-0.3] * 5) == 0.3

    def test_plus_minus(self):
        assert abs_mean_from_estimates([1, -1]) == 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            abs_mean_from_estimates([])

    def test_jensen_gap(self):
        rng = stream(0, "jensen")
        for mu in (0.0, 0.1, 0.5):
            x = rng.normal(mu, 0.2, 100_000)
            assert abs(abs_mean_from_estimates(x) - abs(mu)) <= 0.2


class TestEstar:
    def test_constant_exact(self):
        cfg = EstarConfig(3, 0.6, "1e-3", build_minimax(3, 6))
        assert estar(None, 0, cfg, noise_eval=lambda s: -1) == -1.0

    def test_missing_rate(self):
        cfg = EstarConfig(2, 0.6, "1e-3", build_minimax(2, 6))
        with pytest.raises(ConfigurationError):
            estar(None, 0, cfg, noise_eval={0.6: 1.0})

    def test_mapping_matches_callable(self, rng):
        t = random_table(6, rng)
        cfg = EstarConfig(2, 0.7, "1e-3", build_minimax(2, 6))
        spec = wht(t)
        co = estar_coefficients(cfg)
        table = {float(s): float(noise_exact(spec, float(s)).coeffs @ np.array(
            [(-1) ** bin(S & ~9).count("1") for S in range(64)])) for s in co.rates}
        a = estar(TableSource(t), 9, cfg)
        b = estar(None, 9, cfg, noise_eval=table)
        assert a == pytest.approx(b, abs=1e-6)

    def test_spectral_path_matches_levels(self, rng):
        t = random_table(8, rng)
        cfg = EstarConfig(3, 0.5, "1e-3", build_minimax(3, 8))
        allx = estar_exact_all(wht(t), cfg)
        f = TableSource(t)
        for x in (0, 17, 200):
            assert estar(f, x, cfg) == pytest.approx(allx[x], abs=1e-9)
        assert f.queries == 0

    def test_output_bound(self, rng):
        t = random_table(6, rng)
        cfg = EstarConfig(2, 0.6, "1e-2", build_minimax(2, 6))
        co = estar_coefficients(cfg)
        bound = float(sum(abs(c) for c in co.coeffs[1:])) + 1
        vals = estar_exact_all(wht(t), cfg)
        assert np.max(np.abs(vals)) <= bound

    def test_close_to_smoothed(self):
        rng = np.random.default_rng(3)
        flat = build_minimax(3, 10)
        for t in (random_table(10, rng), and_of_first(10, 3), majority(10, [0, 1, 2, 3, 4])):
            spec = wht(t)
            e = estar_exact_all(spec, EstarConfig(3, 0.8, "1e-4", flat))
            g = smoothed_g_exact_all(spec, flat, 0.8)
            assert np.mean((e - g) ** 2) <= 1e-3

    def test_abs_mean_on_low_degree_suite(self):
        # functions with W^{=l} <= e^{-l/2}
        flat = build_minimax(4, 10)
        for t in (constant(10), and_of_first(10, 3), and_of_first(10, 4), and_of_first(10, 6)):
            spec = wht(t)
            W = spec.weight_profile()
            assert np.all(W[1:] <= np.exp(-np.arange(1, 11) / 2))
            e = estar_exact_all(spec, EstarConfig(4, 0.8, "1e-3", flat))
            assert abs(np.mean(np.abs(e)) - abs(spec.mean)) <= 0.05

    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_convergence_in_step(self, rng, r):
        n = 8 + r % 3
        t = random_table(n, rng)
        spec = wht(t)
        flat = build_minimax(r, n)
        g = smoothed_g_exact_all(spec, flat, 0.7)
        errs = []
        for d in ("1e-1", "1e-2", "1e-3"):
            e = estar_exact_all(spec, EstarConfig(r, 0.7, d, flat))
            errs.append(np.sqrt(np.mean((e - g) ** 2)))
        for a, b in zip(errs, errs[1:]):
            # below 1e-13 the comparison is float64 round-off, not truncation
            assert b <= a / 2 or b <= 1e-13

    def test_mean_exact(self, rng):
        # the constant level has multiplier exactly 1
        t = random_table(9, rng)
        spec = wht(t)
        e = estar_exact_all(spec, EstarConfig(3, 0.6, "1e-2", build_minimax(3, 9)))
        assert e.mean() == pytest.approx(spec.mean, abs=1e-12)

    def test_precision_grows_with_step(self):
        flat = build_minimax(4, 8)
        assert EstarConfig(4, 0.5, "1e-6", flat).dps > EstarConfig(4, 0.5, "1e-3", flat).dps

    def test_coefficients_reproduce_derivative(self):
        # r=1: E* on a level-j character is rho^j - alpha_1 j rho^j up to O(delta)
        flat = build_minimax(1, 1)
        cfg = EstarConfig(1, 0.5, "1e-4", flat)
        co = estar_coefficients(cfg)
        with mpmath.workdps(co.dps):
            for j in range(4):
                val = mpmath.fsum(c * s**j for s, c in zip(co.rates, co.coeffs))
                expect = 0.5**j * (1 - j * Fraction(flat.alpha[0]))
                assert float(val) == pytest.approx(float(expect), abs=1e-3)
