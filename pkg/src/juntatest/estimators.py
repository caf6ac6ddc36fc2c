"""Local estimators of the mean of a Boolean function.

``local_mean_estimate`` is the ball estimator

    g(x) = f(x) - sum_{i=1}^r alpha_i sum_{|S|=i} D_S(x),
    D_S(x) = 2^-|S| sum_{T subset S} (-1)^|T| f(x xor T),

which satisfies g = E[f] + sum_S (1 - p(|S|)) f^(S) chi_S(x) exactly.

``estar`` replaces the discrete derivatives by numerical derivatives of the
noise operator along rates rho (1 - i delta_l), delta_l = delta^(r/l).
Its coefficients are huge (about delta^-r) and cancel, so they are computed
in mpmath at a precision that grows with r |log10 delta|.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial, log10
from typing import Callable, Sequence

import mpmath
import numpy as np

from .flatpoly import FlatPolynomial
from .fourier import FourierSpectrum, level_components, wht
from .hypercube import FunctionSource, Point, ball_masks, popcount_array
from .numdiff import backward_coeffs

DEFAULT_KAPPA = 4.0


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class LocalEstimatorConfig:
    r: int
    flat: FlatPolynomial
    bound: float | None = None

    def __post_init__(self):
        if self.flat.r != self.r:
            raise ConfigurationError(f"flat polynomial has degree {self.flat.r}, expected {self.r}")
        if self.flat.N < self.r:
            raise ConfigurationError("flat range must cover the radius")
        if self.bound is not None and self.bound <= 0:
            raise ConfigurationError("clamp must be positive")

    @property
    def tau(self) -> float:
        return float(self.flat.flatness)


@lru_cache(maxsize=64)
def _ball_plan(n: int, r: int):
    """Ball masks plus, per coordinate, index pairs (S without i, S with i)."""
    masks = ball_masks(n, r)
    pairs = []
    for i in range(n):
        bit = np.int64(1) << i
        with_i = np.nonzero(masks & bit)[0]
        without_i = np.searchsorted(masks, masks[with_i] ^ bit)
        pairs.append((without_i, with_i))
    return masks, pairs, popcount_array(masks)


def ball_derivatives(values: np.ndarray, n: int, r: int) -> np.ndarray:
    """D_S for every |S| <= r from f on the ball (last axis in ball order)."""
    _, pairs, _ = _ball_plan(n, r)
    a = np.array(values, dtype=np.float64, copy=True)
    for without_i, with_i in pairs:
        a[..., with_i] = 0.5 * (a[..., without_i] - a[..., with_i])
    return a


def _level_alpha(cfg: LocalEstimatorConfig, n: int) -> np.ndarray:
    _, _, levels = _ball_plan(n, cfg.r)
    alpha = np.concatenate([[0.0], cfg.flat.alpha_float()])
    return alpha[levels]


def g_from_ball_values(values: np.ndarray, n: int, cfg: LocalEstimatorConfig) -> np.ndarray:
    """The estimator from precomputed ball values (rows = centers)."""
    D = ball_derivatives(values, n, cfg.r)
    out = D[..., 0] - D[..., 1:] @ _level_alpha(cfg, n)[1:]
    if cfg.bound is not None:
        out = np.clip(out, -cfg.bound, cfg.bound)
    return out


def local_mean_estimate(f: FunctionSource, x: Point | int, cfg: LocalEstimatorConfig) -> float:
    """g(f restricted to B(x, r)); queries each ball point exactly once."""
    bits = x.bits if isinstance(x, Point) else int(x)
    if cfg.r > f.n:
        raise ConfigurationError(f"radius {cfg.r} exceeds dimension {f.n}")
    masks, _, _ = _ball_plan(f.n, cfg.r)
    vals = f.evaluate(bits ^ masks)
    return float(g_from_ball_values(vals, f.n, cfg))


def local_mean_estimate_batch(f: FunctionSource, centers: np.ndarray, cfg: LocalEstimatorConfig) -> np.ndarray:
    """Vectorised ``local_mean_estimate`` over an array of center masks."""
    if cfg.r > f.n:
        raise ConfigurationError(f"radius {cfg.r} exceeds dimension {f.n}")
    masks, _, _ = _ball_plan(f.n, cfg.r)
    centers = np.asarray(centers, dtype=np.int64)
    vals = f.evaluate((centers[:, None] ^ masks[None, :]).ravel()).reshape(len(centers), len(masks))
    return g_from_ball_values(vals, f.n, cfg)


def local_mean_estimate_all(f: FunctionSource, cfg: LocalEstimatorConfig, chunk: int = 1 << 12) -> np.ndarray:
    """The estimator at every center of the cube (for exact checks)."""
    out = np.empty(1 << f.n)
    for lo in range(0, 1 << f.n, chunk):
        hi = min(lo + chunk, 1 << f.n)
        out[lo:hi] = local_mean_estimate_batch(f, np.arange(lo, hi, dtype=np.int64), cfg)
    return out


def abs_mean_from_estimates(samples: Sequence[float] | np.ndarray) -> float:
    """Mean of |samples|; estimates |E[X]| up to the standard deviation of X."""
    a = np.asarray(samples, dtype=np.float64)
    if a.size == 0:
        raise ValueError("need at least one sample")
    return float(np.mean(np.abs(a)))


# ---------------------------------------------------------------------------
# E-star


@dataclass(frozen=True)
class EstarConfig:
    r: int
    rho: float
    delta: float | str
    flat: FlatPolynomial
    extra_dps: int = field(default=20, compare=False)

    def __post_init__(self):
        if self.flat.r != self.r:
            raise ConfigurationError(f"flat polynomial has degree {self.flat.r}, expected {self.r}")
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError(f"noise rate {self.rho} outside (0, 1)")
        d = mpmath.mpf(self.delta)
        if not 0 < d < 1:
            raise ConfigurationError(f"step {self.delta} outside (0, 1)")

    @property
    def dps(self) -> int:
        """Working precision covering the delta^-r cancellation."""
        r = self.r
        d = -float(mpmath.log10(mpmath.mpf(self.delta)))
        return int(self.extra_dps + 16 + r * d + 3 * r * log10(2 * r) + r * log10(max(r, 2)) + 10)


@dataclass(frozen=True)
class EstarCoefficients:
    """E* = sum_s c_s T_s f(x) over the rate grid s."""

    rates: tuple
    coeffs: tuple
    dps: int

    def rates_float(self) -> np.ndarray:
        return np.array([float(s) for s in self.rates])

    def level_multipliers(self, n: int) -> np.ndarray:
        """K_j = sum_s c_s s^j, so that E* = sum_j K_j L_j(x)."""
        with mpmath.workdps(self.dps):
            return np.array([float(mpmath.fsum(c * s**j for s, c in zip(self.rates, self.coeffs))) for j in range(n + 1)])

    def pooled_weights(self, rho: float, d: int) -> np.ndarray:
        """w_D = sum_s c_s ((1+s)/(1+rho))^(d-D) ((1-s)/(1-rho))^D for D = 0..d.

        Reweights a sample drawn at rate rho on d free coordinates, at
        distance D from the center, into the E* combination of rates.
        """
        with mpmath.workdps(self.dps):
            rho = mpmath.mpf(rho)
            out = []
            for D in range(d + 1):
                out.append(
                    float(
                        mpmath.fsum(
                            c * ((1 + s) / (1 + rho)) ** (d - D) * ((1 - s) / (1 - rho)) ** D
                            for s, c in zip(self.rates, self.coeffs)
                        )
                    )
                )
        return np.array(out)


@lru_cache(maxsize=256)
def _estar_coefficients(r: int, rho: float, delta: str, alpha: tuple, dps: int) -> EstarCoefficients:
    with mpmath.workdps(dps):
        rho_m = mpmath.mpf(rho)
        delta_m = mpmath.mpf(delta)
        rates = [rho_m]
        coeffs = [mpmath.mpf(1)]
        for ell in range(1, r + 1):
            beta = backward_coeffs(ell).beta
            d_ell = delta_m ** (mpmath.mpf(r) / ell)
            scale = mpmath.mpf(alpha[ell - 1].numerator) / alpha[ell - 1].denominator / factorial(ell) / d_ell**ell
            for i, b in enumerate(beta):
                c = -scale * mpmath.mpf(b.numerator) / b.denominator
                if i == 0:
                    coeffs[0] += c
                else:
                    rates.append(rho_m * (1 - i * d_ell))
                    coeffs.append(c)
        return EstarCoefficients(tuple(rates), tuple(coeffs), dps)


def estar_coefficients(cfg: EstarConfig) -> EstarCoefficients:
    return _estar_coefficients(cfg.r, float(cfg.rho), str(cfg.delta), tuple(cfg.flat.alpha), cfg.dps)


def spectral_noise_eval(spec: FourierSpectrum, x: int, dps: int) -> Callable:
    """Exact T_s f(x) as a function of an mpmath rate s."""
    L = level_components(spec)[:, x] if spec.n <= 14 else _levels_at(spec, x)
    with mpmath.workdps(dps):
        Lm = [mpmath.mpf(float(v)) for v in L]

    def evaluate(s):
        with mpmath.workdps(dps):
            s = mpmath.mpf(s)
            return mpmath.fsum(v * s**j for j, v in enumerate(Lm))

    return evaluate


def _levels_at(spec: FourierSpectrum, x: int) -> np.ndarray:
    idx = np.arange(1 << spec.n)
    chis = np.where(popcount_array(idx & ~x) & 1, -1.0, 1.0)
    return np.bincount(spec.levels(), weights=spec.coeffs * chis, minlength=spec.n + 1)


def estar(
    f: FunctionSource | None,
    x: Point | int,
    cfg: EstarConfig,
    noise_eval: Callable | Mapping | None = None,
) -> float:
    """E* at x from noise evaluations T_s f(x) on the rate grid.

    ``noise_eval`` is a callable taking an mpmath rate, or a mapping from
    float rates to values.  When omitted, exact values come from the
    spectrum of ``f`` (uncounted tabulation).
    """
    bits = x.bits if isinstance(x, Point) else int(x)
    co = estar_coefficients(cfg)
    if noise_eval is None:
        if f is None:
            raise ConfigurationError("need a function or noise evaluations")
        noise_eval = spectral_noise_eval(wht(f.tabulate()), bits, co.dps)
    with mpmath.workdps(co.dps):
        total = mpmath.mpf(0)
        for s, c in zip(co.rates, co.coeffs):
            if isinstance(noise_eval, Mapping):
                try:
                    v = noise_eval[float(s)]
                except KeyError:
                    raise ConfigurationError(f"missing noise evaluation at rate {float(s)!r}") from None
            else:
                v = noise_eval(s)
            total += c * mpmath.mpf(v)
        return float(total)


def estar_exact_all(spec: FourierSpectrum, cfg: EstarConfig) -> np.ndarray:
    """E* with exact noise values at every center: sum_j K_j L_j(x)."""
    K = estar_coefficients(cfg).level_multipliers(spec.n)
    return K @ level_components(spec)


def smoothed_g_exact_all(spec: FourierSpectrum, flat: FlatPolynomial, rho: float) -> np.ndarray:
    """g(T_rho f restricted to B(x, r)) at every center, via the spectrum."""
    one_minus_p = flat.one_minus_p(spec.n)
    mult = one_minus_p * float(rho) ** np.arange(spec.n + 1)
    mult[0] = 1.0
    return mult @ level_components(spec)
