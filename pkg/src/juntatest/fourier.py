"""Walsh-Hadamard transform, level weights and the noise operator."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .hypercube import (
    MAX_EXACT_BITS,
    BudgetError,
    DimensionError,
    FunctionSource,
    PackedTruthTable,
    Point,
    as_mask,
    popcount,
    popcount_array,
)
from .rng import as_generator


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalised Hadamard butterfly along the last axis.

    Computes ``H[S] = sum_idx a[idx] * (-1)^{popcount(S & idx)}``; integer
    inputs stay integer.
    """
    a = np.array(a, copy=True)
    size = a.shape[-1]
    n = size.bit_length() - 1
    if (1 << n) != size:
        raise DimensionError("transform length must be a power of two")
    lead = a.shape[:-1]
    h = 1
    while h < size:
        v = a.reshape(*lead, size // (2 * h), 2, h)
        x = v[..., 0, :].copy()
        y = v[..., 1, :]
        v[..., 0, :] = x + y
        v[..., 1, :] = x - y
        h *= 2
    return a


def _sign_by_parity(n: int) -> np.ndarray:
    return np.where(popcount_array(np.arange(1 << n)) & 1, -1, 1).astype(np.int64)


def chi(S: int, x: int) -> int:
    """The parity chi_S(x) under the +1-is-set-bit convention."""
    return -1 if popcount(S & ~x) & 1 else 1


@dataclass(frozen=True)
class FourierSpectrum:
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (1 << self.n,):
            raise DimensionError("spectrum length must be 2^n")

    def __getitem__(self, S) -> float:
        return float(self.coeffs[as_mask(S, self.n)])

    @property
    def mean(self) -> float:
        return float(self.coeffs[0])

    def levels(self) -> np.ndarray:
        return popcount_array(np.arange(1 << self.n))

    def weight_profile(self) -> np.ndarray:
        """W^{=l}[f] for l = 0..n."""
        return np.bincount(self.levels(), weights=self.coeffs**2, minlength=self.n + 1)

    def variance(self) -> float:
        return float(np.sum(self.coeffs[1:] ** 2))

    def to_dict(self, tol: float = 0.0) -> dict:
        nz = np.nonzero(np.abs(self.coeffs) > tol)[0]
        return {"n": self.n, "coeffs": {str(int(S)): float(self.coeffs[S]) for S in nz}}


def wht(f: PackedTruthTable | np.ndarray) -> FourierSpectrum:
    """Fourier coefficients f^(S) = 2^-n sum_x f(x) chi_S(x).

    ``f`` is a truth table or a real array of length 2^n.  For tables the
    butterfly runs in integer arithmetic and is scaled once at the end.
    """
    if isinstance(f, PackedTruthTable):
        if f.n > MAX_EXACT_BITS:
            raise BudgetError(f"dense transform limited to n <= {MAX_EXACT_BITS}")
        vals = f.values().astype(np.int64)
        n = f.n
    else:
        vals = np.asarray(f)
        n = vals.size.bit_length() - 1
        if n > MAX_EXACT_BITS:
            raise BudgetError(f"dense transform limited to n <= {MAX_EXACT_BITS}")
        if not np.issubdtype(vals.dtype, np.integer):
            vals = vals.astype(np.float64)
    H = fwht(vals)
    coeffs = (H * _sign_by_parity(n)).astype(np.float64) / float(1 << n)
    return FourierSpectrum(n, coeffs)


def inverse_wht(spec: FourierSpectrum) -> np.ndarray:
    """Function values sum_S f^(S) chi_S(x) for every x."""
    return fwht(spec.coeffs * _sign_by_parity(spec.n))


def level_components(spec: FourierSpectrum) -> np.ndarray:
    """Array L with L[j, x] = sum_{|T|=j} f^(T) chi_T(x)."""
    lv = spec.levels()
    out = np.empty((spec.n + 1, 1 << spec.n))
    for j in range(spec.n + 1):
        out[j] = inverse_wht(FourierSpectrum(spec.n, np.where(lv == j, spec.coeffs, 0.0)))
    return out


def noise_exact(spec: FourierSpectrum, rho: float) -> FourierSpectrum:
    """T_rho in the Fourier basis: f^(S) -> rho^|S| f^(S)."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"correlation {rho} outside [0, 1]")
    return FourierSpectrum(spec.n, spec.coeffs * float(rho) ** spec.levels())


def noise_sample_masks(x: int, n: int, rho: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws y ~ N_rho(x) as masks."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"correlation {rho} outside [0, 1]")
    if n == 0:
        return np.zeros(size, dtype=np.int64)
    weights = np.int64(1) << np.arange(n, dtype=np.int64)
    keep = (rng.random((size, n)) < rho).astype(np.int64) @ weights
    fresh = rng.integers(0, 1 << n, size=size, dtype=np.int64)
    return (int(x) & keep) | (fresh & ~keep)


def noise_sample(x: Point, rho: float, rand=None) -> Point:
    """One draw y ~ N_rho(x): each coordinate kept w.p. rho, else uniform."""
    rng = as_generator(rand)
    return Point(x.n, int(noise_sample_masks(x.bits, x.n, rho, rng, 1)[0]))


def noise_derivative_all(spec: FourierSpectrum, ell: int) -> np.ndarray:
    """(1/ell!) d^ell/drho^ell T_rho f at rho = 1, at every point.

    Equals sum_{|T| >= ell} C(|T|, ell) f^(T) chi_T.
    """
    if not 0 <= ell <= spec.n:
        raise ValueError(f"order {ell} outside [0, {spec.n}]")
    binom = np.array([comb(j, ell) for j in range(spec.n + 1)], dtype=np.float64)
    return inverse_wht(FourierSpectrum(spec.n, spec.coeffs * binom[spec.levels()]))


def noise_derivative_exact(spec: FourierSpectrum, ell: int, x: Point | int) -> float:
    bits = x.bits if isinstance(x, Point) else int(x)
    if not 0 <= ell <= spec.n:
        raise ValueError(f"order {ell} outside [0, {spec.n}]")
    idx = np.arange(1 << spec.n)
    lv = spec.levels()
    sel = lv >= ell
    chis = np.where(popcount_array(idx[sel] & ~bits) & 1, -1.0, 1.0)
    binom = np.array([comb(j, ell) for j in range(spec.n + 1)], dtype=np.float64)
    return float(np.sum(binom[lv[sel]] * spec.coeffs[sel] * chis))


def discrete_derivative(f: FunctionSource, x: Point | int, S) -> float:
    """(d f / d x_S)(x) * chi_S(x) = 2^-|S| sum_{T subset S} (-1)^|T| f(x xor T).

    Uses exactly 2^|S| queries.
    """
    bits = x.bits if isinstance(x, Point) else int(x)
    S = as_mask(S, f.n)
    subs = [0]
    for c in range(f.n):
        if (S >> c) & 1:
            subs += [t | (1 << c) for t in subs]
    subs = np.array(subs, dtype=np.int64)
    vals = f.evaluate(bits ^ subs).astype(np.int64)
    signs = np.where(popcount_array(subs) & 1, -1, 1)
    return float(np.sum(signs * vals)) / float(1 << popcount(S))
