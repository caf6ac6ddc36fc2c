"""Brute-force ground truth: exact distances to juntas, hold-out noise and
spectral estimator statistics.

Distances use dist(f, J_S) = 1/2 - 1/2 E_{x_S} |E_{y} f(x_S, y)| and are
returned as exact fractions (all inputs are +-1 tables, so every restricted
mean is dyadic).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb

import numpy as np

from .flatpoly import FlatPolynomial
from .fourier import noise_exact, wht
from .hypercube import (
    MAX_EXACT_BITS,
    BudgetError,
    PackedTruthTable,
    Point,
    as_mask,
    gather_bits,
    k_subsets,
    mask_to_coords,
    popcount,
    popcount_array,
    scatter_bits,
)

MAX_SUBSET_BUDGET = 2_000_000
MAX_ORACLE_BITS = 20


def _check_n(f: PackedTruthTable, limit: int = MAX_EXACT_BITS) -> None:
    if f.n > limit:
        raise BudgetError(f"exact oracle limited to n <= {limit}, got {f.n}")


def restricted_sums(f: PackedTruthTable, S) -> np.ndarray:
    """Integer sums of f over the complement cube, one per pattern of x_S."""
    _check_n(f)
    coords = mask_to_coords(as_mask(S, f.n))
    keys = gather_bits(np.arange(1 << f.n, dtype=np.int64), coords)
    return np.bincount(keys, weights=f.values(), minlength=1 << len(coords)).astype(np.int64)


def exact_dist_to_set(f: PackedTruthTable, S) -> Fraction:
    sums = restricted_sums(f, S)
    return Fraction((1 << f.n) - int(np.abs(sums).sum()), 1 << (f.n + 1))


def literal_dist_to_set(f: PackedTruthTable, S) -> Fraction:
    """Minimum disagreement over every junta on S, by explicit enumeration."""
    coords = mask_to_coords(as_mask(S, f.n))
    if len(coords) > 4:
        raise BudgetError("literal minimisation limited to |S| <= 4")
    keys = gather_bits(np.arange(1 << f.n, dtype=np.int64), coords)
    vals = f.values()
    best = 1 << f.n
    for table in product((-1, 1), repeat=1 << len(coords)):
        g = np.asarray(table)[keys]
        best = min(best, int(np.count_nonzero(g != vals)))
    return Fraction(best, 1 << f.n)


def exact_dist_to_juntas(
    f: PackedTruthTable, k: int, budget: int = MAX_SUBSET_BUDGET, per_set: bool = False
) -> tuple[Fraction, int] | tuple[Fraction, int, dict[int, Fraction]]:
    """min over |S| = k of dist(f, J_S) with its argmin (ties: smallest mask)."""
    _check_n(f, MAX_ORACLE_BITS)
    if not 0 <= k <= f.n:
        raise ValueError(f"junta size {k} outside [0, {f.n}]")
    if comb(f.n, k) > budget:
        raise BudgetError(f"C({f.n},{k}) = {comb(f.n, k)} subsets exceeds budget {budget}")
    vals = f.values()
    idx = np.arange(1 << f.n, dtype=np.int64)
    best, best_S = None, 0
    table = {}
    for S in k_subsets(f.n, k):
        keys = gather_bits(idx, mask_to_coords(S))
        mass = int(np.abs(np.bincount(keys, weights=vals, minlength=1 << k)).sum())
        d = Fraction((1 << f.n) - mass, 1 << (f.n + 1))
        if per_set:
            table[S] = d
        if best is None or d < best:
            best, best_S = d, S
    if per_set:
        return best, best_S, table
    return best, best_S


@dataclass(frozen=True)
class ExactStats:
    mean: Fraction
    variance: Fraction
    dist_per_set: dict
    dist_k: Fraction
    best_set: int

    def to_dict(self) -> dict:
        return {
            "mean": float(self.mean),
            "abs_mean": float(abs(self.mean)),
            "variance": float(self.variance),
            "dist_k": float(self.dist_k),
            "dist_k_exact": str(self.dist_k),
            "best_set": mask_to_coords(self.best_set),
            "dist_per_set": {",".join(map(str, mask_to_coords(S))): float(d) for S, d in self.dist_per_set.items()},
        }


def exact_stats(f: PackedTruthTable, k: int, budget: int = MAX_SUBSET_BUDGET) -> ExactStats:
    _check_n(f, MAX_ORACLE_BITS)
    total = int(f.values().astype(np.int64).sum())
    mean = Fraction(total, 1 << f.n)
    dist, best, table = exact_dist_to_juntas(f, k, budget, per_set=True)
    return ExactStats(mean, 1 - mean * mean, table, dist, best)


def holdout_profile(f: PackedTruthTable, S, x: Point | int) -> np.ndarray:
    """H[D] = sum of f(y) over y with y_S = x_S at distance D from x (D = 0..n-|S|)."""
    _check_n(f, MAX_ORACLE_BITS)
    bits = x.bits if isinstance(x, Point) else int(x)
    S = as_mask(S, f.n)
    comp = ((1 << f.n) - 1) & ~S
    d = f.n - popcount(S)
    pats = scatter_bits(np.arange(1 << d, dtype=np.int64), mask_to_coords(comp))
    ys = bits ^ pats
    return np.bincount(popcount_array(pats), weights=f.lookup(ys), minlength=d + 1).astype(np.int64)


def holdout_weights(d: int, rho):
    """Probability of one specific complement pattern at distance D, D = 0..d."""
    if isinstance(rho, Fraction):
        keep, move = (1 + rho) / 2, (1 - rho) / 2
        return [keep ** (d - D) * move**D for D in range(d + 1)]
    rho = float(rho)
    D = np.arange(d + 1)
    return ((1 + rho) / 2) ** (d - D) * ((1 - rho) / 2) ** D


def exact_holdout_noise(f: PackedTruthTable, S, rho, x: Point | int):
    """T_rho^S f(x) = E[f(y) | y_S = x_S], y ~ N_rho(x); exact for Fraction rho."""
    if not 0 <= rho <= 1:
        raise ValueError(f"noise rate {rho} outside [0, 1]")
    H = holdout_profile(f, S, x)
    w = holdout_weights(len(H) - 1, rho)
    if isinstance(rho, Fraction):
        return sum((int(h) * wi for h, wi in zip(H, w)), Fraction(0))
    return float(np.dot(H, w))


def exact_estimator_stats(f: PackedTruthTable, flat: FlatPolynomial, r: int, rho: float = 1.0) -> tuple[float, float]:
    """Mean and variance over centers of g(T_rho f restricted to B(x, r))."""
    if flat.r != r:
        raise ValueError(f"flat polynomial has degree {flat.r}, expected {r}")
    _check_n(f, 16)
    spec = noise_exact(wht(f), rho)
    W = spec.weight_profile()
    one_minus_p = flat.one_minus_p(f.n)
    return spec.mean, float(np.sum(one_minus_p[1:] ** 2 * W[1:]))
