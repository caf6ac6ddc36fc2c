"""Backward-difference differentiation schemes with exact coefficients.

The l-th derivative at x is approximated from f(x), f(x - d), ...,
f(x - (2l-1) d) as sum_i beta_i f(x - i d) / d^l, with beta chosen so the
rule is exact on polynomials of degree < 2l.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod
from typing import Sequence

import numpy as np

from ._exact import solve

MAX_ORDER = 16


@dataclass(frozen=True)
class DiffScheme:
    ell: int
    beta: tuple[Fraction, ...]

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(-i for i in range(2 * self.ell))

    def moments(self) -> list[Fraction]:
        """sum_i beta_i (-i)^j for j = 0..2l-1."""
        return [sum((b * (-i) ** j for i, b in enumerate(self.beta)), Fraction(0)) for j in range(2 * self.ell)]

    def beta_float(self) -> np.ndarray:
        return np.array([float(b) for b in self.beta])

    def to_dict(self) -> dict:
        return {
            "ell": self.ell,
            "nodes": list(self.nodes),
            "beta": [str(b) for b in self.beta],
            "beta_float": [float(b) for b in self.beta],
        }


@lru_cache(maxsize=None)
def backward_coeffs(ell: int) -> DiffScheme:
    """Solve sum_i beta_i (-i)^j = l! [j = l] for j = 0..2l-1 exactly."""
    if not 1 <= ell <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}, got {ell}")
    m = 2 * ell
    A = [[(-i) ** j for i in range(m)] for j in range(m)]
    rhs = [factorial(ell) if j == ell else 0 for j in range(m)]
    return DiffScheme(ell, tuple(solve(A, rhs)))


def _elementary_symmetric(xs: Sequence[Fraction]) -> list[Fraction]:
    e = [Fraction(1)] + [Fraction(0)] * len(xs)
    for x in xs:
        for k in range(len(xs), 0, -1):
            e[k] += e[k - 1] * x
    return e


def vandermonde_inverse(nodes: Sequence) -> list[list[Fraction]]:
    """Closed-form inverse of W with W[j][i] = nodes[j]^i.

    (W^-1)[i][j] = (-1)^{n-1-i} e_{n-1-i}(nodes without x_j) / prod_{m != j}(x_j - x_m).
    """
    xs = [Fraction(x) for x in nodes]
    n = len(xs)
    if len(set(xs)) != n:
        raise ValueError("nodes must be pairwise distinct")
    inv = [[Fraction(0)] * n for _ in range(n)]
    for j, xj in enumerate(xs):
        others = xs[:j] + xs[j + 1 :]
        e = _elementary_symmetric(others)
        denom = prod((xj - xm for xm in others), start=Fraction(1))
        for i in range(n):
            inv[i][j] = (-1) ** (n - 1 - i) * e[n - 1 - i] / denom
    return inv


def vandermonde(nodes: Sequence) -> list[list[Fraction]]:
    xs = [Fraction(x) for x in nodes]
    return [[x**i for i in range(len(xs))] for x in xs]


def gamma_coeffs(ell: int, delta: float) -> np.ndarray:
    """gamma_i = beta_i / delta^l as floats."""
    if not delta > 0:
        raise ValueError("step must be positive")
    return backward_coeffs(ell).beta_float() / float(delta) ** ell


def gamma_bound(ell: int, delta: float) -> float:
    return (2 * ell / delta ** (1 / 3)) ** (3 * ell)


@dataclass(frozen=True)
class MonomialCheck:
    ell: int
    t: int
    delta: Fraction
    error: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.error <= self.bound


def validate_on_monomial(scheme: DiffScheme, t: int, delta) -> MonomialCheck:
    """Exact check of |sum beta_i (1 - i d)^t - t!/(t-l)! d^l| <= (2l)^{3l+1} d^{2l} t^{2l}."""
    if t < 0:
        raise ValueError("exponent must be nonnegative")
    d = Fraction(delta)
    ell = scheme.ell
    lhs = sum((b * (1 - i * d) ** t for i, b in enumerate(scheme.beta)), Fraction(0))
    exact = Fraction(factorial(t), factorial(t - ell)) * d**ell if t >= ell else Fraction(0)
    err = abs(lhs - exact)
    bound = Fraction(2 * ell) ** (3 * ell + 1) * d ** (2 * ell) * Fraction(t) ** (2 * ell)
    check = MonomialCheck(ell, t, d, err, bound)
    if not check.ok:
        raise AssertionError(f"monomial bound violated: l={ell}, t={t}, delta={float(d)}")
    return check
