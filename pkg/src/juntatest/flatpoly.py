"""Flat polynomials: p(0) = 0 and p(i) close to 1 for i = 1..N.

Polynomials are stored by their exact values on 0..N together with the
binomial-basis coefficients alpha_i, p(x) = sum_i alpha_i * C(x, i).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from ._exact import solve

METHODS = ("minimax", "chebyshev")


def binomial_coeffs(values: Sequence) -> tuple[Fraction, ...]:
    """alpha_1..alpha_r from p(0..r) by forward differences.

    alpha_i = sum_{j<=i} (-1)^{i-j} C(i,j) p(j), exact in rationals.
    """
    vals = [Fraction(v) for v in values]
    if not vals:
        raise ValueError("need at least one value")
    if vals[0] != 0:
        raise ValueError("p(0) must be 0")
    return tuple(
        sum((Fraction((-1) ** (i - j) * comb(i, j)) * vals[j] for j in range(i + 1)), Fraction(0))
        for i in range(1, len(vals))
    )


def eval_binomial(alpha: Sequence, x: int) -> Fraction:
    return sum((Fraction(a) * comb(x, i) for i, a in enumerate(alpha, start=1)), Fraction(0))


@dataclass(frozen=True)
class FlatPolynomial:
    r: int
    N: int
    values: tuple[Fraction, ...]
    alpha: tuple[Fraction, ...]
    flatness: Fraction
    method: str = "minimax"

    def __call__(self, x: int) -> Fraction:
        """Exact value at a nonnegative integer."""
        if 0 <= x <= self.N:
            return self.values[x]
        return eval_binomial(self.alpha, x)

    def alpha_float(self) -> np.ndarray:
        return np.array([float(a) for a in self.alpha])

    def one_minus_p(self, upto: int) -> np.ndarray:
        """1 - p(l) for l = 0..upto as floats."""
        return np.array([float(1 - self(l)) for l in range(upto + 1)])

    def check_bounds(self, upto: int | None = None) -> dict:
        """Verify the structural bounds; returns the worst observed ratios.

        Coefficients: |alpha_i| <= 2 i^i, valid when |p| <= 2 on 1..N.
        Out of range: |p(l)| <= 4 l^r for l in N+1..upto (default 3N).
        """
        upto = 3 * self.N if upto is None else upto
        if self.values[0] != 0:
            raise AssertionError("p(0) != 0")
        if any(abs(v) > 2 for v in self.values[1:]):
            raise AssertionError("|p| exceeds 2 on the flat range")
        coef = max((abs(a) / (2 * i**i) for i, a in enumerate(self.alpha, start=1)), default=Fraction(0))
        oos = max((abs(self(l)) / (4 * Fraction(l) ** self.r) for l in range(self.N + 1, upto + 1)), default=Fraction(0))
        if coef > 1:
            raise AssertionError(f"binomial coefficient bound violated (ratio {float(coef)})")
        if oos > 1:
            raise AssertionError(f"out-of-range bound violated (ratio {float(oos)})")
        return {"coeff_ratio": float(coef), "oos_ratio": float(oos)}

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "N": self.N,
            "method": self.method,
            "values": [str(v) for v in self.values],
            "values_float": [float(v) for v in self.values],
            "alpha": [str(a) for a in self.alpha],
            "alpha_float": [float(a) for a in self.alpha],
            "flatness": float(self.flatness),
        }


def _check_args(r: int, N: int) -> None:
    if not (1 <= r <= N):
        raise ValueError(f"need 1 <= r <= N, got r={r}, N={N}")


def _from_values(r: int, N: int, values: Sequence[Fraction], method: str) -> FlatPolynomial:
    values = tuple(Fraction(v) for v in values)
    alpha = binomial_coeffs(values[: r + 1])
    flat = max(abs(v - 1) for v in values[1:])
    return FlatPolynomial(r, N, values, alpha, flat, method)


def _interpolant(N: int, method: str) -> FlatPolynomial:
    return _from_values(N, N, [Fraction(0)] + [Fraction(1)] * N, method)


def chebyshev_T(r: int, u):
    """T_r(u) by the three-term recurrence; exact for Fraction input."""
    t0, t1 = 1, u
    if r == 0:
        return t0 + 0 * u
    for _ in range(r - 1):
        t0, t1 = t1, 2 * u * t1 - t0
    return t1


@lru_cache(maxsize=None)
def build_chebyshev(r: int, N: int) -> FlatPolynomial:
    """p(x) = 1 - T_r((2x - N - 1)/(N - 1)) / T_r(-(N + 1)/(N - 1))."""
    _check_args(r, N)
    if N == 1:
        return _interpolant(1, "chebyshev")
    denom = chebyshev_T(r, Fraction(-(N + 1), N - 1))
    values = [1 - chebyshev_T(r, Fraction(2 * x - N - 1, N - 1)) / denom for x in range(N + 1)]
    return _from_values(r, N, values, "chebyshev")


def _lp_minimax(r: int, N: int) -> np.ndarray:
    """Float alpha from the discrete minimax LP (variables alpha, tau)."""
    B = np.array([[comb(j, i) for i in range(1, r + 1)] for j in range(1, N + 1)], dtype=float)
    ones = np.ones((N, 1))
    A_ub = np.vstack([np.hstack([B, -ones]), np.hstack([-B, -ones])])
    b_ub = np.concatenate([np.ones(N), -np.ones(N)])
    c = np.zeros(r + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * r + [(0, None)], method="highs")
    if res.x is None:
        return np.zeros(r)
    return res.x[:r]


def _initial_reference(r: int, N: int, alpha: np.ndarray) -> list[int]:
    """r+1 alternating points taken from the LP residual, or evenly spread."""
    pts = np.arange(1, N + 1)
    B = np.array([[comb(j, i) for i in range(1, r + 1)] for j in pts], dtype=float)
    e = B @ alpha - 1.0
    ref: list[int] = []
    best_sign = 0
    for j, v in zip(pts, e):
        s = 1 if v >= 0 else -1
        if ref and s == best_sign:
            if abs(v) > abs(e[ref[-1] - 1]):
                ref[-1] = int(j)
        else:
            ref.append(int(j))
            best_sign = s
    if len(ref) >= r + 1 and np.all(np.isfinite(e)):
        # keep the window of r+1 consecutive alternation points with the largest minimum
        windows = [ref[i : i + r + 1] for i in range(len(ref) - r)]
        return max(windows, key=lambda w: min(abs(e[j - 1]) for j in w))
    return sorted({int(round(1 + i * (N - 1) / r)) for i in range(r + 1)})


def _level(r: int, ref: list[int]) -> tuple[list[Fraction], Fraction]:
    """Solve p(j_k) - 1 = (-1)^k h on the reference exactly."""
    A = [[comb(j, i) for i in range(1, r + 1)] + [-((-1) ** k)] for k, j in enumerate(ref)]
    sol = solve(A, [1] * len(ref))
    return sol[:r], sol[r]


def _exchange(ref: list[int], j: int, err: dict[int, Fraction]) -> list[int]:
    sgn = lambda v: v > 0
    ref = list(ref)
    if j < ref[0]:
        if sgn(err[j]) == sgn(err[ref[0]]):
            ref[0] = j
        else:
            ref = [j] + ref[:-1]
    elif j > ref[-1]:
        if sgn(err[j]) == sgn(err[ref[-1]]):
            ref[-1] = j
        else:
            ref = ref[1:] + [j]
    else:
        k = max(i for i in range(len(ref)) if ref[i] < j)
        if sgn(err[j]) == sgn(err[ref[k]]):
            ref[k] = j
        else:
            ref[k + 1] = j
    return ref


def _remez(r: int, N: int, ref: list[int], max_iter: int = 500) -> list[Fraction]:
    """Exact discrete exchange iteration; returns alpha of the minimax polynomial."""
    for _ in range(max_iter):
        alpha, h = _level(r, ref)
        err = {j: eval_binomial(alpha, j) - 1 for j in range(1, N + 1)}
        jmax = max(err, key=lambda j: (abs(err[j]), -j))
        if abs(err[jmax]) <= abs(h):
            return alpha
        ref = _exchange(ref, jmax, err)
    raise RuntimeError(f"exchange iteration did not converge for r={r}, N={N}")


@lru_cache(maxsize=None)
def build_minimax(r: int, N: int) -> FlatPolynomial:
    """Optimal degree-r polynomial on the grid 1..N with p(0) = 0.

    A dense LP gives a floating-point solution whose alternation points seed
    an exact rational exchange step, so the stored polynomial and its
    flatness are exact.
    """
    _check_args(r, N)
    if r == N:
        return _interpolant(N, "minimax")
    ref = _initial_reference(r, N, _lp_minimax(r, N))
    if len(ref) != r + 1:
        ref = list(range(1, r + 2))
    alpha = _remez(r, N, ref)
    values = [Fraction(0)] + [eval_binomial(alpha, x) for x in range(1, N + 1)]
    poly = _from_values(r, N, values, "minimax")
    cheb = build_chebyshev(r, N)
    if cheb.flatness < poly.flatness:
        return FlatPolynomial(r, N, cheb.values, cheb.alpha, cheb.flatness, "minimax")
    return poly


def build(r: int, N: int, method: str = "minimax") -> FlatPolynomial:
    if method == "minimax":
        return build_minimax(r, N)
    if method == "chebyshev":
        return build_chebyshev(r, N)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def smallest_degree(N: int, target: float, method: str = "minimax") -> FlatPolynomial:
    """Lowest-degree flat polynomial on 1..N with flatness <= target."""
    for r in range(1, N + 1):
        p = build(r, N, method)
        if p.flatness <= target:
            return p
    return build(N, N, method)
