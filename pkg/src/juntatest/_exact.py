"""Exact rational linear algebra on small dense systems."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence


class SingularMatrixError(ValueError):
    pass


def _integer_rows(A: Sequence[Sequence], b: Sequence) -> list[list[int]]:
    rows = []
    for row, rhs in zip(A, b):
        entries = [Fraction(v) for v in row] + [Fraction(rhs)]
        scale = lcm(*(e.denominator for e in entries))
        rows.append([int(e * scale) for e in entries])
    return rows


def solve(A: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve A x = b exactly with fraction-free (Bareiss) elimination.

    Entries may be ints or Fractions; each row is scaled to integers first,
    so all elimination steps stay in exact integer arithmetic.
    """
    n = len(A)
    if n == 0:
        return []
    if any(len(row) != n for row in A) or len(b) != n:
        raise ValueError("system must be square")
    M = _integer_rows(A, b)
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    break
            else:
                raise SingularMatrixError("matrix is singular")
        pivot = M[k][k]
        for i in range(k + 1, n):
            mi = M[i]
            mik = mi[k]
            for j in range(k + 1, n + 1):
                mi[j] = (pivot * mi[j] - mik * M[k][j]) // prev
            mi[k] = 0
        prev = pivot
    if M[n - 1][n - 1] == 0:
        raise SingularMatrixError("matrix is singular")
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(M[i][n])
        for j in range(i + 1, n):
            acc -= M[i][j] * x[j]
        x[i] = acc / M[i][i]
    return x


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list[Fraction]]:
    return [[sum((Fraction(a) * b for a, b in zip(row, col)), Fraction(0)) for col in zip(*B)] for row in A]


def identity(n: int) -> list[list[Fraction]]:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
