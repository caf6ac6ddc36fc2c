"""Hard instances on 2k bits: yes functions close to a k-junta and no
functions far from every k-junta, built from action coordinates A and
control coordinates C.

The value at x depends on the control pattern (b1(x_C), b2(x_C)) and on
the weight band of x_A: high |x_A| >= k/2, middle k/2 - D < |x_A| < k/2,
low |x_A| <= k/2 - D.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, exp, log, sqrt

import numpy as np

from .hypercube import (
    FunctionSource,
    PackedTruthTable,
    Point,
    QueryCounter,
    gather_bits,
    mask_to_coords,
    popcount,
    popcount_array,
)
from .oracle import exact_dist_to_juntas
from .rng import as_generator, stream

HIGH, MIDDLE, LOW = 0, 1, 2

# sign of h on the (high, middle, low) bands
H_TABLES = {
    ("+", "-"): (-1, -1, -1),
    ("+", "+"): (+1, -1, +1),
    ("-", "-"): (-1, -1, +1),
    ("-", "+"): (+1, -1, -1),
}

# (b1, b2) -> (variant, outer sign)
YES_CASES = {
    (-1, +1): (("+", "-"), +1),
    (-1, -1): (("+", "-"), -1),
    (+1, +1): (("+", "+"), +1),
    (+1, -1): (("+", "+"), -1),
}
NO_CASES = {
    (-1, +1): (("-", "+"), +1),
    (-1, -1): (("-", "+"), -1),
    (+1, +1): (("-", "-"), +1),
    (+1, -1): (("-", "-"), -1),
}


def _variant_key(variant) -> tuple[str, str]:
    if isinstance(variant, str):
        variant = tuple(variant.strip("()").replace(" ", "").split(","))
    key = tuple(variant)
    if key not in H_TABLES:
        raise ValueError(f"unknown h variant {variant!r}")
    return key


def band(weight, k: int, delta: int):
    """Band index for an action weight (vectorised); high takes precedence."""
    w = np.asarray(weight)
    out = np.where(2 * w >= k, HIGH, np.where(2 * w <= k - 2 * delta, LOW, MIDDLE))
    return out if out.ndim else int(out)


def h_eval(variant, k: int, delta: int, xA: Point | int) -> int:
    """h^variant at an action point (or directly at its weight)."""
    if not 0 <= 2 * delta <= k:
        raise ValueError(f"band parameter {delta} outside [0, k/2]")
    w = xA.weight if isinstance(xA, Point) else int(xA)
    return H_TABLES[_variant_key(variant)][band(w, k, delta)]


class InstanceSource(FunctionSource):
    """A sampled yes or no instance on n = 2k bits."""

    def __init__(self, k: int, A: int, b1: np.ndarray, b2: np.ndarray, delta: int, variant: str,
                 counter: QueryCounter | None = None):
        super().__init__(2 * k, counter)
        if popcount(A) != k or A >> (2 * k):
            raise ValueError("action set must have exactly k of the 2k coordinates")
        if not 0 <= 2 * delta <= k:
            raise ValueError(f"band parameter {delta} outside [0, k/2]")
        if variant not in ("yes", "no"):
            raise ValueError("variant must be 'yes' or 'no'")
        self.k, self.A, self.delta, self.variant = k, A, delta, variant
        self.C = ((1 << (2 * k)) - 1) & ~A
        self.b1 = np.asarray(b1, dtype=np.int8)
        self.b2 = np.asarray(b2, dtype=np.int8)
        cases = YES_CASES if variant == "yes" else NO_CASES
        # lookup[b1 index, b2 index, band] -> sign
        self._lut = np.zeros((2, 2, 3), dtype=np.int8)
        for (v1, v2), (hv, sign) in cases.items():
            self._lut[(v1 + 1) // 2, (v2 + 1) // 2] = sign * np.array(H_TABLES[hv], dtype=np.int8)

    def _eval(self, masks):
        keys = gather_bits(masks, mask_to_coords(self.C))
        bands = band(popcount_array(masks & self.A), self.k, self.delta)
        return self._lut[(self.b1[keys] + 1) // 2, (self.b2[keys] + 1) // 2, bands]

    def tabulate(self) -> PackedTruthTable:
        return PackedTruthTable.from_values(self._eval(np.arange(1 << self.n, dtype=np.int64)))

    def describe(self) -> dict:
        return {
            "k": self.k,
            "variant": self.variant,
            "delta": self.delta,
            "A": mask_to_coords(self.A),
            "C": mask_to_coords(self.C),
        }


def sample_instance(k: int, delta: int, variant: str, rand=None) -> InstanceSource:
    """Uniform action set A and uniform control tables b1, b2."""
    rng = as_generator(rand)
    coords = np.sort(rng.permutation(2 * k)[:k])
    A = sum(1 << int(c) for c in coords)
    b1 = rng.choice(np.array([-1, 1], dtype=np.int8), 1 << k)
    b2 = rng.choice(np.array([-1, 1], dtype=np.int8), 1 << k)
    return InstanceSource(k, A, b1, b2, delta, variant)


def binomial_cdf(n: int, t: int, p: Fraction = Fraction(1, 2)) -> Fraction:
    """Exact Pr[Bin(n, p) <= t]."""
    p = Fraction(p)
    return sum((comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(0, min(t, n) + 1)), Fraction(0))


def low_tail(k: int, delta: int) -> Fraction:
    """Pr_{x in {+-1}^k}[|x| <= k/2 - delta]."""
    t = (k - 2 * delta) // 2
    return binomial_cdf(k, t) if t >= 0 else Fraction(0)


def delta_from_eps(k: int, eps: float) -> tuple[int, Fraction]:
    """Largest band parameter whose low tail still has mass >= eps, with that tail."""
    if not Fraction(1, 1 << k) <= Fraction(eps) <= Fraction(1, 2):
        raise ValueError(f"target {eps} outside [2^-k, 1/2]")
    best = 0
    for delta in range(0, k // 2 + 1):
        if low_tail(k, delta) >= Fraction(eps):
            best = delta
    return best, low_tail(k, best)


def kl_bernoulli(a: float, p: float) -> float:
    out = 0.0
    if a > 0:
        out += a * log(a / p)
    if a < 1:
        out += (1 - a) * log((1 - a) / (1 - p))
    return out


def kl_tail_lower_bound(n: int, p: float, k: int) -> float:
    """(1/sqrt(2n)) exp(-n KL(k/n || p)), a lower bound on Pr[Bin(n, p) <= k]."""
    if not 0 < k < n:
        raise ValueError("need 0 < k/n < 1")
    if not 0 < p < 1:
        raise ValueError("need 0 < p < 1")
    return exp(-n * kl_bernoulli(k / n, p)) / sqrt(2 * n)


def control_collision_probability(d: int, k: int) -> Fraction:
    """Pr over uniform |A| = k of 2k coords that all d differing coords lie in A."""
    if not 0 <= d <= 2 * k:
        raise ValueError("distance outside [0, 2k]")
    if d > k:
        return Fraction(0)
    return Fraction(comb(2 * k - d, k - d), comb(2 * k, k))


def random_action_sets(k: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """``trials`` uniform k-subsets of 2k coordinates as masks."""
    order = np.argsort(rng.random((trials, 2 * k)), axis=1)[:, :k]
    return np.bitwise_or.reduce(np.int64(1) << order.astype(np.int64), axis=1)


def collision_rate(x: int, y: int, k: int, trials: int, rand=None) -> float:
    """Monte Carlo Pr[x_C = y_C] over random action sets."""
    rng = as_generator(rand)
    A = random_action_sets(k, trials, rng)
    diff = int(x) ^ int(y)
    return float(np.mean((diff & ~A) == 0))


def bad_event_probability(queries, k: int, delta: int, trials: int, rand=None) -> float:
    """Monte Carlo probability over A that two queries share control values
    while one is in the high band and the other in the low band."""
    masks = np.array([q.bits if isinstance(q, Point) else int(q) for q in queries], dtype=np.int64)
    if any(isinstance(q, Point) and q.n != 2 * k for q in queries):
        raise ValueError("queries must live on 2k coordinates")
    if len(masks) < 2:
        return 0.0
    rng = as_generator(rand)
    A = random_action_sets(k, trials, rng)
    full = (1 << (2 * k)) - 1
    hits = 0
    for a in A:
        w = popcount_array(masks & a)
        keys = masks & (full & ~int(a))
        high = 2 * w >= k
        low = 2 * w <= k - 2 * delta
        hk = set(keys[high].tolist())
        if hk and any(key in hk for key in keys[low].tolist()):
            hits += 1
    return hits / trials


def run_experiment(k: int, eps: float, instances: int, seed: int) -> dict:
    """Exact distances of sampled yes and no instances to k-juntas."""
    delta, tail = delta_from_eps(k, eps)
    out = {"k": k, "eps_target": eps, "delta": delta, "eps_achieved": float(tail),
           "eps_achieved_exact": str(tail), "instances": instances}
    for variant in ("yes", "no"):
        dists = []
        for i in range(instances):
            inst = sample_instance(k, delta, variant, stream(seed, "lowerbound", variant, i))
            d, _ = exact_dist_to_juntas(inst.tabulate(), k)
            dists.append(float(d))
        out[variant] = {"distances": dists, "mean": float(np.mean(dists)),
                        "min": float(np.min(dists)), "max": float(np.max(dists))}
    return out
