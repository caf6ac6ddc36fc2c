"""Non-adaptive junta distance testers.

Every tester first builds a query plan (the full list of points it will
query, derived from its parameters and seed alone), evaluates the function
on that plan, and only then assembles its statistics.  This keeps the
testers non-adaptive by construction; ``replay`` re-runs the assembly from
recorded answers.

Unspecified asymptotic constants are replaced by explicit desk-scale
calibrations (Hoeffding plus a union bound), and every resolved value is
recorded in the report.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import ceil, comb, log, sqrt
from typing import Callable, Iterable

import mpmath
import numpy as np

from .estimators import (
    DEFAULT_KAPPA,
    EstarConfig,
    ball_derivatives,
    estar,
    estar_coefficients,
    spectral_noise_eval,
)
from .flatpoly import FlatPolynomial, build_minimax, smallest_degree
from .fourier import noise_sample_masks, wht
from .hypercube import (
    BudgetError,
    DimensionError,
    FunctionSource,
    Point,
    ball_masks,
    ball_size,
    gather_bits,
    k_subsets,
    mask_to_coords,
    popcount_array,
    scatter_bits,
)
from .rng import random_masks, stream

CENTER_CHUNK = 256
SAMPLE_CHUNK = 1 << 20
MAX_ORACLE_COORDS = 20
RHO_FLOOR = 0.3
DEFAULT_DELTA = 1e-6


def _seed_of(rand) -> int:
    if isinstance(rand, np.random.Generator):
        return int(rand.integers(0, 1 << 63))
    return 0 if rand is None else int(rand)


def _zeta(a: np.ndarray) -> np.ndarray:
    """Subset sums along the last axis: out[U] = sum_{P subset U} a[P]."""
    a = np.array(a, copy=True)
    size = a.shape[-1]
    lead = a.shape[:-1]
    h = 1
    while h < size:
        v = a.reshape(*lead, size // (2 * h), 2, h)
        v[..., 1, :] += v[..., 0, :]
        h *= 2
    return a


def _map(fn: Callable, items: Iterable, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# reports and coordinate oracles


@dataclass(frozen=True)
class CoordinateOracleSet:
    """Ideal coordinate oracles: perfect access to the listed coordinates."""

    coords: tuple[int, ...]
    n: int
    mode: str = "ideal"

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(set(coords)) != len(coords):
            raise DimensionError("oracle coordinates must be distinct")
        if any(not 0 <= c < self.n for c in coords):
            raise DimensionError(f"oracle coordinate outside [0, {self.n})")
        if len(coords) > MAX_ORACLE_COORDS:
            raise BudgetError(f"at most {MAX_ORACLE_COORDS} oracle coordinates supported")
        if self.mode != "ideal":
            raise ValueError("only ideal coordinate oracles are available")

    @classmethod
    def full(cls, n: int) -> "CoordinateOracleSet":
        return cls(tuple(range(n)), n)

    def __len__(self) -> int:
        return len(self.coords)

    def pattern(self, masks: np.ndarray) -> np.ndarray:
        """F(x) as a compressed |F|-bit mask."""
        return gather_bits(masks, self.coords)

    def expand(self, compressed: int) -> int:
        return int(scatter_bits(np.array([compressed]), self.coords)[0])

    def subsets(self, k: int) -> list[tuple[int, int]]:
        """(compressed, original) masks of all k-subsets, ascending by original mask."""
        if not 0 <= k <= len(self.coords):
            raise DimensionError(f"subset size {k} outside [0, {len(self.coords)}]")
        pairs = [(s, self.expand(s)) for s in k_subsets(len(self.coords), k)]
        return sorted(pairs, key=lambda p: p[1])


@dataclass
class DistanceReport:
    estimate: float
    best_set: list[int]
    queries: int
    per_set: dict[int, float] | None = None
    predicted_queries: int | None = None
    params: dict = field(default_factory=dict)

    @staticmethod
    def from_statistics(per_set: dict[int, float], queries: int, **kw) -> "DistanceReport":
        best_mask, best_val = None, None
        for S in sorted(per_set):
            if best_val is None or per_set[S] > best_val:
                best_mask, best_val = S, per_set[S]
        return DistanceReport(_distance_from_stat(best_val), mask_to_coords(best_mask), queries, per_set, **kw)

    def recompute(self) -> float:
        return _distance_from_stat(max(self.per_set.values()))

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "best_set": self.best_set,
            "queries": self.queries,
            "predicted_queries": self.predicted_queries,
            "params": self.params,
            "per_set": None
            if self.per_set is None
            else {",".join(map(str, mask_to_coords(S))): v for S, v in sorted(self.per_set.items())},
        }


def _distance_from_stat(d: float) -> float:
    return float(min(0.5, max(0.0, (1.0 - d) / 2.0)))


# ---------------------------------------------------------------------------
# warmup tester on 2k bits


@dataclass(frozen=True)
class WarmupParams:
    k: int
    eps: float
    m: int
    r: int
    flat: FlatPolynomial
    kappa: float
    value_range: float

    @property
    def ball(self) -> int:
        return ball_size(2 * self.k, self.r)

    @property
    def predicted_queries(self) -> int:
        return self.m * self.ball

    def to_dict(self) -> dict:
        return {
            "mode": "warmup",
            "k": self.k,
            "n": 2 * self.k,
            "eps": self.eps,
            "m": self.m,
            "r": self.r,
            "flat_N": self.flat.N,
            "flatness": float(self.flat.flatness),
            "kappa": self.kappa,
            "value_range": self.value_range,
            "ball_size": self.ball,
        }


def calibrate_warmup(k: int, eps: float, m: int | None = None, r: int | None = None,
                     kappa: float = DEFAULT_KAPPA) -> WarmupParams:
    """Flatness eps/8 on levels 1..k; m from Hoeffding for eps/4 accuracy on
    the distance, union bound over C(2k, k) sets at failure 1/3."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if r is None:
        flat = smallest_degree(k, eps / 8)
        r = flat.r
    else:
        if not 1 <= r <= k:
            raise ValueError(f"radius must lie in [1, k], got {r}")
        flat = build_minimax(r, k)
    value_range = min(kappa, 1.0 + float(flat.flatness) * 2 ** (k / 2))
    if m is None:
        t = eps / 2
        m = ceil(value_range**2 * log(6 * comb(2 * k, k)) / (2 * t * t))
    return WarmupParams(k, eps, int(m), r, flat, kappa, value_range)


@dataclass(frozen=True)
class WarmupPlan:
    params: WarmupParams
    centers: np.ndarray

    def chunk_bounds(self) -> list[tuple[int, int]]:
        return [(lo, min(lo + CENTER_CHUNK, len(self.centers))) for lo in range(0, len(self.centers), CENTER_CHUNK)]

    def chunk_queries(self, lo: int, hi: int) -> np.ndarray:
        B = ball_masks(2 * self.params.k, self.params.r)
        return (self.centers[lo:hi, None] ^ B[None, :]).ravel()

    def all_queries(self) -> np.ndarray:
        return np.concatenate([self.chunk_queries(lo, hi) for lo, hi in self.chunk_bounds()])


def plan_warmup(params: WarmupParams, seed: int) -> WarmupPlan:
    rng = stream(seed, "warmup", "centers")
    return WarmupPlan(params, random_masks(rng, 2 * params.k, params.m))


def _warmup_chunk_sums(params: WarmupParams, values: np.ndarray) -> np.ndarray:
    """sum over the chunk's centers of |E_J^x| for every J (indexed by mask)."""
    n = 2 * params.k
    B = ball_masks(n, params.r)
    vals = values.reshape(-1, len(B))
    D = ball_derivatives(vals, n, params.r)
    weighted = np.zeros((len(vals), 1 << n))
    weighted[:, B[1:]] = D[:, 1:] * _level_alpha_for(params)[1:]
    Z = _zeta(weighted)
    full = (1 << n) - 1
    J = np.arange(1 << n)
    E = D[:, :1] - Z[:, full ^ J]
    np.clip(E, -params.kappa, params.kappa, out=E)
    return np.abs(E).sum(axis=0)


def _level_alpha_for(params: WarmupParams) -> np.ndarray:
    alpha = np.concatenate([[0.0], params.flat.alpha_float()])
    return alpha[popcount_array(ball_masks(2 * params.k, params.r))]


def _warmup_assemble(plan: WarmupPlan, sums: np.ndarray, queries: int) -> DistanceReport:
    k = plan.params.k
    stats = sums / plan.params.m
    per_set = {int(J): float(stats[J]) for J in k_subsets(2 * k, k)}
    return DistanceReport.from_statistics(
        per_set, queries, predicted_queries=plan.params.predicted_queries, params=plan.params.to_dict()
    )


def warmup_ball_tester(f: FunctionSource, k: int, eps: float, m: int | None = None, r: int | None = None,
                       rand=None, threads: int = 1, kappa: float = DEFAULT_KAPPA) -> DistanceReport:
    """Estimate dist(f, k-juntas) for f on 2k bits from m Hamming balls.

    For each center x and each |J| = k, E_J^x is the ball estimator of the
    restriction fixing J to x_J, evaluated on B(x restricted to the other
    coordinates, r).  All sets share the same balls.  Output is
    (1 - max_J mean_x |E_J^x|) / 2.
    """
    if f.n != 2 * k:
        raise DimensionError(f"warmup tester needs n = 2k = {2 * k}, got {f.n}")
    params = calibrate_warmup(k, eps, m, r, kappa)
    plan = plan_warmup(params, _seed_of(rand))
    start = f.queries

    def work(bounds):
        q = plan.chunk_queries(*bounds)
        return _warmup_chunk_sums(params, f.evaluate(q))

    sums = np.sum(_map(work, plan.chunk_bounds(), threads), axis=0)
    return _warmup_assemble(plan, sums, f.queries - start)


def replay_warmup(plan: WarmupPlan, answers: np.ndarray) -> DistanceReport:
    """Assemble the warmup report from answers to ``plan.all_queries()``."""
    sums = np.zeros(1 << (2 * plan.params.k))
    pos = 0
    for lo, hi in plan.chunk_bounds():
        size = (hi - lo) * plan.params.ball
        sums += _warmup_chunk_sums(plan.params, answers[pos : pos + size])
        pos += size
    return _warmup_assemble(plan, sums, len(answers))


# ---------------------------------------------------------------------------
# hold-out noise evaluations


def holdout_match_probability(rho: float, k: int) -> float:
    """Pr[y_S = x_S] for y ~ N_rho(x) and |S| = k."""
    return ((1 + rho) / 2) ** k


def holdout_sample_size(F_size: int, k: int, rho: float, tau: float, eta: float, rule: str = "hoeffding") -> int:
    """Samples so that all C(|F|, k) estimates are tau-accurate w.p. 1 - eta.

    ``hoeffding``: each summand lies in [-1/q, 1/q] with q the match
    probability, so N = 2 ln(2 C / eta) / (tau q)^2.
    ``asymptotic``: |F|^3 k^3 ln(1/eta) / (tau^2 rho^(2k)) with unit constant.
    """
    if not 0 < rho < 1:
        raise ValueError("noise rate must lie in (0, 1)")
    if not 0 < tau <= 1 or not 0 < eta < 1:
        raise ValueError("need tau in (0, 1] and eta in (0, 1)")
    if rule == "hoeffding":
        q = holdout_match_probability(rho, k)
        return ceil(2 * log(2 * comb(F_size, k) / eta) / (tau * q) ** 2)
    if rule == "asymptotic":
        return ceil(F_size**3 * k**3 * log(1 / eta) / (tau**2 * rho ** (2 * k)))
    raise ValueError(f"unknown sample-size rule {rule!r}")


def _holdout_sums(F: CoordinateOracleSet, k: int, x: int, ys: np.ndarray, vals: np.ndarray,
                  weights: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per k-subset S of F: (sum of weighted f over samples matching x on S, match count)."""
    size = 1 << len(F)
    P = F.pattern(ys ^ x)
    wv = vals.astype(np.float64) if weights is None else vals * weights
    G = _zeta(np.bincount(P, weights=wv, minlength=size))
    M = _zeta(np.bincount(P, minlength=size).astype(np.int64))
    full = size - 1
    subs = F.subsets(k)
    comp = np.array([full ^ s for s, _ in subs], dtype=np.int64)
    return G[comp], M[comp]


def holdout_noise_evaluations(f: FunctionSource, F: CoordinateOracleSet, x: Point | int, k: int, rho: float,
                              tau: float, eta: float, rand=None, N: int | None = None,
                              normaliser: str = "holdout", rule: str = "hoeffding") -> dict[int, float]:
    """Estimate T_rho^S f(x) for every k-subset S of F from one batch of N samples.

    Each sample y ~ N_rho(x) is queried once; the estimate for S averages
    f(y) over samples with y_S = x_S, normalised by N Pr[y_S = x_S].
    ``normaliser="rho-power"`` divides by N rho^k instead.
    """
    bits = x.bits if isinstance(x, Point) else int(x)
    if F.n != f.n:
        raise DimensionError("oracle set and function dimensions differ")
    if not k <= len(F):
        raise DimensionError("subset size exceeds oracle count")
    if N is None:
        N = holdout_sample_size(len(F), k, rho, tau, eta, rule)
    if normaliser == "holdout":
        q = holdout_match_probability(rho, k)
    elif normaliser == "rho-power":
        q = rho**k
    else:
        raise ValueError(f"unknown normaliser {normaliser!r}")
    if q * N < 1:
        raise BudgetError(f"expected matches per set N q = {q * N:.3g} < 1; need N >= {ceil(1 / q)}")
    rng = stream(_seed_of(rand), "holdout")
    ys = noise_sample_masks(bits, f.n, rho, rng, N)
    vals = f.evaluate(ys)
    G, _ = _holdout_sums(F, k, bits, ys, vals)
    return {orig: float(g / (N * q)) for (_, orig), g in zip(F.subsets(k), G)}


# ---------------------------------------------------------------------------
# estimate absolute mean and the full pipeline


@dataclass(frozen=True)
class FullParams:
    n: int
    k: int
    F_size: int
    eps: float
    tau: float
    r: int
    flat: FlatPolynomial
    rho: float
    delta: str
    N: int
    m: int
    mode: str
    second_moment: float
    value_range: float

    @property
    def d(self) -> int:
        return self.n - self.k

    @property
    def match_probability(self) -> float:
        return holdout_match_probability(self.rho, self.k)

    @property
    def estar_config(self) -> EstarConfig:
        return EstarConfig(self.r, self.rho, self.delta, self.flat)

    @property
    def grid_size(self) -> int:
        return len(estar_coefficients(self.estar_config).rates)

    @property
    def samples_per_center(self) -> int:
        if self.mode == "pooled":
            return self.N
        if self.mode == "independent":
            return self.N * self.grid_size
        return 0

    @property
    def predicted_queries(self) -> int:
        return self.m * self.samples_per_center

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n": self.n,
            "k": self.k,
            "oracles": self.F_size,
            "eps": self.eps,
            "tau": self.tau,
            "r": self.r,
            "flat_N": self.flat.N,
            "flatness": float(self.flat.flatness),
            "rho": self.rho,
            "delta": self.delta,
            "N": self.N,
            "m": self.m,
            "grid_size": self.grid_size,
            "match_probability": self.match_probability,
            "weight_second_moment": self.second_moment,
            "value_range": self.value_range,
        }


def asymptotic_delta(tau: float, r: int, k: int) -> str:
    """tau^(12/r) (r k)^-1000 as a decimal string (far below float range)."""
    with mpmath.workdps(30):
        return mpmath.nstr(mpmath.mpf(tau) ** (mpmath.mpf(12) / r) * mpmath.mpf(r * k) ** -1000, 20)


def asymptotic_rho(tau: float, k: int) -> float:
    return 1.0 - sqrt(log(3 / tau) / k)


def pooled_weights(cfg: EstarConfig, d: int) -> np.ndarray:
    return estar_coefficients(cfg).pooled_weights(cfg.rho, d)


def weight_second_moment(cfg: EstarConfig, d: int) -> float:
    """E[w_D^2] for D ~ Bin(d, (1 - rho)/2), the per-sample variance proxy."""
    w = pooled_weights(cfg, d)
    flip = (1 - cfg.rho) / 2
    pD = np.array([comb(d, D) * (1 - flip) ** (d - D) * flip**D for D in range(d + 1)])
    return float(np.dot(pD, w * w))


def calibrate_full(n: int, F_size: int, k: int, eps: float, m: int | None = None, N: int | None = None,
                   r: int | None = None, rho: float | None = None, delta=None, delta_rule: str = "fixed",
                   rho_floor: float = RHO_FLOOR, mode: str = "pooled") -> FullParams:
    """Desk-scale parameters for the full tester.

    tau = eps/4.  The flat polynomial covers levels 1..n-k at flatness tau/2.
    rho = max(rho_floor, 1 - sqrt(ln(3/tau)/k)).  N makes the per-center
    standard deviation of each E* estimate at most eps/2; m comes from
    Hoeffding for eps/4 accuracy on the distance with a union bound over
    C(|F|, k) sets at failure 1/3.
    """
    if mode not in ("pooled", "independent", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if not 0 <= k <= F_size <= n:
        raise DimensionError("need 0 <= k <= |F| <= n")
    tau = eps / 4
    d = n - k
    if r is None:
        flat = smallest_degree(d, tau / 2)
        r = flat.r
    else:
        flat = build_minimax(r, max(r, d))
    if rho is None:
        rho = max(rho_floor, asymptotic_rho(tau, k)) if k > 0 else rho_floor
    if delta is None:
        delta = asymptotic_delta(tau, r, k) if delta_rule == "asymptotic" else DEFAULT_DELTA
    delta = str(delta)
    cfg = EstarConfig(r, rho, delta, flat)
    ew2 = weight_second_moment(cfg, d)
    q = holdout_match_probability(rho, k)
    if N is None:
        N = ceil(ew2 / (q * (eps / 2) ** 2))
    value_range = 1.0 + rho * float(flat.flatness) * 2 ** (d / 2)
    if m is None:
        t = eps / 2
        m = ceil(value_range**2 * log(6 * comb(F_size, k)) / (2 * t * t))
    return FullParams(n, k, F_size, eps, tau, r, flat, float(rho), delta, int(N), int(m), mode, ew2, value_range)


@dataclass(frozen=True)
class FullPlan:
    params: FullParams
    F: CoordinateOracleSet
    centers: np.ndarray
    seed: int

    @property
    def centers_per_chunk(self) -> int:
        per = max(1, self.params.samples_per_center)
        return max(1, min(CENTER_CHUNK, SAMPLE_CHUNK // per))

    def chunk_bounds(self) -> list[tuple[int, int]]:
        c = self.centers_per_chunk
        return [(lo, min(lo + c, len(self.centers))) for lo in range(0, len(self.centers), c)]

    def chunk_queries(self, lo: int, hi: int) -> np.ndarray:
        """Samples for centers lo..hi-1, center-major; in independent mode
        each center's block is ordered by rate."""
        p = self.params
        if p.mode == "exact":
            return np.zeros(0, dtype=np.int64)
        rng = stream(self.seed, "full", "noise", lo)
        if p.mode == "pooled":
            return _noise_block(self.centers[lo:hi], p.n, [p.rho], p.N, rng)
        rates = estar_coefficients(p.estar_config).rates_float()
        return _noise_block(self.centers[lo:hi], p.n, list(rates), p.N, rng)

    def all_queries(self) -> np.ndarray:
        return np.concatenate([self.chunk_queries(lo, hi) for lo, hi in self.chunk_bounds()])


def _noise_block(centers: np.ndarray, n: int, rates: list[float], N: int, rng) -> np.ndarray:
    """Shape (len(centers) * len(rates) * N,) samples, center-major then rate."""
    c, R = len(centers), len(rates)
    base = np.repeat(centers, R * N)
    flip_p = np.repeat(np.tile((1 - np.asarray(rates)) / 2, c), N)
    flips = np.zeros(len(base), dtype=np.int64)
    for i in range(n):
        flips |= (rng.random(len(base)) < flip_p).astype(np.int64) << i
    return base ^ flips


def plan_full(params: FullParams, F: CoordinateOracleSet, seed: int) -> FullPlan:
    rng = stream(seed, "full", "centers")
    return FullPlan(params, F, random_masks(rng, params.n, params.m), seed)


def _pooled_chunk(plan: FullPlan, lo: int, hi: int, ys: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """nu_S for centers lo..hi-1 (rows) and every S (columns)."""
    p = plan.params
    F = plan.F
    w = pooled_weights(p.estar_config, p.d)
    c = hi - lo
    size = 1 << len(F)
    x = np.repeat(plan.centers[lo:hi], p.N)
    diff = ys ^ x
    P = F.pattern(diff)
    wv = vals * w[np.minimum(popcount_array(diff), p.d)]
    keys = np.repeat(np.arange(c, dtype=np.int64), p.N) * size + P
    G = _zeta(np.bincount(keys, weights=wv, minlength=c * size).reshape(c, size))
    M = _zeta(np.bincount(keys, minlength=c * size).reshape(c, size).astype(np.float64))
    comp = np.array([(size - 1) ^ s for s, _ in F.subsets(p.k)], dtype=np.int64)
    Gs, Ms = G[:, comp], M[:, comp]
    est = np.divide(Gs, Ms, out=np.zeros_like(Gs), where=Ms > 0)
    return np.abs(est)


def _independent_chunk(plan: FullPlan, lo: int, hi: int, ys: np.ndarray, vals: np.ndarray) -> np.ndarray:
    p = plan.params
    cfg = p.estar_config
    rates = estar_coefficients(cfg).rates_float()
    R, N = len(rates), p.N
    subs = plan.F.subsets(p.k)
    out = np.empty((hi - lo, len(subs)))
    for ci in range(hi - lo):
        x = int(plan.centers[lo + ci])
        per_rate = []
        for ri, s in enumerate(rates):
            sl = slice((ci * R + ri) * N, (ci * R + ri + 1) * N)
            G, _ = _holdout_sums(plan.F, p.k, x, ys[sl], vals[sl])
            per_rate.append(G / (N * holdout_match_probability(s, p.k)))
        per_rate = np.array(per_rate)
        for si in range(len(subs)):
            table = {float(s): per_rate[ri, si] for ri, s in enumerate(rates)}
            out[ci, si] = abs(estar(None, x, cfg, table))
    return out


def exact_abs_mean_values(f: FunctionSource, F: CoordinateOracleSet, x: int, k: int, cfg: EstarConfig) -> np.ndarray:
    """|E*| of each restriction f_{S -> x_S} at x, from exact spectral noise."""
    table = f.tabulate().values()
    idx = np.arange(1 << f.n, dtype=np.int64)
    dps = estar_coefficients(cfg).dps
    out = []
    for _, S in F.subsets(k):
        comp = mask_to_coords(((1 << f.n) - 1) & ~S)
        rest = table[(x & S) | scatter_bits(idx[: 1 << len(comp)], comp)]
        x_rest = int(gather_bits(np.array([x]), comp)[0])
        noise = spectral_noise_eval(wht(rest), x_rest, dps)
        out.append(abs(estar(None, x_rest, cfg, noise)))
    return np.array(out)


def _exact_chunk(plan: FullPlan, f: FunctionSource, lo: int, hi: int) -> np.ndarray:
    p = plan.params
    return np.array([exact_abs_mean_values(f, plan.F, int(x), p.k, p.estar_config) for x in plan.centers[lo:hi]])


def _chunk_nu(plan: FullPlan, f: FunctionSource | None, lo: int, hi: int, ys, vals) -> np.ndarray:
    mode = plan.params.mode
    if mode == "pooled":
        return _pooled_chunk(plan, lo, hi, ys, vals)
    if mode == "independent":
        return _independent_chunk(plan, lo, hi, ys, vals)
    return _exact_chunk(plan, f, lo, hi)


def estimate_absolute_mean(f: FunctionSource, F: CoordinateOracleSet, x: Point | int, k: int, tau: float,
                           rand=None, params: FullParams | None = None, mode: str = "pooled",
                           **overrides) -> dict[int, float]:
    """nu_S(x), an estimate of |E*| of f restricted by S -> x_S, for every k-subset S of F.

    ``pooled`` draws N samples at the base rate and reweights each matching
    sample by its distance from x into the E* combination of rates.
    ``independent`` runs one hold-out batch per rate of the grid.
    ``exact`` uses exact noise values (no queries).
    """
    bits = x.bits if isinstance(x, Point) else int(x)
    if params is None:
        params = calibrate_full(f.n, len(F), k, 4 * tau, m=1, mode=mode, **overrides)
    plan = FullPlan(params, F, np.array([bits], dtype=np.int64), _seed_of(rand))
    ys = plan.chunk_queries(0, 1)
    vals = f.evaluate(ys) if len(ys) else ys
    nu = _chunk_nu(plan, f, 0, 1, ys, vals)[0]
    return {orig: float(v) for (_, orig), v in zip(F.subsets(k), nu)}


def k_junta_distance(f: FunctionSource, F: CoordinateOracleSet | None, k: int, eps: float, m: int | None = None,
                     rand=None, threads: int = 1, mode: str = "pooled", **overrides) -> DistanceReport:
    """Estimate min over k-subsets S of F of dist(f, juntas on S).

    D_S averages nu_S over m uniform centers; output (1 - max_S D_S)/2.
    """
    if F is None:
        F = CoordinateOracleSet.full(f.n)
    if F.n != f.n:
        raise DimensionError("oracle set and function dimensions differ")
    params = calibrate_full(f.n, len(F), k, eps, m=m, mode=mode, **overrides)
    plan = plan_full(params, F, _seed_of(rand))
    start = f.queries

    def work(bounds):
        lo, hi = bounds
        ys = plan.chunk_queries(lo, hi)
        vals = f.evaluate(ys) if len(ys) else ys
        return _chunk_nu(plan, f, lo, hi, ys, vals).sum(axis=0)

    sums = np.sum(_map(work, plan.chunk_bounds(), threads), axis=0)
    return _full_assemble(plan, sums, f.queries - start)


def _full_assemble(plan: FullPlan, sums: np.ndarray, queries: int) -> DistanceReport:
    stats = sums / plan.params.m
    per_set = {orig: float(v) for (_, orig), v in zip(plan.F.subsets(plan.params.k), stats)}
    params = plan.params.to_dict()
    params["oracle_coords"] = list(plan.F.coords)
    return DistanceReport.from_statistics(per_set, queries, predicted_queries=plan.params.predicted_queries,
                                          params=params)


def replay_full(plan: FullPlan, answers: np.ndarray) -> DistanceReport:
    """Assemble the full-tester report from answers to ``plan.all_queries()``."""
    if plan.params.mode == "exact":
        raise ValueError("exact mode issues no queries")
    sums = None
    pos = 0
    for lo, hi in plan.chunk_bounds():
        ys = plan.chunk_queries(lo, hi)
        part = _chunk_nu(plan, None, lo, hi, ys, answers[pos : pos + len(ys)]).sum(axis=0)
        sums = part if sums is None else sums + part
        pos += len(ys)
    return _full_assemble(plan, sums, len(answers))
