"""Acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line to ``conftest.ACCEPTANCE_LINES``;
the lines are printed in the terminal summary.  Run directly with
``python3 tests/test_acceptance.py`` for the same report.
"""

import json
import sys
import time
from fractions import Fraction
from itertools import combinations
from math import factorial, sqrt
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import conftest  # noqa: E402
from conftest import dictator, majority, parity, random_junta, random_table  # noqa: E402
from juntatest.cli import main as cli_main  # noqa: E402
from juntatest.estimators import LocalEstimatorConfig, local_mean_estimate_all  # noqa: E402
from juntatest.flatpoly import build_chebyshev, build_minimax  # noqa: E402
from juntatest.fourier import discrete_derivative, inverse_wht, noise_derivative_all, wht  # noqa: E402
from juntatest.hypercube import PackedTruthTable, TableSource  # noqa: E402
from juntatest.lowerbound import (  # noqa: E402
    collision_rate,
    control_collision_probability,
    delta_from_eps,
    run_experiment,
    sample_instance,
)
from juntatest.numdiff import backward_coeffs, validate_on_monomial  # noqa: E402
from juntatest.oracle import exact_dist_to_juntas, exact_estimator_stats, exact_holdout_noise  # noqa: E402
from juntatest.rng import stream  # noqa: E402
from juntatest.tester import (  # noqa: E402
    CoordinateOracleSet,
    holdout_noise_evaluations,
    holdout_sample_size,
    k_junta_distance,
    warmup_ball_tester,
)

pytestmark = pytest.mark.slow

EPS = 0.1


def record(label: str, ok: bool, detail: str, elapsed: float, limit: float) -> None:
    in_time = elapsed <= limit
    status = "PASS" if ok and in_time else "FAIL"
    line = f"{status} {label}: {detail} ({elapsed:.1f}s, limit {limit:.0f}s)"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert in_time, line


def test_c01_spectral_exactness():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_round, worst_parseval = 0.0, 0.0
    for i in range(100):
        n = (8, 12, 16)[i % 3]
        t = random_table(n, rng)
        spec = wht(t)
        worst_round = max(worst_round, float(np.max(np.abs(inverse_wht(spec) - t.values()))))
        worst_parseval = max(worst_parseval, abs(float(np.sum(spec.coeffs**2)) - 1.0))
    ok = worst_round <= 1e-10 and worst_parseval <= 1e-10
    record("C01 spectral exactness", ok,
           f"max round-trip error {worst_round:.1e}, max Parseval error {worst_parseval:.1e}",
           time.perf_counter() - start, 10)


def _estimator_grid():
    rng = np.random.default_rng(202)
    for n in (8, 10, 12):
        for r in (2, 3, 4):
            flat = build_minimax(r, n)
            cfg = LocalEstimatorConfig(r, flat)
            for _ in range(25):
                t = random_table(n, rng)
                g = local_mean_estimate_all(TableSource(t), cfg)
                yield t, flat, r, g


@pytest.fixture(scope="module")
def estimator_grid():
    start = time.perf_counter()
    mean_err, var_err, count = 0.0, 0.0, 0
    for t, flat, r, g in _estimator_grid():
        mean, var = exact_estimator_stats(t, flat, r)
        mean_err = max(mean_err, abs(g.mean() - float(mean)))
        var_err = max(var_err, abs(g.var() - var))
        count += 1
    return {"mean_err": mean_err, "var_err": var_err, "count": count, "elapsed": time.perf_counter() - start}


def test_c02_estimator_unbiasedness(estimator_grid):
    e = estimator_grid
    record("C02 estimator unbiasedness", e["mean_err"] <= 1e-9,
           f"{e['count']} functions, max |avg g - mean| {e['mean_err']:.1e}", e["elapsed"], 60)


def test_c03_variance_identity(estimator_grid):
    e = estimator_grid
    record("C03 variance identity", e["var_err"] <= 1e-9,
           f"{e['count']} functions, max |Var g - spectral| {e['var_err']:.1e}", e["elapsed"], 60)


def test_c04_flat_polynomial_bounds():
    start = time.perf_counter()
    bad = []
    cases = 0
    for N in range(1, 31):
        for r in range(1, N + 1):
            mm, ch = build_minimax(r, N), build_chebyshev(r, N)
            cases += 1
            try:
                mm.check_bounds(upto=3 * N)
            except AssertionError as exc:
                bad.append(f"(r={r}, N={N}) {exc}")
            if mm.values[0] != 0 or ch.values[0] != 0 or mm.flatness > ch.flatness:
                bad.append(f"(r={r}, N={N}) origin or flatness")
            alpha_ok = all(abs(a) <= 2 * i**i for i, a in enumerate(mm.alpha, start=1))
            p_ok = all(abs(mm(ell)) <= 4 * ell**r for ell in range(1, 3 * N + 1))
            if not (alpha_ok and p_ok):
                bad.append(f"(r={r}, N={N}) coefficient or growth bound")
    record("C04 flat-polynomial bounds", not bad,
           f"{cases} (r, N) pairs, {len(bad)} violations" + (f": {bad[:3]}" if bad else ""),
           time.perf_counter() - start, 30)


def test_c05_numerical_differentiation():
    start = time.perf_counter()
    moments_ok = all(
        backward_coeffs(ell).moments() == [factorial(ell) if j == ell else 0 for j in range(2 * ell)]
        for ell in range(1, 17)
    )
    checks = 0
    mono_ok = True
    for ell in range(1, 7):
        for t in range(0, 41):
            for delta in ("1e-2", "1e-3", "1e-4"):
                try:
                    validate_on_monomial(backward_coeffs(ell), t, Fraction(delta))
                except AssertionError:
                    mono_ok = False
                checks += 1
    first_ok = backward_coeffs(1).beta == (1, -1)
    record("C05 numerical differentiation", moments_ok and mono_ok and first_ok,
           f"moments exact for l<=16: {moments_ok}; {checks} monomial checks ok: {mono_ok}; l=1 is (1,-1): {first_ok}",
           time.perf_counter() - start, 10)


def test_c06_derivative_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(606)
    worst = 0.0
    for n in range(1, 11):
        t = random_table(n, rng)
        spec = wht(t)
        f = TableSource(t)
        for ell in range(0, min(3, n) + 1):
            spectral = noise_derivative_all(spec, ell)
            subsets = [sum(1 << c for c in S) for S in combinations(range(n), ell)]
            for x in range(1 << n):
                total = sum(discrete_derivative(f, x, S) for S in subsets)
                worst = max(worst, abs(total - spectral[x]))
    record("C06 derivative identity", worst <= 1e-9, f"n=1..10, l<=3, every x, max error {worst:.1e}",
           time.perf_counter() - start, 30)


# ---------------------------------------------------------------------------
# tester runs (shared with the query-accounting criterion)


def warmup_suite(k: int):
    rng = np.random.default_rng(700 + k)
    n = 2 * k
    # the low tail cannot go below 2^-k, so k=3 instances use the smallest achievable target
    delta = delta_from_eps(k, max(EPS, 2.0**-k))[0]
    suite = [("dictator 0", dictator(n, 0)), (f"dictator {n - 1}", dictator(n, n - 1))]
    suite += [(f"{k}-junta {i}", random_junta(n, sorted(rng.permutation(n)[:k].tolist()), rng)) for i in range(2)]
    suite += [(f"{k + 1}-parity", parity(n, range(k + 1)))]
    suite += [("majority 3", majority(n, [0, 1, 2])), (f"majority {k + 1}", majority(n, range(k + 1)))]
    suite += [(f"random {i}", random_table(n, rng)) for i in range(10)]
    for variant in ("yes", "no"):
        for i in range(5):
            inst = sample_instance(k, delta, variant, stream(700 + k, "suite", variant, i))
            suite.append((f"{variant} {i}", inst.tabulate()))
    return suite


@pytest.fixture(scope="module")
def warmup_runs():
    start = time.perf_counter()
    rows = []
    for k in (3, 4, 5):
        for name, t in warmup_suite(k):
            truth = float(exact_dist_to_juntas(t, k)[0])
            for seed in range(20):
                f = TableSource(t)
                rep = warmup_ball_tester(f, k, EPS, rand=seed)
                rows.append({"k": k, "name": name, "truth": truth, "estimate": rep.estimate,
                             "queries": rep.queries, "predicted": rep.predicted_queries, "counted": f.queries})
    return rows, time.perf_counter() - start


def test_c07_warmup_tester(warmup_runs):
    rows, elapsed = warmup_runs
    per_fn = {}
    for r in rows:
        per_fn.setdefault((r["k"], r["name"]), []).append(abs(r["estimate"] - r["truth"]) <= EPS)
    rates = {key: np.mean(v) for key, v in per_fn.items()}
    worst_key = min(rates, key=rates.get)
    ok = all(v >= 0.95 for v in rates.values())
    record("C07 warmup tester", ok,
           f"{len(rates)} functions x 20 seeds, worst success {rates[worst_key]:.2f} ({worst_key[1]}, k={worst_key[0]})",
           elapsed, 900)


@pytest.fixture(scope="module")
def holdout_runs():
    start = time.perf_counter()
    n, k, rho, tau, eta = 12, 3, 0.7, 0.1, 0.05
    rng = np.random.default_rng(808)
    t = random_table(n, rng)
    F = CoordinateOracleSet((0, 2, 3, 7, 9, 11), n)
    failures, worst, queries = 0, 0.0, []
    for trial in range(200):
        x = int(stream(808, "x", trial).integers(1 << n))
        f = TableSource(t)
        est = holdout_noise_evaluations(f, F, x, k, rho, tau, eta, rand=trial)
        errs = [abs(v - exact_holdout_noise(t, S, rho, x)) for S, v in est.items()]
        worst = max(worst, max(errs))
        failures += max(errs) > tau
        queries.append(f.queries)
    return {"rate": failures / 200, "worst": worst, "queries": queries, "elapsed": time.perf_counter() - start}


def test_c08_holdout_concentration(holdout_runs):
    h = holdout_runs
    record("C08 hold-out noise concentration", h["rate"] <= 0.05,
           f"failure rate {h['rate']:.3f} over 200 trials, max error {h['worst']:.3f}", h["elapsed"], 300)


@pytest.fixture(scope="module")
def full_runs():
    start = time.perf_counter()
    n = 12
    rows = []
    for F_size in (6, 8):
        for k in (2, 3):
            for rate in (0.0, 0.05, 0.1):
                for trial in range(10):
                    rng = stream(900, F_size, k, rate, trial)
                    F_coords = sorted(rng.permutation(n)[:F_size].tolist())
                    rel = sorted(rng.choice(F_coords, k, replace=False).tolist())
                    g = random_junta(n, rel, rng)
                    flips = rng.random(1 << n) < rate
                    t = PackedTruthTable.from_values(np.where(flips, -g.values(), g.values()))
                    truth = float(exact_dist_to_juntas(t, k)[0])
                    f = TableSource(t)
                    rep = k_junta_distance(f, CoordinateOracleSet(tuple(F_coords), n), k, EPS, rand=trial)
                    rows.append({"setting": (F_size, k, rate), "truth": truth, "estimate": rep.estimate,
                                 "queries": rep.queries, "predicted": rep.predicted_queries, "counted": f.queries})
    return rows, time.perf_counter() - start


def test_c09_full_pipeline(full_runs):
    rows, elapsed = full_runs
    per = {}
    for r in rows:
        per.setdefault(r["setting"], []).append(abs(r["estimate"] - r["truth"]) <= EPS)
    rates = {s: np.mean(v) for s, v in per.items()}
    worst = min(rates, key=rates.get)
    max_err = max(abs(r["estimate"] - r["truth"]) for r in rows)
    record("C09 full pipeline vs oracle", all(v >= 0.9 for v in rates.values()),
           f"{len(rates)} settings x 10 trials, worst success {rates[worst]:.2f} at (|F|,k,rate)={worst}, "
           f"max error {max_err:.3f}", elapsed, 1800)


def test_c10_lower_bound_gap():
    start = time.perf_counter()
    details, ok = [], True
    for eps in (2.0**-6, 0.05):
        res = run_experiment(6, eps, 30, seed=0)
        yes, no = res["yes"], res["no"]
        yes_ok = yes["max"] <= 0.25 - eps / 2 + 0.06
        no_ok = no["min"] >= 0.25 - 0.06
        mean_ok = no["mean"] > yes["mean"]
        ok &= yes_ok and no_ok and mean_ok
        details.append(f"eps={eps:.4g} (delta={res['delta']}): yes max {yes['max']:.4f} "
                       f"[<= {0.25 - eps / 2 + 0.06:.4f}: {yes_ok}], no min {no['min']:.4f} "
                       f"[>= 0.19: {no_ok}], mean no {no['mean']:.4f} > yes {yes['mean']:.4f}: {mean_ok}")
    record("C10 lower-bound gap", ok, "; ".join(details), time.perf_counter() - start, 600)


def test_c11_bad_event_combinatorics():
    start = time.perf_counter()
    k, draws = 8, 100_000
    worst = 0.0
    for d in range(1, 9):
        p = float(control_collision_probability(d, k))
        est = collision_rate(0, (1 << d) - 1, k, draws, stream(1100, d))
        se = sqrt(max(p * (1 - p), 1e-12) / draws)
        worst = max(worst, abs(est - p) / se)
    record("C11 bad-event combinatorics", worst <= 3,
           f"k=8, d=1..8, {draws} draws, max deviation {worst:.2f} standard errors", time.perf_counter() - start, 60)


def test_c12_query_accounting(warmup_runs, holdout_runs, full_runs, capsys):
    start = time.perf_counter()
    rows = warmup_runs[0] + full_runs[0]
    mismatched = sum(r["queries"] != r["predicted"] or r["counted"] != r["queries"] for r in rows)
    N = holdout_sample_size(6, 3, 0.7, 0.1, 0.05)
    ho_bad = sum(q != N for q in holdout_runs["queries"])
    code = cli_main(["bench-queries", "--k", "3..6", "--eps", str(EPS)])
    bench = json.loads(capsys.readouterr().out)
    bench_rows = bench["rows"]
    bench_exact = all(r["queries"] == r["predicted_queries"] for r in bench_rows)
    ok = code == 0 and mismatched == 0 and ho_bad == 0 and bench_exact and bench["strictly_increasing"]
    counts = ", ".join(f"k={r['k']}: {r['queries']}" for r in bench_rows)
    record("C12 query accounting", ok,
           f"{len(rows)} tester runs and {len(holdout_runs['queries'])} hold-out batches, "
           f"{mismatched + ho_bad} mismatches; bench-queries {counts}, strictly increasing "
           f"{bench['strictly_increasing']}", time.perf_counter() - start, 600)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
