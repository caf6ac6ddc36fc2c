"""Command-line driver: ``juntatest <subcommand> [options]``.

Every subcommand prints one JSON report.  Reports are deterministic for a
fixed configuration (including the seed); wall time is only included with
``--timing``.  Exit codes: 0 success, 2 invalid input, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from math import comb
from pathlib import Path

import numpy as np

from . import flatpoly, lowerbound, numdiff, oracle, tester
from .estimators import ConfigurationError, LocalEstimatorConfig, local_mean_estimate_batch
from .fourier import wht
from .hypercube import (
    MAX_EXACT_BITS,
    BudgetError,
    DimensionError,
    FunctionSource,
    PackedTruthTable,
    TableSource,
    ball_size,
    gather_bits,
    mask_to_coords,
    parse_table,
    read_table,
)
from .rng import random_masks, stream

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3


class ValidationError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


# ---------------------------------------------------------------------------
# function specs


def parse_planted(spec: str, n: int | None, seed: int) -> tuple[PackedTruthTable, dict]:
    """``junta:<coords>:<table>[+noise:<rate>]`` with coords like ``0,3,5``.

    The table over the listed coordinates is hex digits (bit i = entry i) or a
    +/- string.  Noise flips each point of the cube independently.
    """
    head, _, tail = spec.partition("+noise:")
    parts = head.split(":")
    if len(parts) != 3 or parts[0] != "junta":
        raise ValidationError("planted", "expected junta:<coords>:<table>[+noise:<rate>]")
    try:
        coords = [int(c) for c in parts[1].split(",") if c.strip()]
    except ValueError:
        raise ValidationError("planted.coords", f"bad coordinate list {parts[1]!r}") from None
    if len(set(coords)) != len(coords) or any(c < 0 for c in coords):
        raise ValidationError("planted.coords", "coordinates must be distinct and nonnegative")
    j = len(coords)
    body = parts[2].strip()
    if body and set(body) <= {"+", "-"}:
        if len(body) != 1 << j:
            raise ValidationError("planted.table", f"need {1 << j} +/- entries")
        g = np.where(np.frombuffer(body.encode(), dtype=np.uint8) == ord("+"), 1, -1)
    else:
        try:
            value = int(body, 16)
        except ValueError:
            raise ValidationError("planted.table", f"bad table {body!r}") from None
        if len(body) != max(1, (1 << j) // 4) or value >> (1 << j):
            raise ValidationError("planted.table", f"need {max(1, (1 << j) // 4)} hex digits for {j} coordinates")
        g = np.array([1 if (value >> i) & 1 else -1 for i in range(1 << j)])
    try:
        rate = float(tail) if tail else 0.0
    except ValueError:
        raise ValidationError("planted.noise", f"bad noise rate {tail!r}") from None
    if not 0 <= rate <= 1:
        raise ValidationError("planted.noise", "noise rate must lie in [0, 1]")
    n = (max(coords) + 1 if coords else 1) if n is None else n
    if coords and max(coords) >= n:
        raise ValidationError("n", f"coordinate {max(coords)} outside dimension {n}")
    if n > MAX_EXACT_BITS:
        raise BudgetError(f"planted tables limited to n <= {MAX_EXACT_BITS}")
    idx = np.arange(1 << n, dtype=np.int64)
    vals = g[gather_bits(idx, coords)]
    rng = stream(seed, "planted")
    flips = rng.random(1 << n) < rate
    vals = np.where(flips, -vals, vals)
    return PackedTruthTable.from_values(vals), {"coords": coords, "noise": rate, "flipped": int(flips.sum())}


def parse_lower_bound(spec: str, seed: int):
    """``lb:<yes|no>:<k>:<eps>`` samples one hard instance."""
    parts = spec.split(":")
    if len(parts) != 4 or parts[0] != "lb" or parts[1] not in ("yes", "no"):
        raise ValidationError("planted", "expected lb:<yes|no>:<k>:<eps>")
    try:
        k, eps = int(parts[2]), float(parts[3])
    except ValueError:
        raise ValidationError("planted", "bad k or eps") from None
    delta, tail = lowerbound.delta_from_eps(k, eps)
    inst = lowerbound.sample_instance(k, delta, parts[1], stream(seed, "lb-instance"))
    return inst.tabulate(), {**inst.describe(), "eps_achieved": float(tail)}


def load_function(args) -> tuple[PackedTruthTable, dict]:
    if getattr(args, "table", None) and getattr(args, "planted", None):
        raise ValidationError("table", "give either --table or --planted, not both")
    if getattr(args, "table", None):
        try:
            t = read_table(args.table)
        except FileNotFoundError:
            raise ValidationError("table", f"no such file {args.table}") from None
        except (ValueError, DimensionError) as exc:
            raise ValidationError("table", str(exc)) from None
        return t, {"source": "table", "path": str(args.table)}
    if getattr(args, "planted", None):
        if args.planted.startswith("lb:"):
            t, info = parse_lower_bound(args.planted, args.seed)
        else:
            t, info = parse_planted(args.planted, args.n, args.seed)
        return t, {"source": "planted", "planted": args.planted, **info}
    raise ValidationError("table", "a function is required (--table or --planted)")


# ---------------------------------------------------------------------------
# subcommands


def cmd_transform(args) -> dict:
    table, _ = load_function(args)
    spec = wht(table)
    return {"n": spec.n, "coeffs": spec.to_dict()["coeffs"], "weights": spec.weight_profile().tolist()}


def cmd_flatpoly(args) -> dict:
    if not 1 <= args.r <= args.N:
        raise ValidationError("r", "need 1 <= r <= N")
    if args.N > 200:
        raise BudgetError("N limited to 200")
    return flatpoly.build(args.r, args.N, args.method).to_dict()


def cmd_numdiff(args) -> dict:
    if not 1 <= args.ell <= numdiff.MAX_ORDER:
        raise ValidationError("ell", f"need 1 <= ell <= {numdiff.MAX_ORDER}")
    return numdiff.backward_coeffs(args.ell).to_dict()


def cmd_estimate_mean(args) -> dict:
    table, info = load_function(args)
    f = TableSource(table)
    n = table.n
    if args.centers < 1:
        raise ValidationError("centers", "need at least one center")
    if not 1 <= args.r <= n:
        raise ValidationError("r", f"need 1 <= r <= n = {n}")
    exact = abs(float(wht(table).mean))
    if args.rho is None:
        flat = flatpoly.build_minimax(args.r, n)
        cfg = LocalEstimatorConfig(args.r, flat)
        centers = random_masks(stream(args.seed, "estimate-mean", "centers"), n, args.centers)
        g = local_mean_estimate_batch(f, centers, cfg)
        estimate = float(np.mean(np.abs(g)))
        params = {"estimator": "ball", "r": args.r, "flat_N": n, "flatness": float(flat.flatness),
                  "centers": args.centers, "ball_size": ball_size(n, args.r)}
        predicted = args.centers * ball_size(n, args.r)
    else:
        F = tester.CoordinateOracleSet((), n)
        p = tester.calibrate_full(n, 0, 0, args.eps, m=args.centers, N=args.samples, r=args.r,
                                  rho=args.rho, delta=args.delta)
        rep = tester.k_junta_distance(f, F, 0, args.eps, m=args.centers, rand=args.seed, N=p.N, r=args.r,
                                      rho=args.rho, delta=p.delta)
        estimate = rep.per_set[0]
        params = {"estimator": "estar", **rep.params}
        predicted = rep.predicted_queries
    return {"estimate": estimate, "exact": exact, "error": abs(estimate - exact), "queries": f.queries,
            "predicted_queries": predicted, "params": params, "function": info}


def cmd_test_junta(args) -> dict:
    table, info = load_function(args)
    f = TableSource(table)
    n = table.n
    if not 1 <= args.k <= n:
        raise ValidationError("k", f"need 1 <= k <= n = {n}")
    if not 0 < args.eps <= 1:
        raise ValidationError("eps", "eps must lie in (0, 1]")
    if args.mode == "warmup":
        if n != 2 * args.k:
            raise ValidationError("k", f"warmup mode needs n = 2k; n = {n}, k = {args.k}")
        rep = tester.warmup_ball_tester(f, args.k, args.eps, m=args.m, r=args.r, rand=args.seed, threads=args.threads)
    else:
        if args.oracles:
            try:
                coords = tuple(int(c) for c in args.oracles.split(","))
            except ValueError:
                raise ValidationError("oracles", f"bad coordinate list {args.oracles!r}") from None
        else:
            coords = tuple(range(n))
        try:
            F = tester.CoordinateOracleSet(coords, n)
        except DimensionError as exc:
            raise ValidationError("oracles", str(exc)) from None
        if args.k > len(F):
            raise ValidationError("k", "k exceeds the number of oracle coordinates")
        overrides = {k: v for k, v in (("N", args.N), ("r", args.r), ("rho", args.rho), ("delta", args.delta)) if v is not None}
        rep = tester.k_junta_distance(f, F, args.k, args.eps, m=args.m, rand=args.seed, threads=args.threads,
                                      mode=args.estimator, delta_rule=args.delta_rule, **overrides)
    out = rep.to_dict()
    out["function"] = info
    if n <= oracle.MAX_ORACLE_BITS and comb(n, args.k) <= oracle.MAX_SUBSET_BUDGET:
        d, S = oracle.exact_dist_to_juntas(table, args.k)
        out["exact"] = float(d)
        out["exact_best_set"] = mask_to_coords(S)
        out["error"] = abs(rep.estimate - float(d))
    return out


def cmd_exact(args) -> dict:
    table, info = load_function(args)
    if not 0 <= args.k <= table.n:
        raise ValidationError("k", f"need 0 <= k <= n = {table.n}")
    return {**oracle.exact_stats(table, args.k).to_dict(), "n": table.n, "k": args.k, "function": info}


def cmd_lowerbound(args) -> dict:
    if not 1 <= args.k <= 12:
        raise ValidationError("k", "need 1 <= k <= 12")
    if args.instances < 1:
        raise ValidationError("instances", "need at least one instance")
    try:
        return lowerbound.run_experiment(args.k, args.eps, args.instances, args.seed)
    except ValueError as exc:
        raise ValidationError("eps", str(exc)) from None


def parse_k_range(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            ks = list(range(int(lo), int(hi) + 1))
        else:
            ks = [int(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError("k", f"bad range {text!r}") from None
    if not ks or min(ks) < 1 or max(ks) > 8:
        raise ValidationError("k", "k values must lie in 1..8")
    return ks


def cmd_bench_queries(args) -> dict:
    rows = []
    for k in parse_k_range(args.k):
        p = tester.calibrate_warmup(k, args.eps)
        row = {"k": k, "m": p.m, "r": p.r, "ball_size": p.ball, "predicted_queries": p.predicted_queries}
        if not args.dry_run:
            rng = stream(args.seed, "bench", k)
            f = TableSource(PackedTruthTable.from_values(rng.choice([-1, 1], 1 << (2 * k))))
            rep = tester.warmup_ball_tester(f, k, args.eps, rand=args.seed, threads=args.threads)
            row["queries"] = rep.queries
        rows.append(row)
    counts = [r.get("queries", r["predicted_queries"]) for r in rows]
    return {"eps": args.eps, "rows": rows,
            "strictly_increasing": all(a < b for a, b in zip(counts, counts[1:]))}


COMMANDS = {
    "transform": cmd_transform,
    "flatpoly": cmd_flatpoly,
    "numdiff": cmd_numdiff,
    "estimate-mean": cmd_estimate_mean,
    "test-junta": cmd_test_junta,
    "exact": cmd_exact,
    "lowerbound": cmd_lowerbound,
    "bench-queries": cmd_bench_queries,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="include wall time (makes reports non-reproducible)")

    parser = argparse.ArgumentParser(prog="juntatest", description="Tolerant junta testing experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def function_args(p, planted=True):
        p.add_argument("--table", type=Path, help="truth table file (n=<int> + +/- line, or hex:<digits>)")
        if planted:
            p.add_argument("--planted", help="junta:<coords>:<table>[+noise:<rate>] or lb:<yes|no>:<k>:<eps>")
            p.add_argument("--n", type=int, default=None, help="dimension for planted juntas")

    p = sub.add_parser("transform", parents=[common], help="Walsh-Hadamard spectrum of a table")
    function_args(p)

    p = sub.add_parser("flatpoly", parents=[common], help="flat polynomial values and coefficients")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--method", choices=flatpoly.METHODS, default="minimax")

    p = sub.add_parser("numdiff", parents=[common], help="backward-difference coefficients")
    p.add_argument("--ell", type=int, required=True)

    p = sub.add_parser("estimate-mean", parents=[common], help="estimate |E[f]| from local estimators")
    function_args(p)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--rho", type=float, default=None, help="use the noise-derivative estimator at this rate")
    p.add_argument("--delta", type=str, default=None, help="differentiation step (default 1e-6)")
    p.add_argument("--samples", type=int, default=None, help="noise samples per center")
    p.add_argument("--eps", type=float, default=0.1, help="accuracy used to size --samples when omitted")
    p.add_argument("--centers", type=int, required=True)

    p = sub.add_parser("test-junta", parents=[common], help="estimate the distance to k-juntas")
    function_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mode", choices=("warmup", "full"), default="full")
    p.add_argument("--oracles", help="comma-separated oracle coordinates (default: all)")
    p.add_argument("--estimator", choices=("pooled", "independent", "exact"), default="pooled")
    p.add_argument("--m", type=int, default=None, help="number of centers (default: calibrated)")
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--N", type=int, default=None, help="noise samples per center")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--delta", type=str, default=None)
    p.add_argument("--delta-rule", choices=("fixed", "asymptotic"), default="fixed")

    p = sub.add_parser("exact", parents=[common], help="brute-force distances and moments")
    function_args(p)
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("lowerbound", parents=[common], help="distances of sampled hard instances")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--instances", type=int, default=30)

    p = sub.add_parser("bench-queries", parents=[common], help="warmup query counts across k")
    p.add_argument("--k", default="3..6", help="range like 3..6 or list like 3,4")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--dry-run", action="store_true", help="report closed-form counts without running")
    return parser


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def run(args) -> dict:
    if args.threads < 1:
        raise ValidationError("threads", "need at least one thread")
    start = time.perf_counter()
    body = COMMANDS[args.command](args)
    report = {"schema_version": SCHEMA_VERSION, "command": args.command, "seed": args.seed, **body}
    if args.timing:
        report["wall_time_s"] = time.perf_counter() - start
    return report


def _error(kind: str, field: str | None, message: str, code: int) -> int:
    err = {"schema_version": SCHEMA_VERSION, "error": {"type": kind, "field": field, "message": message}}
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = run(args)
    except ValidationError as exc:
        return _error("validation", exc.field, str(exc), EXIT_INVALID)
    except BudgetError as exc:
        return _error("budget", None, str(exc), EXIT_BUDGET)
    except (ConfigurationError, DimensionError, ValueError) as exc:
        return _error("validation", None, str(exc), EXIT_INVALID)
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
