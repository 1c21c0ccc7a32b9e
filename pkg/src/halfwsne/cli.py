"""Command-line interface: ``halfwsne {generate,solve,solve-query,verify,bench}``.

Exit codes: 0 on success, 1 on malformed input, 2 when a certified
epsilon breaks the guarantee it was computed under (a bug signal).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import logging
import math
import sys
import time

from . import __version__
from .game import GameError, wsne_report
from .gamefile import (
    KINDS,
    BenchRecord,
    GameFileError,
    dumps,
    game_to_dict,
    generate,
    instance_seed,
    profile_to_dict,
    read_game,
    read_profile,
)
from .lp import SolverConfig, SolverError
from .query import MatrixOracle, approximate_wsne_query
from .wsne import SearchExhausted, approximate_wsne, count_k_uniform, kappa

logger = logging.getLogger("halfwsne")

EXIT_OK, EXIT_INPUT, EXIT_BREACH = 0, 1, 2
WARN_PROFILES = 10 ** 8


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return v


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        sys.stdout.write(dumps(payload))
    else:
        sys.stdout.write("\n".join(lines) + "\n")


def _warn_search_size(m: int, n: int, k: int) -> None:
    worst = count_k_uniform(m, k) * count_k_uniform(n, k)
    if worst > WARN_PROFILES:
        logger.warning("case (c) may enumerate up to %.3g profiles (kappa=%d)", worst, k)


def cmd_generate(args) -> int:
    game = generate(args.kind, args.rows, args.cols or args.rows, args.seed, args.value)
    text = dumps(game_to_dict(game))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_solve(args) -> int:
    game, record = read_game(args.game, args.normalize)
    k = args.kappa_override or (kappa(args.delta) if args.delta < 1 else 1)
    _warn_search_size(game.rows, game.cols, k)
    out = approximate_wsne(game, args.delta, SolverConfig(), args.kappa_override)
    d = out.diagnostics
    payload = {
        **profile_to_dict(out.profile),
        "branch": out.branch,
        "certified_epsilon": out.certified_epsilon,
        "delta": args.delta,
        "row_value": _fmt(d.row_value),
        "col_value": _fmt(d.col_value),
        "row_support_size": d.row_support_size,
        "col_support_size": d.col_support_size,
        "kappa": d.kappa,
        "profiles_enumerated": d.profiles_enumerated,
        "normalized": record is not None,
    }
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(payload))
    _emit(args, payload, [
        f"branch: {out.branch}",
        f"certified epsilon: {out.certified_epsilon!r}",
        f"x: {profile_to_dict(out.profile)['x']}",
        f"y: {profile_to_dict(out.profile)['y']}",
        f"zero-sum values: row {d.row_value!r}, column {d.col_value!r}",
    ])
    return EXIT_OK if out.certified_epsilon <= 0.5 + args.delta + args.tolerance else EXIT_BREACH


def cmd_solve_query(args) -> int:
    game, record = read_game(args.game, args.normalize)
    out, stats = approximate_wsne_query(
        MatrixOracle(game), args.epsilon, args.delta, seed=args.seed,
        impl=args.zs_solver, audit=args.audit, retries=args.retries,
        c_s=args.sampling_constant, kappa_override=args.kappa_override,
        memoize=args.memoize,
    )
    d = out.diagnostics
    payload = {
        **profile_to_dict(out.profile),
        "branch": out.branch,
        "bound": out.bound,
        "audited_epsilon": out.audited_epsilon,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "seed": args.seed,
        "row_value": d.row_value,
        "col_value": d.col_value,
        "sample_size": d.sample_size,
        "sampled_support": list(d.sampled_support),
        "attempts": d.attempts,
        "zero_sum_low_confidence": d.zero_sum_low_confidence,
        "queries": {
            "total": stats.total,
            "zero_sum_R": stats.phase_zero_sum_R,
            "zero_sum_C": stats.phase_zero_sum_C,
            "subgame": stats.phase_subgame,
            "audit": stats.phase_audit,
        },
    }
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(payload))
    _emit(args, payload, [
        f"branch: {out.branch}",
        f"bound: {out.bound!r}",
        f"audited epsilon: {out.audited_epsilon!r}",
        f"x: {payload['x']}",
        f"y: {payload['y']}",
        "queries: " + ", ".join(f"{k}={v}" for k, v in payload["queries"].items()),
    ])
    if out.audited_epsilon is not None:
        cap = min(1.0, 0.5 + 3 * args.epsilon + args.delta)
        if out.audited_epsilon > cap + args.tolerance:
            return EXIT_BREACH
    return EXIT_OK


def cmd_verify(args) -> int:
    game, _ = read_game(args.game, args.normalize)
    profile = read_profile(args.profile)
    try:
        rep = wsne_report(game, profile)
    except GameError as exc:
        raise GameFileError(str(exc)) from exc
    payload = {
        "wsne_epsilon": rep.wsne_epsilon,
        "ne_epsilon": rep.ne_epsilon,
        "row_best": rep.row_best,
        "row_worst_support": rep.row_worst_support,
        "row_regret": rep.row_regret,
        "col_best": rep.col_best,
        "col_worst_support": rep.col_worst_support,
        "col_regret": rep.col_regret,
        "row_payoff": rep.row_payoff,
        "col_payoff": rep.col_payoff,
    }
    _emit(args, payload, [f"{k}: {v!r}" for k, v in payload.items()])
    if args.delta is not None and rep.wsne_epsilon > 0.5 + args.delta + args.tolerance:
        return EXIT_BREACH
    return EXIT_OK


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for part in text.split(","):
        part = part.strip().lower()
        m, _, n = part.partition("x")
        try:
            sizes.append((int(m), int(n or m)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad size {part!r}") from None
    if any(m < 1 or n < 1 for m, n in sizes):
        raise argparse.ArgumentTypeError("sizes must be positive")
    return sizes


def _bench_one(job) -> BenchRecord:
    iid, m, n, args = job
    seed = instance_seed(args.seed, iid)
    game = generate(args.kind, m, n, seed)
    t0 = time.perf_counter()
    if args.mode == "full":
        out = approximate_wsne(game, args.delta, SolverConfig(), args.kappa_override)
        ms = (time.perf_counter() - t0) * 1e3
        return BenchRecord(iid, m, n, args.delta, None, out.branch, out.certified_epsilon,
                           ms if args.timing else None, None, None, None, None, None, seed, "full")
    out, st = approximate_wsne_query(
        MatrixOracle(game), args.epsilon, args.delta, seed=seed, impl=args.zs_solver,
        audit=args.audit, kappa_override=args.kappa_override,
    )
    ms = (time.perf_counter() - t0) * 1e3
    return BenchRecord(iid, m, n, args.delta, args.epsilon, out.branch, out.audited_epsilon,
                       ms if args.timing else None, st.total, st.phase_zero_sum_R,
                       st.phase_zero_sum_C, st.phase_subgame, st.phase_audit, seed, "query")


def cmd_bench(args) -> int:
    if args.mode == "query" and args.epsilon is None:
        raise GameFileError("--epsilon is required with --mode query")
    jobs = []
    iid = 0
    for m, n in args.sizes:
        for _ in range(args.count):
            jobs.append((iid, m, n, args))
            iid += 1
    fh = open(args.csv, "w", newline="") if args.csv else sys.stdout
    breach = False
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BenchRecord.header())
        if args.jobs > 1:
            pool = concurrent.futures.ProcessPoolExecutor(args.jobs)
            results = pool.map(_bench_one, jobs, chunksize=8)
        else:
            pool, results = None, map(_bench_one, jobs)
        # map preserves submission order, so rows come out in instance-id order
        for rec in results:
            writer.writerow(rec.row())
            if rec.mode == "full" and rec.certified_epsilon > 0.5 + args.delta + args.tolerance:
                breach = True
        if pool is not None:
            pool.shutdown()
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_BREACH if breach else EXIT_OK


def _unit_interval(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return v


def _uint64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="halfwsne", description="Approximate well-supported Nash equilibria of bimatrix games.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, delta_required=True):
        p.add_argument("--game", required=True, help="game JSON file")
        p.add_argument("--normalize", action="store_true",
                       help="normalize payoffs per player even when already in [0, 1]")
        p.add_argument("--tolerance", type=float, default=1e-6,
                       help="slack when checking a certified epsilon (default: %(default)g)")
        p.add_argument("--json", action="store_true", help="machine-readable stdout")
        if delta_required:
            p.add_argument("--delta", type=_unit_interval, required=True)

    p = sub.add_parser("generate", help="write a seeded random game")
    p.add_argument("--kind", choices=KINDS, default="uniform")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int)
    p.add_argument("--seed", type=_uint64, default=0)
    p.add_argument("--value", type=float, help="payoff of a constant game")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="compute a (1/2+delta)-WSNE")
    common(p)
    p.add_argument("--kappa-override", type=int)
    p.add_argument("--out", help="also write the JSON result here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("solve-query", help="query-efficient (1/2+3eps+delta)-WSNE")
    common(p)
    p.add_argument("--epsilon", type=_unit_interval, required=True)
    p.add_argument("--seed", type=_uint64, default=0)
    p.add_argument("--zs-solver", choices=("exact", "mwu"), default="exact")
    p.add_argument("--audit", action="store_true", help="query the whole game afterwards and certify")
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--sampling-constant", type=float, default=12.0)
    p.add_argument("--kappa-override", type=int)
    p.add_argument("--memoize", action="store_true", help="repeated queries of a cell are free")
    p.add_argument("--out", help="also write the JSON result here")
    p.set_defaults(func=cmd_solve_query)

    p = sub.add_parser("verify", help="recompute the regret report of a profile")
    common(p, delta_required=False)
    p.add_argument("--profile", required=True, help='profile JSON {"x": [...], "y": [...]}')
    p.add_argument("--delta", type=_unit_interval, help="exit 2 if epsilon exceeds 1/2+delta")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="stream benchmark records as CSV")
    p.add_argument("--kind", choices=KINDS, default="uniform")
    p.add_argument("--sizes", type=_parse_sizes, required=True, help="e.g. 5,10 or 4x6")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--delta", type=_unit_interval, required=True)
    p.add_argument("--epsilon", type=_unit_interval)
    p.add_argument("--mode", choices=("full", "query"), default="full")
    p.add_argument("--zs-solver", choices=("exact", "mwu"), default="exact")
    p.add_argument("--audit", action="store_true")
    p.add_argument("--kappa-override", type=int)
    p.add_argument("--seed", type=_uint64, default=0)
    p.add_argument("--csv", help="output path (default: stdout)")
    p.add_argument("--timing", action="store_true",
                   help="fill wall_time_ms (makes output run-dependent)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GameFileError, GameError, ValueError) as exc:
        print(f"halfwsne: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, SearchExhausted) as exc:
        print(f"halfwsne: internal error: {exc}", file=sys.stderr)
        return EXIT_BREACH


if __name__ == "__main__":
    sys.exit(main())
