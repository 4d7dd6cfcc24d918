"""Command line interface: plan, simulate, sweep, bound, verify.

Exit codes: 0 success, 1 parse/usage error, 2 infeasible parameters,
3 divisibility violation, 4 verification failure. All numbers accept
exact "p/q" syntax and all rationals are printed as reduced p/q plus a
12-significant-digit decimal, so outputs are byte-stable for a fixed
config and seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

from . import bounds as bounds_mod
from .errors import (
    CodedShuffleError,
    DivisibilityError,
    Infeasible,
    InfeasibleParams,
)
from .model import Allocation, SystemParams, TaskParams, divisibility_report
from .planner import (
    best_pure_acdc,
    best_pure_cdc,
    optimize,
    pure_acdc_candidates,
    sweep,
)
from .rational import format_rational, parse_rational
from .simulator import run as run_simulation
from .verify import run_suites

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_DIVISIBILITY = 3
EXIT_VERIFY = 4

SEED_ENV_VAR = "CODEDSHUFFLE_SEED"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the documented contract is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_PARSE)


class ConfigError(Exception):
    pass


def load_config(path: str) -> dict:
    try:
        if path == "-":
            raw = json.load(sys.stdin)
        else:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict) or "task" not in raw or "system" not in raw:
        raise ConfigError("config must be a JSON object with 'task' and 'system'")
    return raw


def parse_task(raw: dict) -> TaskParams:
    t = raw["task"]
    try:
        return TaskParams(
            n_files=int(t["N"]),
            n_reduce=int(t["Q"]),
            replication=int(t.get("s", 1)),
            value_bits=int(t.get("V", 8)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad task parameters: {exc}") from exc


def parse_system(raw: dict) -> SystemParams:
    s = raw["system"]
    try:
        return SystemParams(
            n_nodes=int(s["K"]),
            storage=int(s["M"]),
            c_map=parse_rational(s.get("c_m", 1)),
            c_shuffle=parse_rational(s.get("c_s", 1)),
            c_reduce=parse_rational(s.get("c_r", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad system parameters: {exc}") from exc


def parse_options(raw: dict, args) -> dict:
    opts = dict(raw.get("options", {}))
    seed = opts.get("seed", os.environ.get(SEED_ENV_VAR, 0))
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    return {
        "seed": int(seed),
        "field_width": int(opts.get("field_width", 16)),
        "require_simulatable": bool(opts.get("require_simulatable", False)),
    }


def parse_alloc(raw: dict, args) -> Allocation:
    base = dict(raw.get("alloc", {}))
    take = lambda flag, key: flag if flag is not None else base.get(key)
    alpha = take(args.alpha, "alpha")
    r1 = take(args.r1, "r1")
    r2 = take(args.r2, "r2")
    ks = take(args.ks, "Ks")
    kh = take(args.kh, "Kh")
    if None in (alpha, r1, r2, ks, kh):
        raise ConfigError(
            "allocation needs alpha, r1, r2, Ks, Kh (config 'alloc' or CLI flags)"
        )
    return Allocation(parse_rational(alpha), int(r1), int(r2), int(ks), int(kh))


def _print_breakdown(label: str, t) -> None:
    print(f"{label}:")
    print(f"  map     = {format_rational(t.t_map)}")
    print(f"  shuffle = {format_rational(t.t_shuffle)}")
    print(f"  reduce  = {format_rational(t.t_reduce)}")
    print(f"  total   = {format_rational(t.total)}")


def cmd_plan(args) -> int:
    raw = load_config(args.config)
    task, system = parse_task(raw), parse_system(raw)
    opts = parse_options(raw, args)
    if args.pure == "cdc":
        plan = best_pure_cdc(task, system)
        print(f"pure cdc optimum: Kc={plan.kc} r1={plan.r1}")
        _print_breakdown("time", plan.time)
        return EXIT_OK
    if args.pure == "acdc":
        candidates = pure_acdc_candidates(task, system)
        if not candidates:
            raise Infeasible("no feasible pure helper-assisted point")
        print(f"pure acdc candidates ({len(candidates)}):")
        for cand in candidates:
            print(
                f"  Ks={cand.ks} Kh={cand.kh} r2={cand.r2}"
                f" total={format_rational(cand.time.total)}"
            )
        best = best_pure_acdc(task, system)
        print(f"pure acdc optimum: Ks={best.ks} Kh={best.kh} r2={best.r2}")
        _print_breakdown("time", best.time)
        return EXIT_OK

    plan = optimize(task, system, require_simulatable=opts["require_simulatable"])
    a = plan.alloc
    print(
        f"optimal allocation: alpha={a.alpha} r1={a.r1} r2={a.r2}"
        f" Ks={a.n_solvers} Kh={a.n_helpers}"
    )
    _print_breakdown("time (envelope loads)", plan.time)
    _print_breakdown("time (raw loads)", plan.time_raw)
    print(f"simulatable: {'yes' if plan.simulatable else 'no'}")
    if plan.runner_up:
        print("runner-up candidates:")
        for alloc, total in plan.runner_up:
            print(
                f"  alpha={alloc.alpha} r1={alloc.r1} r2={alloc.r2}"
                f" Ks={alloc.n_solvers} Kh={alloc.n_helpers}"
                f" total={format_rational(total)}"
            )
    return EXIT_OK


def cmd_simulate(args) -> int:
    raw = load_config(args.config)
    task, system = parse_task(raw), parse_system(raw)
    opts = parse_options(raw, args)
    alloc = parse_alloc(raw, args)
    report, transcript = run_simulation(
        alloc, task, system, seed=opts["seed"], field_width=opts["field_width"]
    )
    print(
        f"allocation: alpha={alloc.alpha} r1={alloc.r1} r2={alloc.r2}"
        f" Ks={alloc.n_solvers} Kh={alloc.n_helpers}  seed={opts['seed']}"
    )
    _print_breakdown("measured", report.measured)
    _print_breakdown("predicted", report.predicted)
    print(f"total load        = {format_rational(report.load_total)}")
    if report.load_sub1 is not None:
        print(f"subsystem-1 load  = {format_rational(report.load_sub1)}"
              f" (predicted {format_rational(report.predicted_load1)})")
    if report.load_sub2 is not None:
        print(f"subsystem-2 load  = {format_rational(report.load_sub2)}"
              f" (predicted {format_rational(report.predicted_load2)})")
    print(f"padded bits       = {report.padded_bits}")
    print(f"multicasts        = {len(transcript.records)}")
    print(f"decode ok         = {str(report.decode_ok).lower()}")
    print(f"reduce ok         = {str(report.reduce_ok).lower()}")
    print(f"measured == predicted: {str(report.matches_prediction).lower()}")
    if args.export_transcript:
        transcript.export_jsonl(args.export_transcript, include_payloads=args.payloads)
        print(f"transcript written to {args.export_transcript}")
    return EXIT_OK if report.matches_prediction else EXIT_VERIFY


def cmd_sweep(args) -> int:
    raw = load_config(args.config)
    task, system = parse_task(raw), parse_system(raw)
    if args.values:
        values = [parse_rational(v) for v in args.values.split(",")]
    else:
        if args.start is None or args.stop is None:
            raise ConfigError("sweep needs --values or --from/--to")
        step = args.step or 1
        values = list(range(args.start, args.stop + 1, step))
    if args.vary in ("K", "M", "N", "Q", "s", "V"):
        values = [int(v) for v in values]
    rows = sweep(task, system, args.vary, values)

    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            [
                "param", "value", "t_cdc_best", "t_acdc_best", "t_hybrid",
                "t_cdc_exact", "t_acdc_exact", "t_hybrid_exact",
                "alpha", "r1", "r2", "Ks", "Kh", "status",
            ]
        )
        dec = lambda x: f"{float(x):.12g}" if x is not None else ""
        exact = lambda x: str(x) if x is not None else ""
        for row in rows:
            alloc = row.alloc
            writer.writerow(
                [
                    row.param, row.value,
                    dec(row.t_cdc), dec(row.t_acdc), dec(row.t_hybrid),
                    exact(row.t_cdc), exact(row.t_acdc), exact(row.t_hybrid),
                    exact(alloc.alpha) if alloc else "",
                    alloc.r1 if alloc else "",
                    alloc.r2 if alloc else "",
                    alloc.n_solvers if alloc else "",
                    alloc.n_helpers if alloc else "",
                    row.status,
                ]
            )
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def _load_placement_file(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        node_files = {
            int(k): frozenset(int(n) for n in v) for k, v in raw["node_files"].items()
        }
        reduce_sets = {
            int(k): frozenset(int(q) for q in v) for k, v in raw["reduce_sets"].items()
        }
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed placement file {path}: {exc}") from exc
    for k in node_files:
        reduce_sets.setdefault(k, frozenset())
    for k in reduce_sets:
        node_files.setdefault(k, frozenset())
    return node_files, reduce_sets


def cmd_bound(args) -> int:
    raw = load_config(args.config)
    task, system = parse_task(raw), parse_system(raw)
    opts = parse_options(raw, args)

    if args.placement_file:
        node_files, reduce_sets = _load_placement_file(args.placement_file)
        alloc = None
    else:
        from .model import build_hybrid_placement, build_reduce_assignment

        alloc = parse_alloc(raw, args)
        alloc.validate(task, system)
        assignment = build_reduce_assignment(
            range(1, alloc.n_solvers + 1), task.replication, task.n_reduce
        )
        placement = build_hybrid_placement(alloc, task, system.n_nodes)
        node_files = bounds_mod.placement_maps(placement)
        reduce_sets = bounds_mod.reduce_maps(assignment, system.n_nodes)

    counts = bounds_mod.tally_availability(
        node_files, reduce_sets, task.n_files, task.n_reduce
    )
    generic = bounds_mod.counting_lower_bound(counts, task.n_files, task.n_reduce)
    print(f"counting bound     = {format_rational(generic)}")

    solvers, s = bounds_mod.check_weakly_symmetric(reduce_sets, task.n_reduce)
    profile = bounds_mod.tally_storage_profile(node_files, reduce_sets, task.n_files)
    print(
        f"profile: alpha={profile.alpha}"
        f" r1={profile.r1 if profile.r1 is not None else '-'}"
        f" r2={profile.r2 if profile.r2 is not None else '-'}"
        f" Ks={len(profile.solver_ids)} Kh={len(profile.helper_ids)}"
    )
    enhanced = bounds_mod.enhanced_lower_bound(profile, s, task.n_reduce)
    print(f"enhanced bound     = {format_rational(enhanced.value)}")
    print(f"pre-relaxation sum = {format_rational(enhanced.pre_jensen)}")
    phases = bounds_mod.phase_lower_bounds(profile, task, system)
    _print_breakdown("phase lower bounds", phases)

    if args.simulate:
        if alloc is None:
            raise ConfigError("--simulate requires a scheme allocation, not a file")
        report, _ = run_simulation(alloc, task, system, seed=opts["seed"])
        gap = report.load_total - enhanced.value
        print(f"measured load      = {format_rational(report.load_total)}")
        print(f"achievability gap  = {format_rational(gap)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    names = None if args.suite == "all" else [args.suite]
    results = run_suites(names)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        line = f"[{status}] {res.suite}: {res.name}"
        if res.detail and not res.passed:
            line += f" ({res.detail})"
        print(line)
        failed += 0 if res.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def build_parser() -> _Parser:
    parser = _Parser(prog="codedshuffle", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="optimize the resource allocation")
    p.add_argument("-c", "--config", required=True, help="JSON config path or - for stdin")
    p.add_argument("--pure", choices=["cdc", "acdc"], help="restrict to one pure scheme")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run one allocation bit-exactly")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--alpha")
    p.add_argument("--r1", type=int)
    p.add_argument("--r2", type=int)
    p.add_argument("--ks", type=int)
    p.add_argument("--kh", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--export-transcript", metavar="PATH")
    p.add_argument("--payloads", action="store_true", help="hex payloads in transcript")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one parameter, CSV output")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--vary", required=True, choices=["K", "M", "N", "Q", "s", "V", "c_m", "c_s", "c_r"])
    p.add_argument("--from", dest="start", type=int)
    p.add_argument("--to", dest="stop", type=int)
    p.add_argument("--step", type=int)
    p.add_argument("--values", help="comma-separated explicit values")
    p.add_argument("--out", metavar="CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="counting and enhanced converse bounds")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--placement-file", metavar="JSON")
    p.add_argument("--alpha")
    p.add_argument("--r1", type=int)
    p.add_argument("--r2", type=int)
    p.add_argument("--ks", type=int)
    p.add_argument("--kh", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--simulate", action="store_true", help="also run the simulator and print the gap")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", help="run built-in consistency suites")
    p.add_argument("--suite", default="all", choices=["all", "loads", "codec", "bounds", "simulator"])
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_PARSE
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DivisibilityError as exc:
        print(f"divisibility error: {exc}", file=sys.stderr)
        return EXIT_DIVISIBILITY
    except (Infeasible, InfeasibleParams) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CodedShuffleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    raise SystemExit(main())
