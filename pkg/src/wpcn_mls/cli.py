"""Command-line entry point: ``wpcn-mls {schedule,sweep,prob-nonoverlap,generate}``."""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import DEFAULTS, LIST_KEYS, ConfigError, config_hash, load_config, scenario_config
from .experiments import (
    PROB_VARIABLES,
    SWEEP_VARIABLES,
    SweepSpec,
    prob_csv,
    run_prob_nonoverlap,
    run_sweep,
    sweep_csv,
)
from .model import InfeasibleError
from .netgen import InstanceFormatError, place_users, read_instance, write_instance
from .schedulers import ALGORITHMS, ProblemSizeError, audit, check_nonoverlap, initial_slots, lower_bound

DEFAULT_TRIALS = 1000
QUICK_TRIALS = 100


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _alg_list(text: str) -> list[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    bad = [n for n in names if n not in ALGORITHMS]
    if bad:
        raise argparse.ArgumentTypeError(
            f"unknown algorithm(s) {', '.join(bad)}; choose from {', '.join(ALGORITHMS)}"
        )
    return names


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, help="write CSV here instead of standard output")
    p.add_argument("--algorithms", type=_alg_list, help="comma-separated subset of " + ",".join(ALGORITHMS))
    p.add_argument("--trials", type=int, help=f"realizations per sweep point (default {DEFAULT_TRIALS})")
    p.add_argument("--quick", action="store_true", help=f"use {QUICK_TRIALS} trials unless --trials is given")
    group = p.add_argument_group("configuration overrides")
    for key in DEFAULTS:
        if key == "seed":
            continue
        group.add_argument(f"--{key}", dest=f"cfg_{key}", metavar="LIST" if key in LIST_KEYS else "VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wpcn-mls",
        description="Minimum length scheduling for discrete-rate full-duplex wireless powered networks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="schedule one network instance with every algorithm")
    _add_common(p)
    p.add_argument("--instance", type=Path, help="instance file (one user per line)")
    p.add_argument("--with-oracle", action="store_true", help="also run the brute-force optimum")

    for name, variables, helptext in (
        ("sweep", SWEEP_VARIABLES, "mean makespan per algorithm over a parameter sweep"),
        ("prob-nonoverlap", PROB_VARIABLES, "probability of disjoint / PSCA-solvable MLS slots"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.add_argument("--variable", required=True, choices=variables)
        p.add_argument("--values", required=True, type=_float_list, help="comma-separated sweep values")
        p.add_argument("--workers", type=int, default=1, help="worker processes")

    p = sub.add_parser("generate", help="write a random instance file")
    _add_common(p)
    return parser


def _settings(args: argparse.Namespace) -> dict:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_")}
    overrides["seed"] = args.seed
    return load_config(args.config, overrides)


def _trials(args: argparse.Namespace) -> int:
    if args.trials is not None:
        return args.trials
    return QUICK_TRIALS if args.quick else DEFAULT_TRIALS


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def cmd_schedule(args: argparse.Namespace) -> int:
    settings = _settings(args)
    cfg = scenario_config(settings)
    net = cfg.network
    if args.instance is not None:
        placed = read_instance(args.instance, net)
        source = str(args.instance)
    else:
        placed = place_users(cfg)
        source = f"generated (seed {cfg.seed}, {cfg.n_users} users)"
    users = [p.state for p in placed]

    names = list(args.algorithms or ["generic", "pdo", "emsa", "osns"])
    if args.with_oracle and "bfa" not in names:
        names.append("bfa")

    nonoverlap = check_nonoverlap(initial_slots(users, net))
    rates = net.rates.rates
    print(f"instance: {source}")
    print(f"users: {len(users)}  config_hash: {config_hash(settings)}")
    print(f"t=0 MLS slots non-overlapping: {'yes' if nonoverlap else 'no'}")
    print(f"lower bound (all at fastest rate): {lower_bound(users, net):.6f} s")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "branch", "user_id", "start_s", "end_s", "rate_index", "rate_bps", "power_w", "audit"])
    makespans = {}
    for name in names:
        if name == "osns" and not nonoverlap:
            print(f"\n[{name}] not applicable: t=0 MLS slots overlap")
            continue
        try:
            sched = ALGORITHMS[name](users, net)
        except ProblemSizeError as exc:
            print(f"\n[{name}] skipped: {exc}")
            continue
        report = audit(sched, users, net)
        makespans[name] = sched.makespan
        branch = f" (branch {sched.branch})" if sched.branch else ""
        verdict = "pass" if report.ok else f"FAIL: {report.first}"
        print(f"\n[{name}]{branch} makespan {sched.makespan:.6f} s, audit {verdict}")
        print(f"  {'user':>5} {'start_s':>14} {'end_s':>14} {'rate_bps':>10} {'power_w':>12}")
        for a in sched.assignments:
            print(f"  {a.user_id:>5} {a.start:>14.6f} {a.end:>14.6f} {rates[a.rate_index]:>10.0f} {a.power:>12.4e}")
            w.writerow([name, sched.branch or "", a.user_id, repr(a.start), repr(a.end),
                        a.rate_index, repr(rates[a.rate_index]), repr(a.power), "pass" if report.ok else "fail"])

    print("\nmakespans:")
    for name, m in makespans.items():
        print(f"  {name:>8} {m:.6f} s")
    if "bfa" in makespans:
        opt = makespans["bfa"]
        for name in ("emsa", "generic", "pdo"):
            if name in makespans and opt > 0:
                print(f"  {name}/bfa gap: {makespans[name] / opt - 1:.4%}")

    if args.out is not None:
        args.out.write_text(buf.getvalue(), encoding="utf-8")
    else:
        print("\n" + buf.getvalue(), end="")
    return 0


def _spec(args: argparse.Namespace, default_algs: Sequence[str]) -> SweepSpec:
    settings = _settings(args)
    scenario_config(settings)  # validate early
    return SweepSpec(
        variable=args.variable,
        values=args.values,
        trials=_trials(args),
        algorithms=tuple(args.algorithms or default_algs),
        base=settings,
        seed=settings["seed"],
    )


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = _spec(args, ("generic", "pdo"))
    result = run_sweep(spec, workers=args.workers)
    _emit(sweep_csv(spec, result), args.out)
    return 0


def cmd_prob_nonoverlap(args: argparse.Namespace) -> int:
    spec = _spec(args, ())
    result = run_prob_nonoverlap(spec, workers=args.workers)
    _emit(prob_csv(spec, result), args.out)
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    cfg = scenario_config(settings)
    comments = [f"wpcn-mls {__version__} instance", f"seed: {cfg.seed}", f"config_hash: {config_hash(settings)}"]
    if args.out is None:
        write_instance(place_users(cfg), sys.stdout, comments)
    else:
        write_instance(place_users(cfg), args.out, comments)
    return 0


COMMANDS = {
    "schedule": cmd_schedule,
    "sweep": cmd_sweep,
    "prob-nonoverlap": cmd_prob_nonoverlap,
    "generate": cmd_generate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, InstanceFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
