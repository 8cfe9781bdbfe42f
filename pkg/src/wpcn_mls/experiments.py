"""Seeded Monte Carlo sweeps over network realizations.

Each (sweep value, trial) pair gets its own realization seed::

    seed = mix(mix(mix(master) ^ value_index) ^ trial_index)

where ``mix`` is the SplitMix64 finalizer. Trials are independent, so they
can run on any number of worker processes; results are gathered back in
(value, trial) order before aggregation, which keeps the output identical
regardless of the worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

from . import __version__
from .config import config_hash, scenario_config
from .model import InfeasibleError, RateTable, db_to_linear
from .schedulers import ALGORITHMS, BFA_MAX_USERS, audit, check_nonoverlap, initial_slots, lower_bound, psca
from .netgen import generate_realization

SWEEP_VARIABLES = ("hap_power", "n_users", "min_snr", "radius", "alpha")
PROB_VARIABLES = ("n_users", "radius", "hap_power", "alpha")
SWEEP_HEADER = ("variable", "value", "algorithm", "mean_makespan_s", "std_makespan_s", "trials")
PROB_HEADER = ("variable", "value", "p_nonoverlap", "p_psca_solvable", "trials")

_MASK = (1 << 64) - 1
SEED_RULE = "splitmix64(splitmix64(splitmix64(master) ^ value_index) ^ trial_index)"


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(master: int, value_index: int, trial_index: int) -> int:
    h = splitmix64(master & _MASK)
    h = splitmix64(h ^ value_index)
    return splitmix64(h ^ trial_index)


def apply_variable(settings: Mapping[str, Any], variable: str, value: float) -> dict[str, Any]:
    """Settings with the swept ``variable`` set to ``value``.

    ``min_snr`` is given in dB and switches to a single-rate table whose rate
    is the Shannon rate at that SNR.
    """
    out = dict(settings)
    if variable == "hap_power":
        out["p_hap"] = float(value)
    elif variable == "n_users":
        if float(value) != int(value):
            raise ValueError("n_users values must be integers")
        out["n_users"] = int(value)
    elif variable == "min_snr":
        table = RateTable.constant_rate(db_to_linear(value), out["bandwidth"])
        out["rates"] = list(table.rates)
        out["sinr_thresholds"] = list(table.sinr_thresholds)
    elif variable in ("radius", "alpha"):
        out[variable] = float(value)
    else:
        raise ValueError(f"unknown sweep variable {variable!r}")
    return out


@dataclass
class SweepSpec:
    variable: str
    values: Sequence[float]
    trials: int
    algorithms: Sequence[str] = ("generic", "pdo")
    base: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 1

    def validate(self, allowed: Sequence[str] = SWEEP_VARIABLES) -> None:
        if self.variable not in allowed:
            raise ValueError(f"variable must be one of {', '.join(allowed)}")
        vals = list(self.values)
        if not vals:
            raise ValueError("sweep needs at least one value")
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ValueError("sweep values must be strictly monotone")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms: {', '.join(unknown)}")
        if "bfa" in self.algorithms:
            sizes = vals if self.variable == "n_users" else [self.base["n_users"]]
            if max(sizes) > BFA_MAX_USERS:
                raise ValueError(f"bfa is only allowed with at most {BFA_MAX_USERS} users")


@dataclass
class TrialResult:
    value_index: int
    trial_index: int
    makespans: dict[str, float]
    lower_bound: float
    branch: Optional[str] = None
    infeasible_user: Optional[int] = None


@dataclass
class SweepRow:
    variable: str
    value: float
    algorithm: str
    mean: float
    std: float
    trials: int


@dataclass
class ProbRow:
    variable: str
    value: float
    p_nonoverlap: float
    p_psca_solvable: float
    trials: int


@dataclass
class SweepResult:
    rows: list
    trials: list[TrialResult]
    infeasible: dict[float, int]


def _mean_std(xs: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(xs) / n
    if n == 1:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / (n - 1))


def _sweep_trial(job: tuple) -> TrialResult:
    settings, variable, value, vi, ti, master, algorithms = job
    s = apply_variable(settings, variable, value)
    s["seed"] = derive_seed(master, vi, ti)
    cfg = scenario_config(s)
    users = generate_realization(cfg)
    net = cfg.network
    lb = lower_bound(users, net)
    res = TrialResult(vi, ti, {}, lb)
    try:
        nonoverlap = check_nonoverlap(initial_slots(users, net))
    except InfeasibleError as exc:
        res.infeasible_user = exc.user_id
        return res
    for name in algorithms:
        if name == "osns" and not nonoverlap:
            continue
        sched = ALGORITHMS[name](users, net)
        report = audit(sched, users, net)
        if not report.ok:
            raise RuntimeError(f"{name} produced an invalid schedule: {report.first}")
        if sched.makespan < lb * (1 - 1e-9):
            raise RuntimeError(f"{name} makespan {sched.makespan} below lower bound {lb}")
        res.makespans[name] = sched.makespan
        if name == "generic":
            res.branch = sched.branch
    return res


def _prob_trial(job: tuple) -> TrialResult:
    settings, variable, value, vi, ti, master, _ = job
    s = apply_variable(settings, variable, value)
    s["seed"] = derive_seed(master, vi, ti)
    cfg = scenario_config(s)
    users = generate_realization(cfg)
    res = TrialResult(vi, ti, {}, lower_bound(users, cfg.network))
    try:
        slots = initial_slots(users, cfg.network)
    except InfeasibleError as exc:
        res.infeasible_user = exc.user_id
        return res
    if check_nonoverlap(slots):
        res.branch = "OSNS"
    elif psca(users, cfg.network)[1]:
        res.branch = "PSCA"
    else:
        res.branch = "EMSA"
    return res


def _jobs(spec: SweepSpec) -> list[tuple]:
    base = dict(spec.base)
    return [
        (base, spec.variable, v, vi, ti, spec.seed, tuple(spec.algorithms))
        for vi, v in enumerate(spec.values)
        for ti in range(spec.trials)
    ]


def _run(fn, jobs: list[tuple], workers: int) -> list[TrialResult]:
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    return sorted(results, key=lambda r: (r.value_index, r.trial_index))


def _infeasible_counts(spec: SweepSpec, trials: Iterable[TrialResult]) -> dict[float, int]:
    counts = {v: 0 for v in spec.values}
    for t in trials:
        if t.infeasible_user is not None:
            counts[spec.values[t.value_index]] += 1
    return counts


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Mean and spread of each algorithm's makespan at every sweep value.

    Realizations with an infeasible user are excluded and counted. OSNS is
    only aggregated over realizations whose t=0 slots are disjoint.
    """
    spec.validate()
    trials = _run(_sweep_trial, _jobs(spec), workers)
    rows = []
    for vi, value in enumerate(spec.values):
        here = [t for t in trials if t.value_index == vi]
        for name in spec.algorithms:
            xs = [t.makespans[name] for t in here if name in t.makespans]
            mean, std = _mean_std(xs)
            rows.append(SweepRow(spec.variable, value, name, mean, std, len(xs)))
    return SweepResult(rows, trials, _infeasible_counts(spec, trials))


def run_prob_nonoverlap(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Fraction of realizations with disjoint t=0 slots, and fraction PSCA can solve."""
    spec.validate(PROB_VARIABLES)
    trials = _run(_prob_trial, _jobs(spec), workers)
    rows = []
    for vi, value in enumerate(spec.values):
        here = [t for t in trials if t.value_index == vi and t.infeasible_user is None]
        n = len(here)
        nov = sum(t.branch == "OSNS" for t in here)
        solv = sum(t.branch in ("OSNS", "PSCA") for t in here)
        rows.append(
            ProbRow(spec.variable, value, nov / n if n else math.nan, solv / n if n else math.nan, n)
        )
    return SweepResult(rows, trials, _infeasible_counts(spec, trials))


def metadata_lines(spec: SweepSpec, result: Optional[SweepResult] = None) -> list[str]:
    lines = [
        f"tool: wpcn-mls {__version__}",
        f"config_hash: {config_hash(spec.base)}",
        f"seed: {spec.seed}",
        f"seed_derivation: {SEED_RULE}",
        f"trials_requested: {spec.trials}",
    ]
    if result is not None:
        skipped = {v: c for v, c in result.infeasible.items() if c}
        if skipped:
            lines.append(
                "infeasible_trials: " + " ".join(f"{_fmt(v)}:{c}" for v, c in skipped.items())
            )
    return lines


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def sweep_csv(spec: SweepSpec, result: SweepResult) -> str:
    buf = io.StringIO()
    for line in metadata_lines(spec, result):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in result.rows:
        w.writerow([r.variable, _fmt(r.value), r.algorithm, repr(r.mean), repr(r.std), r.trials])
    return buf.getvalue()


def prob_csv(spec: SweepSpec, result: SweepResult) -> str:
    buf = io.StringIO()
    for line in metadata_lines(spec, result):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROB_HEADER)
    for r in result.rows:
        w.writerow([r.variable, _fmt(r.value), repr(r.p_nonoverlap), repr(r.p_psca_solvable), r.trials])
    return buf.getvalue()
