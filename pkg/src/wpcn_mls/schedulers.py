"""Transmission scheduling on top of MLS slots.

All schedulers take the list of users and a :class:`NetworkConfig` and return
a :class:`Schedule`. If any user can never transmit the whole instance is
rejected with :class:`~wpcn_mls.model.InfeasibleError`; partial schedules are
never produced.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .mls import MlsSlot, UserProfile
from .model import ENERGY_RTOL, TIME_TOL, InfeasibleError, NetworkConfig, UserState

# A committed slot.
Assignment = MlsSlot

BFA_MAX_USERS = 8
_EPS = sys.float_info.epsilon

OSNS = "OSNS"
PSCA = "PSCA"
EMSA = "EMSA"


class ProblemSizeError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    assignments: tuple[Assignment, ...]
    algorithm: str = ""
    branch: Optional[str] = None

    @property
    def makespan(self) -> float:
        return max((a.end for a in self.assignments), default=0.0)

    @property
    def order(self) -> tuple[int, ...]:
        return tuple(a.user_id for a in self.assignments)

    def __len__(self) -> int:
        return len(self.assignments)


def _schedule(slots: Iterable[MlsSlot], algorithm: str, branch: Optional[str] = None) -> Schedule:
    ordered = sorted(slots, key=lambda a: (a.start, a.user_id))
    return Schedule(tuple(ordered), algorithm, branch)


def build_profiles(users: Sequence[UserState], config: NetworkConfig) -> dict[int, UserProfile]:
    """Profiles keyed by user id; raises on the first infeasible user."""
    profiles = {}
    for u in users:
        if u.id in profiles:
            raise ValueError(f"duplicate user id {u.id}")
        prof = UserProfile.build(u, config)
        if not prof.feasible:
            raise InfeasibleError(u.id, "no rate level is ever affordable")
        profiles[u.id] = prof
    return profiles


def initial_slots(users: Sequence[UserState], config: NetworkConfig) -> list[MlsSlot]:
    """MLS slots of every user for a decision at t = 0."""
    return [p.slot(0.0) for p in build_profiles(users, config).values()]


def opca(users: Sequence[UserState], order: Sequence[int], config: NetworkConfig) -> Schedule:
    """Optimal power control and rate adaptation for a fixed transmission order.

    Each user in turn gets its MLS slot for a decision taken when the previous
    one finishes (the first decision is at 0).
    """
    profiles = build_profiles(users, config)
    if sorted(order) != sorted(profiles):
        raise ValueError("order must be a permutation of the user ids")
    t_dec = 0.0
    slots = []
    for uid in order:
        slot = profiles[uid].slot(t_dec)
        slots.append(slot)
        t_dec = slot.end
    return Schedule(tuple(slots), "opca")


def check_nonoverlap(slots: Sequence[MlsSlot]) -> bool:
    """True iff the slots are pairwise disjoint; touching endpoints are allowed."""
    ordered = sorted(slots, key=lambda a: (a.start, a.end))
    return all(b.start >= a.end - TIME_TOL for a, b in zip(ordered, ordered[1:]))


def osns(users: Sequence[UserState], config: NetworkConfig) -> Schedule:
    """Allocate every user its t=0 MLS slot; optimal when those slots are disjoint."""
    slots = initial_slots(users, config)
    if not check_nonoverlap(slots):
        raise ValueError("osns requires pairwise non-overlapping MLS slots at t=0")
    return _schedule(slots, "osns")


def psca(users: Sequence[UserState], config: NetworkConfig) -> tuple[list[MlsSlot], bool]:
    """Polynomial-time solvability check.

    Slots at t=0 are sorted by start. Every slot except the first and the last
    that overlaps its (possibly already delayed) predecessor is pushed to the
    predecessor's end, keeping its rate and duration. The instance is solvable
    when the last slot does not overlap the one before it after adjustment.
    """
    slots = sorted(initial_slots(users, config), key=lambda a: (a.start, a.user_id))
    n = len(slots)
    for i in range(1, n - 1):
        if slots[i].start < slots[i - 1].end:
            slots[i] = slots[i].delayed(slots[i - 1].end)
    solvable = n < 2 or slots[-1].start >= slots[-2].end
    return slots, solvable


def psca_recomputed(users: Sequence[UserState], config: NetworkConfig) -> tuple[list[MlsSlot], bool]:
    """PSCA variant that re-derives each delayed slot as a fresh MLS slot.

    A delayed user may cross into a faster rate region, so its slot can be
    shorter than the duration-preserving adjustment. Diagnostic only; the
    scheduling verdict always comes from :func:`psca`.
    """
    profiles = build_profiles(users, config)
    slots = sorted((p.slot(0.0) for p in profiles.values()), key=lambda a: (a.start, a.user_id))
    n = len(slots)
    for i in range(1, n - 1):
        if slots[i].start < slots[i - 1].end:
            slots[i] = profiles[slots[i].user_id].slot(slots[i - 1].end)
    solvable = n < 2 or slots[-1].start >= slots[-2].end
    return slots, solvable


def emsa(users: Sequence[UserState], config: NetworkConfig) -> Schedule:
    """Earliest MLS slot first.

    Ties on the start go to the earlier end, then to the smaller user id.
    """
    remaining = build_profiles(users, config)
    t_dec = 0.0
    chosen = []
    while remaining:
        best = min(
            (p.slot(t_dec) for p in remaining.values()),
            key=lambda a: (a.start, a.end, a.user_id),
        )
        chosen.append(best)
        del remaining[best.user_id]
        t_dec = best.end
    return Schedule(tuple(chosen), "emsa")


def generic(users: Sequence[UserState], config: NetworkConfig) -> Schedule:
    """OSNS if the t=0 slots are disjoint, else PSCA if it succeeds, else EMSA.

    The branch taken is recorded in ``Schedule.branch``.
    """
    slots = initial_slots(users, config)
    if check_nonoverlap(slots):
        return _schedule(slots, "generic", OSNS)
    adjusted, solvable = psca(users, config)
    if solvable:
        return _schedule(adjusted, "generic", PSCA)
    sched = emsa(users, config)
    return Schedule(sched.assignments, "generic", EMSA)


def pdo(users: Sequence[UserState], config: NetworkConfig) -> Schedule:
    """Pre-determined order baseline: OPCA on the users in list order."""
    sched = opca(users, [u.id for u in users], config)
    return Schedule(sched.assignments, "pdo")


def _order_makespans(profiles: Sequence[UserProfile], perms: np.ndarray) -> np.ndarray:
    """OPCA makespan of every row of ``perms`` (indices into ``profiles``).

    The MLS end for a decision at ``t`` equals ``min_k max(t, t_k) + tau_k``,
    evaluated here for all orders at once.
    """
    times = np.array(
        [[np.inf if t is None else t for t in p.times] for p in profiles], dtype=float
    )
    durations = np.array([p.durations for p in profiles], dtype=float)
    t_dec = np.zeros(perms.shape[0])
    for pos in range(perms.shape[1]):
        u = perms[:, pos]
        t_dec = (np.maximum(t_dec[:, None], times[u]) + durations[u]).min(axis=1)
    return t_dec


def bfa(users: Sequence[UserState], config: NetworkConfig, max_users: int = BFA_MAX_USERS) -> Schedule:
    """Exhaustive search over all transmission orders, each solved by OPCA.

    Among orders whose makespan is within the time tolerance of the best,
    the lexicographically smallest order of user ids wins.
    """
    if len(users) > max_users:
        raise ProblemSizeError(f"bfa is limited to {max_users} users, got {len(users)}")
    profiles = build_profiles(users, config)
    ids = sorted(profiles)
    if not ids:
        return Schedule((), "bfa")
    # itertools.permutations of a sorted sequence is lexicographic.
    perms = np.array(list(itertools.permutations(range(len(ids)))), dtype=np.intp)
    makespans = _order_makespans([profiles[i] for i in ids], perms)
    best = int(np.flatnonzero(makespans <= makespans.min() + TIME_TOL)[0])
    order = [ids[j] for j in perms[best]]
    return Schedule(opca(users, order, config).assignments, "bfa")


def lower_bound(users: Sequence[UserState], config: NetworkConfig) -> float:
    """Sum of transmission times at the fastest rate."""
    return sum(u.demand for u in users) / config.rates.rates[-1]


@dataclass(frozen=True)
class Violation:
    user_id: Optional[int]
    constraint: str
    residual: float

    def __str__(self) -> str:
        who = "schedule" if self.user_id is None else f"user {self.user_id}"
        return f"{who}: {self.constraint} violated (residual {self.residual:.3e})"


@dataclass
class AuditReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    def __bool__(self) -> bool:
        return self.ok


def audit(schedule: Schedule, users: Sequence[UserState], config: NetworkConfig) -> AuditReport:
    """Re-check a schedule against every constraint of the scheduling problem.

    Residuals are signed so that a negative value means violated.
    """
    report = AuditReport()
    bad = report.violations.append
    by_id = {u.id: u for u in users}
    rates = config.rates
    floor = config.interference_floor

    seen: dict[int, int] = {}
    for a in schedule.assignments:
        seen[a.user_id] = seen.get(a.user_id, 0) + 1
        user = by_id.get(a.user_id)
        if user is None:
            bad(Violation(a.user_id, "unknown_user", -1.0))
            continue
        if not 0 <= a.rate_index < rates.count:
            bad(Violation(a.user_id, "rate_index", -1.0))
            continue
        gamma = rates.sinr_thresholds[a.rate_index]
        duration = a.end - a.start
        # end - start is only known to a few ulps of the absolute time.
        dt_slack = 4 * _EPS * max(abs(a.start), abs(a.end))

        r = a.power * user.g_up / floor - gamma
        if r < -ENERGY_RTOL * gamma:
            bad(Violation(a.user_id, "sinr", r))
        consumed = a.power * duration
        r = user.battery + user.harvest_rate * a.end - consumed
        if r < -ENERGY_RTOL * consumed - a.power * dt_slack:
            bad(Violation(a.user_id, "energy_causality", r))
        r = duration * rates.rates[a.rate_index] - user.demand
        if r < -ENERGY_RTOL * user.demand - rates.rates[a.rate_index] * dt_slack:
            bad(Violation(a.user_id, "demand", r))
        r = config.p_max - a.power
        if r < -ENERGY_RTOL * config.p_max:
            bad(Violation(a.user_id, "p_max", r))
        if a.start < -TIME_TOL:
            bad(Violation(a.user_id, "start_time", a.start))

    for uid in by_id:
        if seen.get(uid, 0) != 1:
            bad(Violation(uid, "single_appearance", 1.0 - seen.get(uid, 0)))

    ordered = sorted(schedule.assignments, key=lambda a: (a.start, a.end))
    for prev, nxt in zip(ordered, ordered[1:]):
        r = nxt.start - prev.end
        if r < -TIME_TOL:
            bad(Violation(nxt.user_id, "non_overlap", r))
    return report


ALGORITHMS = {
    "generic": generic,
    "pdo": pdo,
    "emsa": emsa,
    "osns": osns,
    "bfa": bfa,
}
