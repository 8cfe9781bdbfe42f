"""Minimum-length-scheduling (MLS) slots.

A user's completion time as a function of its start time ``s`` is
``s + D / r(s)`` where ``r(s)`` is the fastest rate affordable at ``s``. It
drops only at the instants where a new rate level becomes affordable, so the
best start at or after a decision time is either the decision time itself or
one of those instants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    TIME_TOL,
    InfeasibleError,
    NetworkConfig,
    UserState,
    earliest_rate_time,
    min_power_for_rate,
)


@dataclass(frozen=True)
class MlsSlot:
    user_id: int
    start: float
    end: float
    rate_index: int
    power: float
    duration: float

    def __post_init__(self):
        if self.end != self.start + self.duration:
            raise ValueError("slot end must equal start + duration")

    def delayed(self, start: float) -> "MlsSlot":
        """The same transmission (rate, power, duration) moved to ``start``."""
        return MlsSlot(self.user_id, start, start + self.duration, self.rate_index, self.power, self.duration)


@dataclass(frozen=True)
class UserProfile:
    """Per-user rate ladder, precomputed once so slot queries are cheap.

    ``times[k]`` is the earliest affordable start for level ``k`` or ``None``;
    ``durations`` and ``powers`` are per level.
    """

    user: UserState
    times: tuple[Optional[float], ...]
    durations: tuple[float, ...]
    powers: tuple[float, ...]

    @classmethod
    def build(cls, user: UserState, config: NetworkConfig) -> "UserProfile":
        m = config.rates.count
        return cls(
            user,
            tuple(earliest_rate_time(user, k, config) for k in range(m)),
            tuple(user.demand / r for r in config.rates.rates),
            tuple(min_power_for_rate(k, user.g_up, config) for k in range(m)),
        )

    @property
    def feasible(self) -> bool:
        return any(t is not None for t in self.times)

    def rate_at(self, s: float) -> Optional[int]:
        best = None
        for k, t in enumerate(self.times):
            if t is not None and t <= s:
                best = k
        return best

    def candidates(self, t_dec: float) -> list[float]:
        """Start times worth evaluating at decision time ``t_dec``, ascending."""
        starts = {t for t in self.times if t is not None and t > t_dec}
        if self.rate_at(t_dec) is not None:
            starts.add(t_dec)
        return sorted(starts)

    def slot(self, t_dec: float) -> MlsSlot:
        if t_dec < 0:
            raise ValueError("decision time must be non-negative")
        best_start = best_end = best_k = None
        for s in self.candidates(t_dec):
            k = self.rate_at(s)
            e = s + self.durations[k]
            # Candidates are ascending, so a tie keeps the earlier start.
            if best_end is None or e < best_end - TIME_TOL:
                best_start, best_end, best_k = s, e, k
        if best_k is None:
            raise InfeasibleError(self.user.id, "no rate level is ever affordable")
        return MlsSlot(
            self.user.id,
            best_start,
            best_end,
            best_k,
            self.powers[best_k],
            self.durations[best_k],
        )


def mls_slot(user: UserState, t_dec: float, config: NetworkConfig) -> MlsSlot:
    """MLS slot of ``user`` for a scheduling decision taken at ``t_dec``.

    Raises :class:`InfeasibleError` if the user can never transmit.
    """
    return UserProfile.build(user, config).slot(t_dec)
