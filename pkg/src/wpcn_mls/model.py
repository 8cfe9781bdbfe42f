"""Physical layer of the full-duplex WPCN: harvesting, rate levels, affordability.

Every quantity is in SI units (W, J, s, bits, Hz). Channel gains are linear
power gains. Rate indices are 0-based throughout the package; index ``k``
refers to the (k+1)-th slowest rate level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

# Absolute tolerance on times (s) and relative tolerance on energies.
TIME_TOL = 1e-12
ENERGY_RTOL = 1e-9


class InfeasibleError(Exception):
    """A user can never complete its transmission under the given constraints."""

    def __init__(self, user_id: int, reason: str):
        super().__init__(f"user {user_id} is infeasible: {reason}")
        self.user_id = user_id
        self.reason = reason


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class RateTable:
    """Discrete (rate, SINR threshold) ladder, slowest level first.

    Besides both columns being strictly increasing, the energy per bit
    ``sinr / rate`` must be non-decreasing. Without it a faster level could be
    cheaper to reach than a slower one and the earliest-affordable times would
    stop being ordered.
    """

    rates: tuple[float, ...]
    sinr_thresholds: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        sinrs = tuple(float(g) for g in self.sinr_thresholds)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "sinr_thresholds", sinrs)
        if len(rates) == 0:
            raise ValueError("rate table needs at least one level")
        if len(rates) != len(sinrs):
            raise ValueError("rates and sinr_thresholds differ in length")
        if any(not (r > 0 and math.isfinite(r)) for r in rates + sinrs):
            raise ValueError("rates and SINR thresholds must be positive and finite")
        for k in range(1, len(rates)):
            if not rates[k] > rates[k - 1]:
                raise ValueError("rates must be strictly increasing")
            if not sinrs[k] > sinrs[k - 1]:
                raise ValueError("SINR thresholds must be strictly increasing")
            if sinrs[k] / rates[k] < sinrs[k - 1] / rates[k - 1] * (1 - 1e-12):
                raise ValueError(
                    f"energy per bit (sinr/rate) decreases between levels {k - 1} and {k}"
                )

    @classmethod
    def shannon(cls, rates: Sequence[float], bandwidth: float) -> "RateTable":
        """Thresholds from the Shannon relation ``gamma = 2**(r/W) - 1``."""
        rates = tuple(float(r) for r in rates)
        return cls(rates, tuple(math.expm1(r / bandwidth * math.log(2.0)) for r in rates))

    @classmethod
    def constant_rate(cls, sinr: float, bandwidth: float) -> "RateTable":
        """Single level whose rate is the Shannon rate at ``sinr``."""
        return cls((bandwidth * math.log2(1.0 + sinr),), (float(sinr),))

    @property
    def count(self) -> int:
        return len(self.rates)

    def __len__(self) -> int:
        return len(self.rates)


@dataclass(frozen=True)
class EhCircuit:
    """Logistic (saturating) RF-to-DC harvesting circuit.

    ``p_sat`` is the saturation output power, ``a_coef`` the steepness and
    ``b_thresh`` the turn-on input power. ``efficiency`` is a plain multiplier
    kept at 1 by default; the logistic fit already absorbs conversion loss.
    """

    p_sat: float = 7e-3
    a_coef: float = 1500.0
    b_thresh: float = 0.0022
    efficiency: float = 1.0
    omega: float = field(init=False)

    def __post_init__(self):
        if not self.p_sat > 0:
            raise ValueError("p_sat must be positive")
        if not self.a_coef > 0:
            raise ValueError("a_coef must be positive")
        if not self.b_thresh >= 0:
            raise ValueError("b_thresh must be non-negative")
        if not self.efficiency > 0:
            raise ValueError("efficiency must be positive")
        object.__setattr__(self, "omega", _logistic(-self.a_coef * self.b_thresh))


@dataclass(frozen=True)
class NetworkConfig:
    """Network-wide constants.

    The uplink noise power is always ``noise_density * bandwidth``; it is a
    derived property so the two can never disagree. ``beta`` is the linear
    residual self-interference coefficient (-80 dB -> 1e-8) applied to
    ``p_hap``.
    """

    p_hap: float = 1.0
    p_max: float = 0.1
    noise_density: float = dbm_to_watt(-174.0)
    beta: float = 1e-8
    bandwidth: float = 1e6
    circuit: EhCircuit = field(default_factory=EhCircuit)
    rates: Optional[RateTable] = None

    def __post_init__(self):
        for name in ("p_hap", "p_max", "noise_density", "bandwidth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")
        if self.rates is None:
            object.__setattr__(
                self,
                "rates",
                RateTable.shannon([10e3, 20e3, 30e3, 40e3, 50e3], self.bandwidth),
            )

    @property
    def noise_power(self) -> float:
        return self.noise_density * self.bandwidth

    @property
    def interference_floor(self) -> float:
        """Noise plus residual self-interference at the HAP receiver."""
        return self.noise_power + self.beta * self.p_hap


@dataclass(frozen=True)
class UserState:
    id: int
    g_up: float
    h_down: float
    battery: float
    demand: float
    harvest_rate: float

    def __post_init__(self):
        if not (self.g_up > 0 and self.h_down > 0):
            raise ValueError(f"user {self.id}: channel gains must be positive")
        if not self.battery >= 0:
            raise ValueError(f"user {self.id}: battery must be non-negative")
        if not self.demand > 0:
            raise ValueError(f"user {self.id}: demand must be positive")
        if not self.harvest_rate >= 0:
            raise ValueError(f"user {self.id}: harvest rate must be non-negative")

    @classmethod
    def create(
        cls,
        id: int,
        g_up: float,
        h_down: float,
        battery: float,
        demand: float,
        config: NetworkConfig,
    ) -> "UserState":
        """Build a user, deriving its harvest rate from the downlink gain."""
        return cls(
            int(id),
            float(g_up),
            float(h_down),
            float(battery),
            float(demand),
            harvest_rate(h_down, config),
        )


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def harvest_rate(h_down: float, config: NetworkConfig) -> float:
    """Harvested DC power (W) for downlink gain ``h_down``.

    Uses the rearrangement ``P_s * psi * (1 - exp(-A*x))`` of
    ``P_s * (psi - omega) / (1 - omega)`` with ``x = h * P_h``; the two are
    algebraically equal but the direct form cancels catastrophically for weak
    channels.
    """
    c = config.circuit
    x = h_down * config.p_hap
    psi = _logistic(c.a_coef * (x - c.b_thresh))
    return c.efficiency * c.p_sat * psi * -math.expm1(-c.a_coef * x)


def min_power_for_rate(k: int, g_up: float, config: NetworkConfig) -> float:
    """Smallest transmit power meeting the SINR threshold of level ``k``."""
    return config.rates.sinr_thresholds[k] * config.interference_floor / g_up


def rate_feasible(k: int, user: UserState, config: NetworkConfig) -> bool:
    return min_power_for_rate(k, user.g_up, config) <= config.p_max


def transmission_time(user: UserState, k: int, config: NetworkConfig) -> float:
    """Time needed to deliver the whole demand at rate level ``k``."""
    return user.demand / config.rates.rates[k]


def _earliest_time(battery: float, c: float, p: float, tau: float) -> Optional[float]:
    deficit = (p - c) * tau - battery
    if p <= c or deficit <= 0:
        return 0.0
    if c <= 0:
        return None
    return deficit / c


def earliest_rate_time(user: UserState, k: int, config: NetworkConfig) -> Optional[float]:
    """First instant at which ``user`` can afford rate level ``k``.

    Returns the smallest ``s >= 0`` with
    ``battery + C * (s + tau_k) >= P_k * tau_k``, or ``None`` when level
    ``k`` is never affordable (power cap exceeded, or no harvesting and too
    little stored energy).
    """
    p = min_power_for_rate(k, user.g_up, config)
    if p > config.p_max:
        return None
    return _earliest_time(user.battery, user.harvest_rate, p, transmission_time(user, k, config))


def earliest_rate_times(user: UserState, config: NetworkConfig) -> list[Optional[float]]:
    return [earliest_rate_time(user, k, config) for k in range(config.rates.count)]


def max_rate_at(user: UserState, s: float, config: NetworkConfig) -> Optional[int]:
    """Highest rate level affordable when starting at ``s``; ``None`` if none is."""
    if s < 0:
        raise ValueError("start time must be non-negative")
    best = None
    for k, t in enumerate(earliest_rate_times(user, config)):
        if t is not None and t <= s:
            best = k
    return best
