"""Random network realizations around a single HAP.

Random streams come from numpy's PCG64 seeded through ``SeedSequence``.
Every user draws from its own child stream, ``SeedSequence(seed,
spawn_key=(user_index,))``, so a user's draws do not depend on how many other
users exist or on the order in which they are generated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO, Union

import numpy as np

from .model import NetworkConfig, UserState, harvest_rate


@dataclass(frozen=True)
class PathLossParams:
    """Log-distance path loss with log-normal shadowing (``sigma_db`` in dB)."""

    pl0_db: float = 30.0
    d0: float = 1.0
    alpha: float = 2.76
    sigma_db: float = 4.0

    def __post_init__(self):
        if not self.d0 > 0:
            raise ValueError("d0 must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.sigma_db >= 0:
            raise ValueError("sigma_db must be non-negative")

    def mean_loss_db(self, distance: float) -> float:
        return self.pl0_db + 10.0 * self.alpha * math.log10(distance / self.d0)


@dataclass(frozen=True)
class ScenarioConfig:
    n_users: int = 10
    radius: float = 5.0
    demand_range: tuple[float, float] = (100.0, 10000.0)
    battery_init: float = 0.0
    seed: int = 0
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    network: NetworkConfig = field(default_factory=NetworkConfig)

    def __post_init__(self):
        if self.n_users < 0:
            raise ValueError("n_users must be non-negative")
        if not self.radius > self.path_loss.d0:
            raise ValueError("radius must exceed the reference distance d0")
        lo, hi = self.demand_range
        if not (0 < lo <= hi):
            raise ValueError("demand_range must be positive and ordered")
        if not self.battery_init >= 0:
            raise ValueError("battery_init must be non-negative")

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=int(seed))


def _rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=keys)))


def channel_gain(
    distance: float,
    params: PathLossParams,
    rng: np.random.Generator,
    fading: bool = True,
) -> float:
    """One linear power gain: path loss, shadowing and Rayleigh fading.

    Rayleigh amplitude fading makes the received power exponential with the
    large-scale mean; ``fading=False`` returns that mean instead of a draw.
    """
    if distance < params.d0:
        raise ValueError("distance must be at least d0")
    z = rng.normal(0.0, params.sigma_db) if params.sigma_db > 0 else 0.0
    mean = 10.0 ** (-(params.mean_loss_db(distance) + z) / 10.0)
    return mean * rng.exponential(1.0) if fading else mean


@dataclass(frozen=True)
class PlacedUser:
    """A generated user together with its position (HAP at the origin)."""

    x: float
    y: float
    state: UserState


def place_users(cfg: ScenarioConfig) -> list[PlacedUser]:
    """Draw positions, channels and demands for every user of ``cfg``.

    Users are area-uniform in the annulus ``[d0, radius]``. Uplink and downlink
    share distance and shadowing but have independent fading.
    """
    pl = cfg.path_loss
    lo, hi = cfg.demand_range
    out = []
    for i in range(cfg.n_users):
        rng = _rng(cfg.seed, i)
        d = math.sqrt(rng.uniform(pl.d0**2, cfg.radius**2))
        theta = rng.uniform(0.0, 2.0 * math.pi)
        z = rng.normal(0.0, pl.sigma_db) if pl.sigma_db > 0 else 0.0
        mean = 10.0 ** (-(pl.mean_loss_db(d) + z) / 10.0)
        g_up = mean * rng.exponential(1.0)
        h_down = mean * rng.exponential(1.0)
        if lo == hi:
            demand = float(lo)
        else:
            demand = float(rng.integers(math.ceil(lo), math.floor(hi), endpoint=True))
        state = UserState(
            i, g_up, h_down, float(cfg.battery_init), demand, harvest_rate(h_down, cfg.network)
        )
        out.append(PlacedUser(d * math.cos(theta), d * math.sin(theta), state))
    return out


def generate_realization(cfg: ScenarioConfig) -> list[UserState]:
    """Users of one random network; fully determined by ``cfg`` (incl. its seed)."""
    return [p.state for p in place_users(cfg)]


INSTANCE_COLUMNS = ("id", "x", "y", "g_up", "h_down", "battery", "demand")


class InstanceFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def write_instance(
    placed: Iterable[PlacedUser],
    dest: Union[str, Path, TextIO],
    comments: Sequence[str] = (),
) -> None:
    """Write users one per line as comma-separated ``INSTANCE_COLUMNS``.

    Floats use ``repr`` so a read-back reproduces them bit for bit.
    """
    lines = [f"# {c}" for c in comments]
    lines.append("# " + ",".join(INSTANCE_COLUMNS))
    for p in placed:
        u = p.state
        lines.append(
            ",".join(
                [str(u.id)]
                + [repr(float(v)) for v in (p.x, p.y, u.g_up, u.h_down, u.battery, u.demand)]
            )
        )
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)


def read_instance(
    source: Union[str, Path, TextIO], config: NetworkConfig
) -> list[PlacedUser]:
    """Parse an instance file; harvest rates are recomputed from ``config``."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    out = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != len(INSTANCE_COLUMNS):
            raise InstanceFormatError(
                lineno, f"expected {len(INSTANCE_COLUMNS)} fields, got {len(parts)}"
            )
        try:
            uid = int(parts[0])
            x, y, g, h, b, dem = (float(v) for v in parts[1:])
        except ValueError as exc:
            raise InstanceFormatError(lineno, str(exc)) from None
        if uid in seen:
            raise InstanceFormatError(lineno, f"duplicate user id {uid}")
        seen.add(uid)
        try:
            state = UserState.create(uid, g, h, b, dem, config)
        except ValueError as exc:
            raise InstanceFormatError(lineno, str(exc)) from None
        out.append(PlacedUser(x, y, state))
    return out


__all__ = [
    "PathLossParams",
    "ScenarioConfig",
    "PlacedUser",
    "channel_gain",
    "place_users",
    "generate_realization",
    "write_instance",
    "read_instance",
    "InstanceFormatError",
    "INSTANCE_COLUMNS",
]
