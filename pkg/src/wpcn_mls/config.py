"""Flat ``key = value`` configuration files.

Lines look like ``p_hap = 1.0``; ``#`` starts a comment. Lists (``rates``,
``sinr_thresholds``) are comma separated. Unknown keys are rejected. An empty
``sinr_thresholds`` means "derive from the Shannon relation at ``bandwidth``".

Units: watts, hertz, metres, bits, joules, seconds. ``noise_density_dbm_hz``
is in dBm/Hz, ``sigma_db`` is the shadowing standard deviation in dB, and
``beta`` is the linear self-interference coefficient (-80 dB = 1e-8).
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .model import EhCircuit, NetworkConfig, RateTable, dbm_to_watt
from .netgen import PathLossParams, ScenarioConfig

DEFAULTS: dict[str, Any] = {
    # network
    "p_hap": 1.0,
    "p_max": 0.1,
    "noise_density_dbm_hz": -174.0,
    "beta": 1e-8,
    "bandwidth": 1e6,
    "p_sat": 7e-3,
    "a_coef": 1500.0,
    "b_thresh": 0.0022,
    "eta": 1.0,
    "rates": [10e3, 20e3, 30e3, 40e3, 50e3],
    "sinr_thresholds": [],
    # scenario
    "n_users": 10,
    "radius": 5.0,
    "demand_min": 100.0,
    "demand_max": 10000.0,
    "battery_init": 0.0,
    "pl0_db": 30.0,
    "d0": 1.0,
    "alpha": 2.76,
    "sigma_db": 4.0,
    "seed": 1,
}

LIST_KEYS = {"rates", "sinr_thresholds"}


class ConfigError(ValueError):
    pass


def _coerce(key: str, raw: Any) -> Any:
    default = DEFAULTS[key]
    if key in LIST_KEYS:
        if isinstance(raw, str):
            items = [p.strip() for p in raw.split(",") if p.strip()]
        else:
            items = list(raw)
        return [float(v) for v in items]
    if isinstance(default, int):
        return int(raw)
    return float(raw)


def parse_config(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse config text into a dict of explicitly set keys."""
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return out


def load_config(path: Union[str, Path, None] = None, overrides: Optional[Mapping[str, Any]] = None) -> dict[str, Any]:
    """Defaults, then the file at ``path``, then ``overrides`` (``None`` values ignored)."""
    settings = {k: (list(v) if isinstance(v, list) else v) for k, v in DEFAULTS.items()}
    if path is not None:
        settings.update(parse_config(Path(path).read_text(encoding="utf-8"), str(path)))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}")
        try:
            settings[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return settings


def config_hash(settings: Mapping[str, Any]) -> str:
    """Short SHA-256 over the canonical ``key=value`` rendering."""
    canon = "\n".join(f"{k}={format_value(settings[k])}" for k in sorted(settings))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def format_value(value: Any) -> str:
    if isinstance(value, list):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rate_table(settings: Mapping[str, Any]) -> RateTable:
    rates = settings["rates"]
    sinrs = settings["sinr_thresholds"]
    if not sinrs:
        return RateTable.shannon(rates, settings["bandwidth"])
    return RateTable(tuple(rates), tuple(sinrs))


def network_config(settings: Mapping[str, Any]) -> NetworkConfig:
    try:
        return NetworkConfig(
            p_hap=settings["p_hap"],
            p_max=settings["p_max"],
            noise_density=dbm_to_watt(settings["noise_density_dbm_hz"]),
            beta=settings["beta"],
            bandwidth=settings["bandwidth"],
            circuit=EhCircuit(
                settings["p_sat"], settings["a_coef"], settings["b_thresh"], settings["eta"]
            ),
            rates=rate_table(settings),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def scenario_config(settings: Mapping[str, Any]) -> ScenarioConfig:
    try:
        return ScenarioConfig(
            n_users=settings["n_users"],
            radius=settings["radius"],
            demand_range=(settings["demand_min"], settings["demand_max"]),
            battery_init=settings["battery_init"],
            seed=settings["seed"],
            path_loss=PathLossParams(
                settings["pl0_db"], settings["d0"], settings["alpha"], settings["sigma_db"]
            ),
            network=network_config(settings),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
