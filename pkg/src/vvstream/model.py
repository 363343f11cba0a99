"""Scenario parameters and shared domain types for the bidirectional-highway model.

All internal units are SI: meters, seconds, bit/s. Rate fields in config files
and CLI overrides may carry a unit suffix ("2Mb/s", "537.9kb/s", "450Kbps");
they are converted to bit/s at parse time.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields, replace

ONE_HOP = "one-hop"
CLUSTER = "cluster"
RELAY_AIDED = "relay-aided"
MODES = (ONE_HOP, CLUSTER, RELAY_AIDED)

BC = "bc"
GREEDY = "greedy"
STRATEGIES = (BC, GREEDY)


class ConfigError(ValueError):
    """Raised when a scenario config violates one or more invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


_RATE_RE = re.compile(r"^\s*([+-]?[0-9.]+(?:[eE][+-]?[0-9]+)?)\s*([kKMG]?)b(?:/s|ps)\s*$")
_RATE_SCALE = {"": 1.0, "k": 1e3, "K": 1e3, "M": 1e6, "G": 1e9}


def parse_rate(value) -> float:
    """Parse a data rate given as a number (bit/s) or a suffixed string."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
        m = _RATE_RE.match(value)
        if m:
            return float(m.group(1)) * _RATE_SCALE[m.group(2)]
    raise ConfigError([f"cannot parse rate value {value!r}"])


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical parameters of one highway scenario.

    d: inter-RSU distance (m); R_u / R_v: RSU / vehicle radio range (m);
    r_u / r_v: V2I / V2V data rate (bit/s); rho1 / rho2: same- /
    opposite-direction vehicle density (veh/m); v1 / v2: target- /
    carrier-direction speed (m/s); layer_rates: per-layer video bit
    rates (bit/s), base layer first.
    """

    d: float
    R_u: float
    R_v: float
    r_u: float
    r_v: float
    rho1: float
    rho2: float
    v1: float
    v2: float
    layer_rates: tuple[float, ...]
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_rates", tuple(float(r) for r in self.layer_rates))

    @property
    def L(self) -> int:
        return len(self.layer_rates)

    @property
    def period(self) -> float:
        """Time for the target to travel from RSU entry to the next RSU's coverage."""
        return self.d / self.v1

    def with_d(self, d: float) -> "ScenarioConfig":
        return replace(self, d=float(d))

    def to_dict(self) -> dict:
        return {
            "d": self.d, "R_u": self.R_u, "R_v": self.R_v,
            "r_u": self.r_u, "r_v": self.r_v,
            "rho1": self.rho1, "rho2": self.rho2,
            "v1": self.v1, "v2": self.v2,
            "layer_rates": list(self.layer_rates),
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in unknown])
        missing = sorted(known - set(data) - {"master_seed"})
        if missing:
            raise ConfigError([f"missing config key {k!r}" for k in missing])
        rates = data["layer_rates"]
        if not isinstance(rates, (list, tuple)):
            raise ConfigError(["layer_rates must be a list"])
        kwargs = {
            "d": float(data["d"]),
            "R_u": float(data["R_u"]),
            "R_v": float(data["R_v"]),
            "r_u": parse_rate(data["r_u"]),
            "r_v": parse_rate(data["r_v"]),
            "rho1": float(data["rho1"]),
            "rho2": float(data["rho2"]),
            "v1": float(data["v1"]),
            "v2": float(data["v2"]),
            "layer_rates": tuple(parse_rate(r) for r in rates),
            "master_seed": int(data.get("master_seed", 0)),
        }
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))


def default_config(d: float = 2000.0, master_seed: int = 0) -> ScenarioConfig:
    """Reference highway scenario used throughout the test and acceptance suites."""
    return ScenarioConfig(
        d=d, R_u=400.0, R_v=200.0,
        r_u=2e6, r_v=1e6,
        rho1=0.007, rho2=0.005,
        v1=15.0, v2=20.0,
        layer_rates=(537.9e3, 420.3e3, 450.5e3),
        master_seed=master_seed,
    )


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check every config invariant; raise ConfigError naming each violation."""
    v: list[str] = []
    for name in ("d", "R_u", "R_v", "r_u", "r_v", "rho1", "rho2", "v1", "v2"):
        if not getattr(cfg, name) > 0:
            v.append(f"{name} must be strictly positive")
    if not cfg.R_u > cfg.R_v:
        v.append("R_u must exceed R_v")
    if not cfg.r_u > cfg.r_v:
        v.append("r_u must exceed r_v")
    if not cfg.d > 2 * cfg.R_u:
        v.append("d must exceed 2*R_u")
    if len(cfg.layer_rates) < 1:
        v.append("layer_rates must contain at least one layer")
    elif any(not r > 0 for r in cfg.layer_rates):
        v.append("layer_rates must all be positive")
    if not isinstance(cfg.master_seed, int):
        v.append("master_seed must be an integer")
    if v:
        raise ConfigError(v)
    return cfg


def load_config(path: str, overrides: dict | None = None) -> ScenarioConfig:
    """Load and validate a flat-JSON config file, applying key=value overrides."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"malformed config file (line {exc.lineno}): {exc.msg}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError(["config file must contain a flat JSON object"])
    if overrides:
        data.update(overrides)
    return validate_config(ScenarioConfig.from_dict(data))


@dataclass(frozen=True)
class CarrierEncounter:
    """One opposite-direction carrier met during the out-of-coverage phase."""

    index: int            # 1-based position in the meeting sequence
    gap: float            # distance to the previous carrier (m); first gap measured at coverage exit
    meet_time: float      # seconds from period start at which reception from this carrier begins
    budget: float         # bits actually delivered during the contact (after any period-end cut)


@dataclass(frozen=True)
class EncounterTimeline:
    """Per-period sequence of data budgets and the playback intervals they serve.

    budgets[0] is the infrastructure budget; budgets[i] (i >= 1) the i-th
    carrier's. intervals tile [0, period] exactly; interval i starts when
    reception of budgets[i] begins.
    """

    mode: str
    period: float
    budgets: tuple[float, ...]
    intervals: tuple[float, ...]
    encounters: tuple[CarrierEncounter, ...] = ()
    cluster_size: float | None = None

    @property
    def n(self) -> int:
        return len(self.budgets) - 1

    @property
    def total_data(self) -> float:
        return sum(self.budgets)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "period": self.period,
            "cluster_size": self.cluster_size,
            "budgets": list(self.budgets),
            "intervals": list(self.intervals),
            "encounters": [
                {"i": e.index, "l_i": e.gap, "meet_time": e.meet_time,
                 "D_i": e.budget, "t_i": self.intervals[e.index]}
                for e in self.encounters
            ],
        }
