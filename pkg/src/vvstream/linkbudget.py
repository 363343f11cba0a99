"""Deterministic data-budget formulas for V2I and V2V contacts."""
from __future__ import annotations

from dataclasses import dataclass

from .model import EncounterTimeline, ScenarioConfig


@dataclass(frozen=True)
class ContactBudget:
    """Supply/demand decomposition of one carrier contact."""

    supply: float     # bits the carrier picked up from the downstream RSU
    demand: float     # bits transferable to the target during the contact
    @property
    def effective(self) -> float:
        return min(self.supply, self.demand)


def v2i_budget_onehop(cfg: ScenarioConfig) -> float:
    """Bits received directly from the upstream RSU while crossing its coverage."""
    return 2.0 * cfg.R_u * cfg.r_u / cfg.v1


def carrier_supply(gap: float, cfg: ScenarioConfig) -> float:
    """Bits a carrier downloads from the downstream RSU before meeting the target.

    The download window is the carrier's headway over the previous carrier,
    capped by its own coverage crossing.
    """
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    return min(gap / cfg.v2, 2.0 * cfg.R_u / cfg.v2) * cfg.r_u


def carrier_demand_onehop(gap: float, cfg: ScenarioConfig) -> float:
    """Bits transferable during a single one-hop contact, ignoring the supply side."""
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    return min(gap, 2.0 * cfg.R_v) * cfg.r_v / (cfg.v1 + cfg.v2)


def carrier_budget_onehop(gap: float, cfg: ScenarioConfig) -> float:
    """Effective one-hop contact budget.

    With R_u > R_v and r_u > r_v the supply side never binds (see
    check_supply_sufficiency), so the demand term is the whole budget.
    """
    return carrier_demand_onehop(gap, cfg)


def v2i_budget_cluster(C_s: float, cfg: ScenarioConfig) -> float:
    """Bits from the upstream RSU, directly plus via cluster relays, for an unbounded road."""
    if C_s < 0:
        raise ValueError("C_s must be nonnegative")
    return (C_s + 2.0 * cfg.R_u) * cfg.r_u / cfg.v1


def carrier_budget_cluster(gap: float, C_s: float, cfg: ScenarioConfig) -> float:
    """Effective contact budget when the target sits in a cluster of length C_s.

    Three caps can bind: the carrier's RSU download, the carrier headway,
    and the cluster-extended contact window.
    """
    if gap < 0 or C_s < 0:
        raise ValueError("gap and C_s must be nonnegative")
    rel = cfg.v1 + cfg.v2
    return min(
        2.0 * cfg.R_u * cfg.r_u / cfg.v2,
        gap * cfg.r_v / rel,
        (C_s + 2.0 * cfg.R_v) * cfg.r_v / rel,
    )


@dataclass(frozen=True)
class SupplyCheck:
    """Per-carrier supply-vs-demand margins for a one-hop timeline."""

    margins: tuple[float, ...]
    violations: tuple[int, ...]     # 1-based carrier indices where demand exceeds supply

    @property
    def ok(self) -> bool:
        return not self.violations


def check_supply_sufficiency(timeline: EncounterTimeline, cfg: ScenarioConfig) -> SupplyCheck:
    """Recompute supply and demand for every carrier and report the margins.

    Margins must be nonnegative for every carrier whenever R_u > R_v and
    r_u > r_v; a negative margin flags a contact whose carrier would run
    out of data mid-transfer.
    """
    margins = []
    violations = []
    for enc in timeline.encounters:
        supply = carrier_supply(enc.gap, cfg)
        demand = carrier_demand_onehop(enc.gap, cfg)
        margin = supply - demand
        margins.append(margin)
        if margin < 0:
            violations.append(enc.index)
    return SupplyCheck(margins=tuple(margins), violations=tuple(violations))
