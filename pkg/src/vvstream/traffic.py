"""Stochastic carrier streams, target clusters, and per-period encounter timelines."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CLUSTER, ONE_HOP, CarrierEncounter, EncounterTimeline, ScenarioConfig
from . import linkbudget


@dataclass(frozen=True)
class RngStream:
    """Deterministic, splittable random stream.

    Identical (seed, stream_id) yields an identical draw sequence on every
    platform. `lane` selects independent substreams of the same logical
    stream (e.g. carrier gaps vs. cluster growth within one trial).
    """

    seed: int
    stream_id: int = 0

    def generator(self, lane: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, lane))
        return np.random.Generator(np.random.PCG64(ss))


def _generator(rng, lane: int = 0) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator(lane)
    return rng


@dataclass(frozen=True)
class ClusterSample:
    """The connected chain of same-direction vehicles containing the target."""

    C_s: float        # distance from first to last vehicle in the chain (m)
    n_vehicles: int


def sample_carrier_gaps(rho2: float, horizon: float, rng) -> np.ndarray:
    """Draw i.i.d. Exp(rho2) inter-carrier gaps until their sum first exceeds horizon.

    The returned array includes the gap that crosses the horizon. The first
    gap needs no special treatment: measured from an arbitrary roadside
    position, the distance to the next carrier is again Exp(rho2).
    """
    if rho2 <= 0 or horizon <= 0:
        raise ValueError("rho2 and horizon must be positive")
    gen = _generator(rng, lane=0)
    mean_count = horizon * rho2
    chunk = max(16, int(mean_count + 10.0 * math.sqrt(mean_count) + 10))
    gaps = gen.exponential(1.0 / rho2, size=chunk)
    total = gaps.sum()
    while total <= horizon:
        more = gen.exponential(1.0 / rho2, size=chunk)
        gaps = np.concatenate([gaps, more])
        total += more.sum()
    cum = np.cumsum(gaps)
    stop = int(np.searchsorted(cum, horizon, side="right"))
    return gaps[: stop + 1]


def sample_cluster(rho1: float, R_v: float, rng) -> ClusterSample:
    """Grow the target's cluster outward on both sides.

    On each side, Exp(rho1) gaps are accepted while they do not exceed the
    V2V range R_v; the first gap above R_v terminates that side. The chain
    length is the sum of accepted gaps over both sides.
    """
    if rho1 <= 0 or R_v <= 0:
        raise ValueError("rho1 and R_v must be positive")
    gen = _generator(rng, lane=1)
    span = 0.0
    count = 1
    for _side in range(2):
        while True:
            gap = gen.exponential(1.0 / rho1)
            if gap > R_v:
                break
            span += gap
            count += 1
    return ClusterSample(C_s=span, n_vehicles=count)


def sample_cluster_spans(rho1: float, R_v: float, size: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized bulk equivalent of sample_cluster.

    Returns (spans, vehicle counts) for `size` independent clusters, using
    the geometric-count / truncated-exponential-gap decomposition of the
    same growth process (distribution-identical to the scalar sampler).
    """
    if rho1 <= 0 or R_v <= 0:
        raise ValueError("rho1 and R_v must be positive")
    gen = _generator(rng, lane=1)
    p_stop = math.exp(-rho1 * R_v)
    # accepted gaps per sample, both sides: each side is (failures before
    # first gap > R_v) ~ Geometric(p_stop) counted from zero
    counts = (gen.geometric(p_stop, size=size) - 1) + (gen.geometric(p_stop, size=size) - 1)
    total = int(counts.sum())
    u = gen.uniform(size=total)
    # inverse CDF of Exp(rho1) truncated to (0, R_v]
    gaps = -np.log1p(-u * (1.0 - p_stop)) / rho1
    offsets = np.zeros(size, dtype=np.int64)
    np.cumsum(counts[:-1], out=offsets[1:])
    spans = np.zeros(size)
    nonzero = counts > 0
    if total:
        sums = np.add.reduceat(gaps, offsets[nonzero])
        spans[nonzero] = sums
    return spans, counts + 1


def _contact_window(gap: float, contact_cap: float, rel_speed: float) -> float:
    return min(gap, contact_cap) / rel_speed


def build_encounter_timeline(cfg: ScenarioConfig, mode: str = ONE_HOP, rng: RngStream | None = None) -> EncounterTimeline:
    """Generate one period of V2I + carrier encounters for the given scheme.

    The carrier phase starts once the target no longer receives from the
    infrastructure (directly, or via cluster relays in cluster mode), since
    V2I reception preempts V2V. Carriers approach at v1 + v2; a contact
    whose transfer would outlast the period is cut proportionally at the
    period end, where the next RSU takes over.
    """
    if rng is None:
        rng = RngStream(cfg.master_seed)
    T = cfg.period
    rel_speed = cfg.v1 + cfg.v2
    cluster_size = None

    if mode == ONE_HOP:
        d0 = linkbudget.v2i_budget_onehop(cfg)
        v2v_start = 2.0 * cfg.R_u / cfg.v1
        contact_cap = 2.0 * cfg.R_v
        budget_of = lambda gap: linkbudget.carrier_budget_onehop(gap, cfg)
    elif mode == CLUSTER:
        sample = sample_cluster(cfg.rho1, cfg.R_v, rng)
        cluster_size = sample.C_s
        relay_stretch = cluster_size * cfg.r_u / cfg.r_v
        # relayed data drains at the V2V rate; the road segment caps what fits
        usable = min(relay_stretch, cfg.d - 2.0 * cfg.R_u)
        d0 = (2.0 * cfg.R_u * cfg.r_u + usable * cfg.r_v) / cfg.v1
        v2v_start = (2.0 * cfg.R_u + relay_stretch) / cfg.v1
        contact_cap = cluster_size + 2.0 * cfg.R_v
        budget_of = lambda gap: linkbudget.carrier_budget_cluster(gap, cluster_size, cfg)
    else:
        raise ValueError(f"unknown timeline mode {mode!r}")

    encounters: list[CarrierEncounter] = []
    phase = T - v2v_start
    if phase > 0:
        horizon = phase * rel_speed
        gaps = sample_carrier_gaps(cfg.rho2, horizon, rng)
        position = 0.0
        for gap in gaps.tolist():
            position += gap
            meet = v2v_start + position / rel_speed
            if meet >= T:
                break
            budget = budget_of(gap)
            window = _contact_window(gap, contact_cap, rel_speed)
            if window > 0 and meet + window > T:
                budget *= (T - meet) / window
            encounters.append(CarrierEncounter(
                index=len(encounters) + 1, gap=gap, meet_time=meet, budget=budget))

    budgets = [d0] + [e.budget for e in encounters]
    meets = [e.meet_time for e in encounters]
    intervals: list[float] = []
    prev = 0.0
    for m in meets:
        intervals.append(m - prev)
        prev = m
    intervals.append(T - prev)
    return EncounterTimeline(
        mode=mode, period=T,
        budgets=tuple(budgets), intervals=tuple(intervals),
        encounters=tuple(encounters), cluster_size=cluster_size,
    )
