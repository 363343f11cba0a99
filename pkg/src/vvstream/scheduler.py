"""Layered video scheduling onto the per-interval playback grid.

The grid has one column per arrival interval and one row per video layer.
Row q's capacities equal row (q-1)'s fills, so enhancement data is only
scheduled where the layer below already plays. The back-compensation
strategy first lets every block consume its own arrival budget, then
patches the remaining holes from earlier arrivals' leftovers, walking
blocks back to front and donors newest-first; earlier data may serve later
playback but never the reverse.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

from .model import CLUSTER, ONE_HOP, RELAY_AIDED, EncounterTimeline, ScenarioConfig
from .traffic import RngStream, sample_cluster

_EPS = 1e-9


class GridError(ValueError):
    pass


class LedgerError(ValueError):
    pass


@dataclass
class PlaybackGrid:
    """Capacities and fills (seconds of playback) per layer and block."""

    caps: list[list[float]]       # [layer][block]
    fills: list[list[float]]      # [layer][block]
    layer_rates: tuple[float, ...]
    enh_alignment: str = "left"   # "right" once the variation-smoothing pass ran

    @property
    def L(self) -> int:
        return len(self.caps)

    @property
    def n_blocks(self) -> int:
        return len(self.caps[0])

    def layer_total(self, q: int) -> float:
        return math.fsum(self.fills[q])

    def validate(self) -> None:
        for q in range(self.L):
            for i in range(self.n_blocks):
                if not -_EPS <= self.fills[q][i] <= self.caps[q][i] + _EPS:
                    raise GridError(f"fill out of range at layer {q + 1}, block {i}")
                if q + 1 < self.L and abs(self.caps[q + 1][i] - self.fills[q][i]) > _EPS:
                    raise GridError(f"capacity of layer {q + 2} does not match fill of layer {q + 1} at block {i}")
                if q + 1 < self.L and self.fills[q + 1][i] > self.fills[q][i] + _EPS:
                    raise GridError(f"layer hierarchy violated at block {i}")

    def to_dict(self) -> dict:
        return {
            "layers": [
                [{"cap": self.caps[q][i], "fill": self.fills[q][i]} for i in range(self.n_blocks)]
                for q in range(self.L)
            ],
            "enh_alignment": self.enh_alignment,
        }


@dataclass
class FillLedger:
    """Who filled what: per-cell (source, seconds) contributions plus leftovers."""

    budgets: tuple[float, ...]
    layer_rates: tuple[float, ...]
    remaining: list[float]
    contributions: list[list[list[tuple[int, float]]]]   # [layer][block] -> [(source, seconds)]

    def consumed(self, j: int) -> float:
        return self.budgets[j] - self.remaining[j]

    def validate(self) -> None:
        spent = math.fsum(
            sec * self.layer_rates[q]
            for q in range(len(self.contributions))
            for cell in self.contributions[q]
            for (_, sec) in cell
        )
        total = math.fsum(self.budgets)
        left = math.fsum(self.remaining)
        scale = max(total, 1.0)
        if abs(spent + left - total) > 1e-6 * scale:
            raise LedgerError("ledger does not conserve data")
        for q, layer in enumerate(self.contributions):
            for i, cell in enumerate(layer):
                for src, _sec in cell:
                    if src > i:
                        raise LedgerError(f"acausal contribution: source {src} feeds block {i}")

    def to_dict(self) -> dict:
        return {
            "remaining": list(self.remaining),
            "contributions": [
                [[[src, sec] for (src, sec) in cell] for cell in layer]
                for layer in self.contributions
            ],
        }


def bc_schedule(budgets, intervals, layer_rates, dress: bool = True) -> tuple[PlaybackGrid, FillLedger]:
    """Back-compensation scheduling of arrival budgets onto the grid.

    Per layer: every block first spends its own leftover budget; then the
    blocks are swept back to front, and each hole is topped up from donor
    blocks j < i, newest donor first. Fills of layer q become capacities of
    layer q+1. Stops early once every budget is exhausted. Ends with the
    right-alignment pass unless dress=False.
    """
    D = [float(b) for b in budgets]
    t = [float(x) for x in intervals]
    rates = tuple(float(r) for r in layer_rates)
    if len(D) != len(t):
        raise ValueError("budgets and intervals must have equal length")
    if any(b < 0 for b in D) or any(x < 0 for x in t) or any(r <= 0 for r in rates):
        raise ValueError("budgets and intervals must be nonnegative, rates positive")

    n1 = len(t)
    L = len(rates)
    caps: list[list[float]] = [list(t)]
    fills: list[list[float]] = []
    contributions: list[list[list[tuple[int, float]]]] = []

    for q in range(L):
        r = rates[q]
        cap = caps[q]
        fill = [0.0] * n1
        contrib: list[list[tuple[int, float]]] = [[] for _ in range(n1)]

        for i in range(n1):
            need = r * cap[i]
            if D[i] >= need:
                fill[i] = cap[i]
                D[i] -= need
            elif D[i] > 0.0:
                fill[i] = D[i] / r
                D[i] = 0.0
            if fill[i] > 0.0:
                contrib[i].append((i, fill[i]))

        donors = [j for j in range(n1) if D[j] > 0.0]   # ascending indices with leftovers
        for i in range(n1 - 1, -1, -1):
            if fill[i] >= cap[i]:
                continue
            pos = bisect_left(donors, i) - 1
            while pos >= 0:
                j = donors[pos]
                hole = (cap[i] - fill[i]) * r
                if D[j] >= hole:
                    D[j] -= hole
                    contrib[i].append((j, cap[i] - fill[i]))
                    fill[i] = cap[i]
                    if D[j] <= 0.0:
                        donors.pop(pos)
                    break
                got = D[j] / r
                if got > 0.0:
                    contrib[i].append((j, got))
                    fill[i] += got
                D[j] = 0.0
                donors.pop(pos)
                pos -= 1

        fills.append(fill)
        contributions.append(contrib)
        if q + 1 < L:
            caps.append(list(fill))
        if not donors:
            break

    while len(fills) < L:   # budgets ran out before the top layer
        fills.append([0.0] * n1)
        contributions.append([[] for _ in range(n1)])
    caps = [list(t)] + [list(fills[q - 1]) for q in range(1, L)]

    grid = PlaybackGrid(caps=caps, fills=fills, layer_rates=rates)
    ledger = FillLedger(budgets=tuple(float(b) for b in budgets),
                        layer_rates=rates, remaining=D, contributions=contributions)
    if dress:
        grid, ledger = dress_right(grid, ledger)
    return grid, ledger


def dress_right(grid: PlaybackGrid, ledger: FillLedger) -> tuple[PlaybackGrid, FillLedger]:
    """Shift each enhancement layer's fill to the latest playable positions.

    Layer q's total fill is preserved but becomes the measure-F_q suffix of
    layer (q-1)'s coverage, processed bottom-up so the nesting survives.
    The base layer never moves, so data still only moves to later playback
    positions. Capacities above the base are re-derived from the shifted
    fills. Bounds quality variation by concentrating each upgrade in one
    trailing stretch.
    """
    n1 = grid.n_blocks
    L = grid.L
    new_caps = [list(grid.caps[0])]
    new_fills = [list(grid.fills[0])]
    new_contrib = [[list(cell) for cell in ledger.contributions[0]]]
    cov_prev = new_fills[0]

    for q in range(1, L):
        total = math.fsum(grid.fills[q])
        new_caps.append(list(cov_prev))
        fill = [0.0] * n1
        rem = total
        for i in range(n1 - 1, -1, -1):
            if rem <= 0.0:
                break
            take = min(cov_prev[i], rem)
            fill[i] = take
            rem -= take
        pool = [(src, sec) for cell in ledger.contributions[q] for (src, sec) in cell]
        contrib: list[list[tuple[int, float]]] = [[] for _ in range(n1)]
        k = 0
        for i in range(n1):
            need = fill[i]
            while need > _EPS and k < len(pool):
                src, sec = pool[k]
                take = min(sec, need)
                contrib[i].append((src, take))
                need -= take
                if take >= sec - _EPS * max(sec, 1.0):
                    k += 1
                else:
                    pool[k] = (src, sec - take)
        new_fills.append(fill)
        new_contrib.append(contrib)
        cov_prev = fill

    dressed = PlaybackGrid(caps=new_caps, fills=new_fills,
                           layer_rates=grid.layer_rates, enh_alignment="right")
    new_ledger = FillLedger(budgets=ledger.budgets, layer_rates=ledger.layer_rates,
                            remaining=list(ledger.remaining), contributions=new_contrib)
    return dressed, new_ledger


def greedy_schedule(budgets, intervals, layer_rates) -> tuple[PlaybackGrid, FillLedger]:
    """Spend each interval's budget on that interval only, layer by layer.

    Unspent data carries forward to the next block; nothing is ever placed
    into an earlier block and no alignment pass runs.
    """
    D_in = [float(b) for b in budgets]
    t = [float(x) for x in intervals]
    rates = tuple(float(r) for r in layer_rates)
    if len(D_in) != len(t):
        raise ValueError("budgets and intervals must have equal length")
    n1 = len(t)
    L = len(rates)
    caps: list[list[float]] = [list(t)] + [[0.0] * n1 for _ in range(L - 1)]
    fills: list[list[float]] = [[0.0] * n1 for _ in range(L)]
    contributions: list[list[list[tuple[int, float]]]] = [
        [[] for _ in range(n1)] for _ in range(L)
    ]
    pool: list[list[float]] = []    # FIFO [source, bits-left]
    remaining = [0.0] * n1

    for i in range(n1):
        if D_in[i] > 0.0:
            pool.append([i, D_in[i]])
        for q in range(L):
            cap_qi = t[i] if q == 0 else fills[q - 1][i]
            if q > 0:
                caps[q][i] = cap_qi
            avail = sum(bits for _, bits in pool)
            take = min(cap_qi, avail / rates[q]) if avail > 0.0 else 0.0
            if take <= 0.0:
                continue
            fills[q][i] = take
            need = take * rates[q]
            while need > 0.0 and pool:
                src, bits = pool[0]
                if bits > need:
                    pool[0][1] = bits - need
                    contributions[q][i].append((src, need / rates[q]))
                    need = 0.0
                else:
                    contributions[q][i].append((src, bits / rates[q]))
                    need -= bits
                    pool.pop(0)

    for src, bits in pool:
        remaining[src] = bits
    grid = PlaybackGrid(caps=caps, fills=fills, layer_rates=rates)
    ledger = FillLedger(budgets=tuple(float(b) for b in budgets),
                        layer_rates=rates, remaining=remaining, contributions=contributions)
    return grid, ledger


def schedule_timeline(timeline: EncounterTimeline, layer_rates, strategy: str) -> tuple[PlaybackGrid, FillLedger]:
    from .model import BC, GREEDY
    if strategy == BC:
        return bc_schedule(timeline.budgets, timeline.intervals, layer_rates)
    if strategy == GREEDY:
        return greedy_schedule(timeline.budgets, timeline.intervals, layer_rates)
    raise ValueError(f"unknown strategy {strategy!r}")


def relay_aided_timeline(cfg: ScenarioConfig, mode: str = ONE_HOP, rng: RngStream | None = None) -> EncounterTimeline:
    """Baseline timeline without opposite-direction carriers.

    The target receives only while an RSU is reachable directly (coverage
    window 2*R_u) or, in cluster mode, through same-direction relays that
    extend the window by the cluster length (capped by the road segment).
    """
    if rng is None:
        rng = RngStream(cfg.master_seed)
    T = cfg.period
    cluster_size = None
    if mode == ONE_HOP:
        window = 2.0 * cfg.R_u
    elif mode == CLUSTER:
        cluster_size = sample_cluster(cfg.rho1, cfg.R_v, rng).C_s
        window = 2.0 * cfg.R_u + min(cluster_size, cfg.d - 2.0 * cfg.R_u)
    else:
        raise ValueError(f"unknown relay-aided variant {mode!r}")
    d0 = window * cfg.r_u / cfg.v1
    return EncounterTimeline(
        mode=RELAY_AIDED, period=T,
        budgets=(d0,), intervals=(T,),
        encounters=(), cluster_size=cluster_size,
    )


@dataclass(frozen=True)
class AllocationSegment:
    source: int
    layer: int
    block: int
    start_bit: float
    end_bit: float

    @property
    def bits(self) -> float:
        return self.end_bit - self.start_bit


@dataclass
class AllocationPlan:
    """Playback-ordered assignment of the encoded stream to its delivery links."""

    segments: list[AllocationSegment]

    def totals_by_source(self) -> dict[int, float]:
        totals: dict[int, float] = {}
        for seg in self.segments:
            totals[seg.source] = totals.get(seg.source, 0.0) + seg.bits
        return totals

    @property
    def total_bits(self) -> float:
        return math.fsum(seg.bits for seg in self.segments)

    def to_dict(self) -> dict:
        return {
            "plan": [{"source": seg.source, "bits": seg.bits} for seg in self.segments],
            "segments": [
                {"source": seg.source, "layer": seg.layer + 1, "block": seg.block,
                 "start_bit": seg.start_bit, "end_bit": seg.end_bit}
                for seg in self.segments
            ],
            "totals_by_source": {str(k): v for k, v in sorted(self.totals_by_source().items())},
        }


def allocate_to_links(ledger: FillLedger, timeline: EncounterTimeline | None = None) -> AllocationPlan:
    """Serialize the scheduled grid into contiguous stream ranges per source.

    Ranges follow playback order (block by block, base layer first inside a
    block). Source 0 is the upstream RSU; source i >= 1 the i-th carrier.
    Rejects ledgers whose contributions do not conserve the budgets.
    """
    ledger.validate()
    if timeline is not None:
        if len(timeline.budgets) != len(ledger.budgets):
            raise LedgerError("timeline and ledger disagree on source count")
        for a, b in zip(timeline.budgets, ledger.budgets):
            if abs(a - b) > 1e-6 * max(abs(a), 1.0):
                raise LedgerError("timeline and ledger disagree on budgets")
    n1 = len(ledger.contributions[0]) if ledger.contributions else 0
    segments: list[AllocationSegment] = []
    offset = 0.0
    for i in range(n1):
        for q in range(len(ledger.contributions)):
            for src, sec in ledger.contributions[q][i]:
                bits = sec * ledger.layer_rates[q]
                if bits <= 0.0:
                    continue
                segments.append(AllocationSegment(
                    source=src, layer=q, block=i,
                    start_bit=offset, end_bit=offset + bits))
                offset += bits
    plan = AllocationPlan(segments=segments)
    totals = plan.totals_by_source()
    for j in range(len(ledger.budgets)):
        expect = ledger.consumed(j)
        got = totals.get(j, 0.0)
        if abs(expect - got) > 1e-6 * max(expect, 1.0):
            raise LedgerError(f"allocation for source {j} does not match ledger consumption")
    return plan
