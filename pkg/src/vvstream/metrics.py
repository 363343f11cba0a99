"""Playback-quality and throughput metrics computed from a finished grid."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import EncounterTimeline
from .scheduler import PlaybackGrid

_EPS = 1e-9


@dataclass(frozen=True)
class MetricsReport:
    ir: float                # interrupted fraction of the period, in [0, 1]
    apq: float               # time-averaged number of playing layers, in [0, L]
    aqv: int                 # count of instantaneous quality-level changes
    sim_throughput: float    # received bits per second over the period


def quality_profile(grid: PlaybackGrid) -> list[tuple[float, int]]:
    """Instantaneous layer-count level over the period as (duration, level) runs.

    Level 0 marks interruptions. Within a block, fills sit at the block
    start; once the right-alignment pass ran, enhancement fill instead hugs
    the end of the block's base-covered span.
    """
    segments: list[tuple[float, int]] = []
    L = grid.L
    for i in range(grid.n_blocks):
        block_len = grid.caps[0][i]
        f = [grid.fills[q][i] for q in range(L)]
        if grid.enh_alignment == "right":
            # ascending staircase: 1 up to L, highest layers last
            for level in range(1, L + 1):
                upper = f[level] if level < L else 0.0
                segments.append((f[level - 1] - upper, level))
        else:
            # descending staircase: deepest stack plays first
            for level in range(L, 0, -1):
                lower = f[level] if level < L else 0.0
                segments.append((f[level - 1] - lower, level))
        segments.append((block_len - f[0], 0))
    merged: list[tuple[float, int]] = []
    for dur, level in segments:
        if dur <= _EPS:
            continue
        if merged and merged[-1][1] == level:
            merged[-1] = (merged[-1][0] + dur, level)
        else:
            merged.append((dur, level))
    return merged


def interruption_ratio(grid: PlaybackGrid, T: float) -> float:
    """Fraction of the period with no base layer to play."""
    return max(0.0, 1.0 - math.fsum(grid.fills[0]) / T)


def average_playback_quality(grid: PlaybackGrid, T: float) -> float:
    """Layer-seconds played per second of period."""
    return math.fsum(grid.fills[q][i] for q in range(grid.L) for i in range(grid.n_blocks)) / T


def average_quality_variation(grid: PlaybackGrid) -> int:
    """Number of times the instantaneous layer count changes over the period."""
    profile = quality_profile(grid)
    return sum(1 for a, b in zip(profile, profile[1:]) if a[1] != b[1])


def empirical_throughput(timeline: EncounterTimeline) -> float:
    """Bits received per second over one period, all links combined."""
    return math.fsum(timeline.budgets) / timeline.period


def report(grid: PlaybackGrid, timeline: EncounterTimeline) -> MetricsReport:
    T = timeline.period
    return MetricsReport(
        ir=interruption_ratio(grid, T),
        apq=average_playback_quality(grid, T),
        aqv=average_quality_variation(grid),
        sim_throughput=empirical_throughput(timeline),
    )
