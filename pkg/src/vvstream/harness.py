"""Monte Carlo experiment runner: trials, aggregation, and analytic comparison."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import analytics
from .metrics import MetricsReport, report
from .model import (BC, CLUSTER, GREEDY, MODES, ONE_HOP, RELAY_AIDED,
                    STRATEGIES, ScenarioConfig, validate_config)
from .scheduler import relay_aided_timeline, schedule_timeline
from .traffic import RngStream, build_encounter_timeline

_Z95 = 1.959963984540054

CSV_HEADER = ("d,mode,strategy,trials,ir_mean,ir_ci,apq_mean,apq_ci,"
              "aqv_mean,aqv_ci,thr_sim_mean,thr_sim_ci,thr_analytic,rel_err")


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: a base scenario evaluated over inter-RSU distances."""

    config: ScenarioConfig
    d_values: tuple[float, ...]
    modes: tuple[str, ...] = (ONE_HOP, CLUSTER, RELAY_AIDED)
    strategies: tuple[str, ...] = (BC, GREEDY)
    trials: int = 2000
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "d_values", tuple(float(d) for d in self.d_values))
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown mode {m!r}")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}")
        for d in self.d_values:
            validate_config(self.config.with_d(d))


@dataclass(frozen=True)
class AggregateRow:
    d: float
    mode: str
    strategy: str
    trials: int
    ir_mean: float
    ir_ci: float
    apq_mean: float
    apq_ci: float
    aqv_mean: float
    aqv_ci: float
    thr_sim_mean: float
    thr_sim_ci: float
    thr_analytic: float
    rel_err: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "d", "mode", "strategy", "trials",
            "ir_mean", "ir_ci", "apq_mean", "apq_ci", "aqv_mean", "aqv_ci",
            "thr_sim_mean", "thr_sim_ci", "thr_analytic", "rel_err")}


def trial_stream(master_seed: int, d_index: int, mode: str, strategy: str, trial_index: int) -> RngStream:
    """Derive the independent stream of one trial from the experiment's master seed.

    The packing keys every (sweep point, mode, strategy, trial) cell to its
    own counter value, so any single trial can be re-run in isolation and
    results never depend on execution order.
    """
    mode_idx = MODES.index(mode)
    strat_idx = STRATEGIES.index(strategy)
    if not 0 <= trial_index < (1 << 32):
        raise ValueError("trial_index out of range")
    stream_id = (((d_index * 4 + mode_idx) * 4 + strat_idx) << 32) | trial_index
    return RngStream(seed=master_seed, stream_id=stream_id)


def run_trial(cfg: ScenarioConfig, mode: str, strategy: str, rng: RngStream) -> MetricsReport:
    """One simulated period: timeline generation, scheduling, metrics."""
    if mode == RELAY_AIDED:
        timeline = relay_aided_timeline(cfg, ONE_HOP, rng)
    else:
        timeline = build_encounter_timeline(cfg, mode, rng)
    grid, _ledger = schedule_timeline(timeline, cfg.layer_rates, strategy)
    return report(grid, timeline)


def run_cell(cfg: ScenarioConfig, mode: str, strategy: str, trials: int,
             master_seed: int, d_index: int = 0) -> list[MetricsReport]:
    """All trials of one (d, mode, strategy) cell, in trial order."""
    return [
        run_trial(cfg, mode, strategy, trial_stream(master_seed, d_index, mode, strategy, k))
        for k in range(trials)
    ]


def _mean_ci(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, _Z95 * math.sqrt(var / n)


def _analytic_throughput(cfg: ScenarioConfig, mode: str) -> float:
    if mode == ONE_HOP:
        return analytics.throughput_onehop(cfg).analytic_bps
    if mode == CLUSTER:
        return analytics.throughput_cluster(cfg).analytic_bps
    return analytics.throughput_relay_aided(cfg).analytic_bps


def aggregate_reports(reports: list[MetricsReport], d: float, mode: str, strategy: str,
                      thr_analytic: float) -> AggregateRow:
    ir_mean, ir_ci = _mean_ci([r.ir for r in reports])
    apq_mean, apq_ci = _mean_ci([r.apq for r in reports])
    aqv_mean, aqv_ci = _mean_ci([float(r.aqv) for r in reports])
    thr_mean, thr_ci = _mean_ci([r.sim_throughput for r in reports])
    return AggregateRow(
        d=d, mode=mode, strategy=strategy, trials=len(reports),
        ir_mean=ir_mean, ir_ci=ir_ci,
        apq_mean=apq_mean, apq_ci=apq_ci,
        aqv_mean=aqv_mean, aqv_ci=aqv_ci,
        thr_sim_mean=thr_mean, thr_sim_ci=thr_ci,
        thr_analytic=thr_analytic,
        rel_err=abs(thr_mean - thr_analytic) / thr_analytic,
    )


def _run_cell_task(args) -> tuple[int, list[MetricsReport]]:
    order, cfg, mode, strategy, trials, master_seed, d_index = args
    return order, run_cell(cfg, mode, strategy, trials, master_seed, d_index)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> list[AggregateRow]:
    """Run every cell of the sweep and aggregate.

    Trial seeds are pinned to cell coordinates, and cells are reduced in
    canonical (d, mode, strategy) order, so the output is byte-identical
    for any worker count.
    """
    tasks = []
    for d_index, d in enumerate(spec.d_values):
        cfg = spec.config.with_d(d)
        for mode in spec.modes:
            for strategy in spec.strategies:
                tasks.append((len(tasks), cfg, mode, strategy, spec.trials,
                              spec.master_seed, d_index))

    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_run_cell_task, tasks))
    else:
        results = dict(map(_run_cell_task, tasks))

    rows = []
    analytic_cache: dict[tuple[float, str], float] = {}
    for order, cfg, mode, strategy, trials, _seed, d_index in tasks:
        key = (cfg.d, mode)
        if key not in analytic_cache:
            analytic_cache[key] = _analytic_throughput(cfg, mode)
        rows.append(aggregate_reports(results[order], cfg.d, mode, strategy,
                                      analytic_cache[key]))
    return rows


def _fmt(x) -> str:
    return format(float(x), ".9g")


def render_csv(rows: list[AggregateRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            _fmt(r.d), r.mode, r.strategy, str(r.trials),
            _fmt(r.ir_mean), _fmt(r.ir_ci), _fmt(r.apq_mean), _fmt(r.apq_ci),
            _fmt(r.aqv_mean), _fmt(r.aqv_ci), _fmt(r.thr_sim_mean), _fmt(r.thr_sim_ci),
            _fmt(r.thr_analytic), _fmt(r.rel_err),
        ]))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list[AggregateRow]) -> str:
    payload = [
        {k: (float(_fmt(v)) if isinstance(v, float) else v) for k, v in r.to_dict().items()}
        for r in rows
    ]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class ComparisonTable:
    """Per-d metric series keyed by "metric:mode:strategy"."""

    d_values: tuple[float, ...]
    series: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"d_values": list(self.d_values),
                "series": {k: list(v) for k, v in sorted(self.series.items())}}


def compare_report(rows: list[AggregateRow]) -> ComparisonTable:
    """Line up cells on a common d-grid for scheme and strategy comparisons."""
    cells = sorted({(r.mode, r.strategy) for r in rows})
    if len(cells) < 2:
        raise ValueError("comparison needs at least two (mode, strategy) cells")
    by_cell: dict[tuple[str, str], dict[float, AggregateRow]] = {c: {} for c in cells}
    for r in rows:
        by_cell[(r.mode, r.strategy)][r.d] = r
    grids = {c: tuple(sorted(g)) for c, g in by_cell.items()}
    grid = next(iter(grids.values()))
    if any(g != grid for g in grids.values()):
        raise ValueError("cells cover mismatched d grids")
    series: dict[str, tuple[float, ...]] = {}
    for mode, strategy in cells:
        cell_rows = [by_cell[(mode, strategy)][d] for d in grid]
        for metric in ("ir_mean", "apq_mean", "aqv_mean", "thr_sim_mean", "thr_analytic", "rel_err"):
            label = metric.replace("_mean", "")
            series[f"{label}:{mode}:{strategy}"] = tuple(getattr(r, metric) for r in cell_rows)
    return ComparisonTable(d_values=grid, series=series)
