"""HTTP service exposing the analytics, simulator, and trace facilities."""
from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, analytics
from ..harness import (ExperimentSpec, compare_report, render_csv, run_experiment)
from ..model import ConfigError, EncounterTimeline, ONE_HOP, RELAY_AIDED
from ..scheduler import (allocate_to_links, bc_schedule, greedy_schedule,
                         relay_aided_timeline)
from ..traffic import RngStream, build_encounter_timeline
from .schemas import (AnalyzeRequest, AnalyzeResponse, AnalyzeRow, CaseMassOut,
                      ComparisonOut, HealthResponse, SimulateRequest,
                      SimulateResponse, SweepRequest, SweepResponse,
                      TraceRequest, TraceResponse)

DEFAULT_SWEEP = (2000.0, 4000.0, 6000.0, 8000.0, 10000.0)

_ANALYZE_CSV_HEADER = "d,mode,thr_analytic,c_s1,c_s2,case_masses"


def _fmt(x) -> str:
    return format(float(x), ".9g")


def create_app() -> FastAPI:
    app = FastAPI(title="vvstream", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(_request: Request, exc: ConfigError):
        return JSONResponse(status_code=422, content={"detail": exc.violations})

    @app.exception_handler(ValueError)
    async def _value_error(_request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": [str(exc)]})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(req: AnalyzeRequest):
        base = req.config.to_config()
        rows: list[AnalyzeRow] = []
        csv_lines = [_ANALYZE_CSV_HEADER]
        for d in req.d_values:
            cfg = base.with_d(d)
            for mode in req.modes:
                if mode == ONE_HOP:
                    rep = analytics.throughput_onehop(cfg)
                    c_s1 = c_s2 = None
                else:
                    rep = analytics.throughput_cluster(cfg)
                    c_s1, c_s2 = analytics.cs_thresholds(cfg)
                rows.append(AnalyzeRow(
                    d=d, mode=mode, thr_analytic=rep.analytic_bps,
                    c_s1=c_s1, c_s2=c_s2,
                    cases=[CaseMassOut(label=c.label, mass=c.mass,
                                       contribution_bps=c.contribution_bps)
                           for c in rep.cases],
                ))
                csv_lines.append(",".join([
                    _fmt(d), mode, _fmt(rep.analytic_bps),
                    _fmt(c_s1) if c_s1 is not None else "",
                    _fmt(c_s2) if c_s2 is not None else "",
                    ";".join(_fmt(c.mass) for c in rep.cases),
                ]))
        return AnalyzeResponse(rows=rows, csv="\n".join(csv_lines) + "\n")

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        cfg = req.config.to_config()
        seed = cfg.master_seed if req.seed is None else req.seed
        spec = ExperimentSpec(
            config=cfg,
            d_values=tuple(req.d_values) if req.d_values else (cfg.d,),
            modes=(req.mode,), strategies=(req.strategy,),
            trials=req.trials, master_seed=seed,
        )
        rows = run_experiment(spec, workers=req.workers)
        return SimulateResponse(rows=[r.to_dict() for r in rows], csv=render_csv(rows))

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest):
        cfg = req.config.to_config()
        seed = cfg.master_seed if req.seed is None else req.seed
        spec = ExperimentSpec(
            config=cfg,
            d_values=tuple(req.d_values) if req.d_values else DEFAULT_SWEEP,
            modes=tuple(req.modes), strategies=tuple(req.strategies),
            trials=req.trials, master_seed=seed,
        )
        rows = run_experiment(spec, workers=req.workers)
        comparison = None
        if len({(r.mode, r.strategy) for r in rows}) >= 2:
            table = compare_report(rows)
            comparison = ComparisonOut(d_values=list(table.d_values),
                                       series={k: list(v) for k, v in sorted(table.series.items())})
        return SweepResponse(rows=[r.to_dict() for r in rows], csv=render_csv(rows),
                             comparison=comparison)

    @app.post("/trace", response_model=TraceResponse)
    def trace(req: TraceRequest):
        if req.injected is not None:
            inj = req.injected
            if len(inj.budgets) != len(inj.intervals):
                raise ValueError("injected budgets and intervals must have equal length")
            period = math.fsum(inj.intervals)
            meets = []
            acc = 0.0
            for t in inj.intervals[:-1]:
                acc += t
                meets.append(acc)
            from ..model import CarrierEncounter
            timeline = EncounterTimeline(
                mode=ONE_HOP, period=period,
                budgets=tuple(inj.budgets), intervals=tuple(inj.intervals),
                encounters=tuple(
                    CarrierEncounter(index=i + 1, gap=0.0, meet_time=meets[i],
                                     budget=inj.budgets[i + 1])
                    for i in range(len(inj.budgets) - 1)),
            )
            layer_rates = tuple(inj.layer_rates)
        else:
            if req.config is None:
                raise ValueError("trace needs either a config or injected budgets")
            cfg = req.config.to_config()
            rng = RngStream(req.seed)
            if req.mode == RELAY_AIDED:
                timeline = relay_aided_timeline(cfg, ONE_HOP, rng)
            else:
                timeline = build_encounter_timeline(cfg, req.mode, rng)
            layer_rates = cfg.layer_rates

        if req.strategy == "bc":
            grid, ledger = bc_schedule(timeline.budgets, timeline.intervals, layer_rates)
        else:
            grid, ledger = greedy_schedule(timeline.budgets, timeline.intervals, layer_rates)
        plan = allocate_to_links(ledger, timeline)
        return TraceResponse(
            timeline=timeline.to_dict(),
            grid=grid.to_dict(),
            ledger=ledger.to_dict(),
            allocation=plan.to_dict(),
        )

    return app


app = create_app()
