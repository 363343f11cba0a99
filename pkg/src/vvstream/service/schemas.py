"""Request and response models for the HTTP service."""
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..model import ScenarioConfig, validate_config

Mode = Literal["one-hop", "cluster", "relay-aided"]
TimelineMode = Literal["one-hop", "cluster"]
Strategy = Literal["bc", "greedy"]


class ScenarioConfigIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    d: float
    R_u: float
    R_v: float
    r_u: float
    r_v: float
    rho1: float
    rho2: float
    v1: float
    v2: float
    layer_rates: list[float] = Field(min_length=1)
    master_seed: int = 0

    def to_config(self) -> ScenarioConfig:
        return validate_config(ScenarioConfig(
            d=self.d, R_u=self.R_u, R_v=self.R_v, r_u=self.r_u, r_v=self.r_v,
            rho1=self.rho1, rho2=self.rho2, v1=self.v1, v2=self.v2,
            layer_rates=tuple(self.layer_rates), master_seed=self.master_seed,
        ))


class HealthResponse(BaseModel):
    status: str
    version: str


class CaseMassOut(BaseModel):
    label: str
    mass: float
    contribution_bps: float


class AnalyzeRequest(BaseModel):
    config: ScenarioConfigIn
    d_values: list[float] = Field(min_length=1)
    modes: list[TimelineMode] = ["one-hop", "cluster"]


class AnalyzeRow(BaseModel):
    d: float
    mode: str
    thr_analytic: float
    c_s1: float | None = None
    c_s2: float | None = None
    cases: list[CaseMassOut]


class AnalyzeResponse(BaseModel):
    rows: list[AnalyzeRow]
    csv: str


class AggregateRowOut(BaseModel):
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


class SimulateRequest(BaseModel):
    config: ScenarioConfigIn
    mode: Mode = "one-hop"
    strategy: Strategy = "bc"
    trials: int = Field(default=2000, ge=1)
    seed: int | None = None
    d_values: list[float] | None = None
    workers: int = Field(default=1, ge=1)


class SimulateResponse(BaseModel):
    rows: list[AggregateRowOut]
    csv: str


class SweepRequest(BaseModel):
    config: ScenarioConfigIn
    d_values: list[float] | None = None
    modes: list[Mode] = ["one-hop", "cluster", "relay-aided"]
    strategies: list[Strategy] = ["bc", "greedy"]
    trials: int = Field(default=2000, ge=1)
    seed: int | None = None
    workers: int = Field(default=1, ge=1)


class ComparisonOut(BaseModel):
    d_values: list[float]
    series: dict[str, list[float]]


class SweepResponse(BaseModel):
    rows: list[AggregateRowOut]
    csv: str
    comparison: ComparisonOut | None = None


class TraceInjection(BaseModel):
    budgets: list[float] = Field(min_length=1)
    intervals: list[float] = Field(min_length=1)
    layer_rates: list[float] = Field(min_length=1)


class TraceRequest(BaseModel):
    config: ScenarioConfigIn | None = None
    mode: Mode = "one-hop"
    strategy: Strategy = "bc"
    seed: int = 0
    injected: TraceInjection | None = None


class TraceResponse(BaseModel):
    timeline: dict
    grid: dict
    ledger: dict
    allocation: dict
