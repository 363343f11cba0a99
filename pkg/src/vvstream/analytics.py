"""Closed-form throughput for one-hop and cluster-based relaying.

The one-hop mean throughput combines the fixed infrastructure download with
the expected carrier count times the expected per-contact transfer. The
cluster variant conditions on the cluster length, which follows a
moment-matched gamma law, and integrates the conditional throughput over
the regime partition set by two thresholds: where the carrier supply cap
starts to bind, and where the cluster alone covers the whole gap between
RSUs.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy import special

from .model import ScenarioConfig

_QUAD_REL_TOL = 1e-8
_TAIL_SURVIVAL = 1e-10
_APPROX_FACTOR = 10.0


class AnalyticsError(RuntimeError):
    pass


def expected_interarrival(cfg: ScenarioConfig) -> float:
    """Mean time between consecutive carrier meetings (closing speed v1+v2)."""
    return 1.0 / (cfg.rho2 * (cfg.v1 + cfg.v2))


def expected_carrier_count(cfg: ScenarioConfig, effective_length: float) -> float:
    """Mean number of carriers met while covering `effective_length` of road.

    The renewal approximation assumes the phase lasts many interarrival
    times; a warning flags regimes where it does not.
    """
    if effective_length < 0:
        raise ValueError("effective_length must be nonnegative")
    e_inter = expected_interarrival(cfg)
    if effective_length / cfg.v1 < _APPROX_FACTOR * e_inter:
        warnings.warn(
            "carrier-count approximation outside its regime: "
            f"phase {effective_length / cfg.v1:.3g}s < {_APPROX_FACTOR:g}x "
            f"interarrival {e_inter:.3g}s",
            RuntimeWarning,
            stacklevel=2,
        )
    return _carrier_count(cfg, effective_length)


def _carrier_count(cfg: ScenarioConfig, effective_length: float) -> float:
    return effective_length / (cfg.v1 * expected_interarrival(cfg))


def _mean_min_exp(rho: float, cap: float) -> float:
    """E[min(X, cap)] for X ~ Exp(rho)."""
    return -math.expm1(-rho * cap) / rho


def expected_contact_data_onehop(cfg: ScenarioConfig) -> float:
    """Mean bits per one-hop contact: the capped-gap expectation times the V2V rate."""
    return _mean_min_exp(cfg.rho2, 2.0 * cfg.R_v) * cfg.r_v / (cfg.v1 + cfg.v2)


@dataclass(frozen=True)
class CaseMass:
    label: str
    mass: float              # probability of the regime
    contribution_bps: float  # regime's share of the mean throughput


@dataclass(frozen=True)
class ThroughputReport:
    analytic_bps: float
    cases: tuple[CaseMass, ...]
    sim_mean_bps: float | None = None
    sim_ci_bps: float | None = None

    @property
    def rel_err(self) -> float | None:
        if self.sim_mean_bps is None:
            return None
        return abs(self.sim_mean_bps - self.analytic_bps) / self.analytic_bps


def throughput_onehop(cfg: ScenarioConfig) -> ThroughputReport:
    """Mean one-hop throughput over one period."""
    T = cfg.period
    e_du = 2.0 * cfg.R_u * cfg.r_u / cfg.v1
    e_n = _carrier_count(cfg, cfg.d - 2.0 * cfg.R_u)
    e_di = expected_contact_data_onehop(cfg)
    eta = (e_du + e_n * e_di) / T
    return ThroughputReport(analytic_bps=eta, cases=(CaseMass("one-hop", 1.0, eta),))


def cluster_size_moments(rho1: float, R_v: float) -> tuple[float, float]:
    """First and second moments of the cluster length around a random vehicle.

    Each side of the target accrues Geometric-many gaps (stopping once a
    gap exceeds R_v), each gap Exp(rho1) truncated to (0, R_v]; the two
    sides are independent, and standard compound-sum identities give the
    moments of their sum.
    """
    if rho1 <= 0 or R_v <= 0:
        raise ValueError("rho1 and R_v must be positive")
    p = math.exp(-rho1 * R_v)          # per-gap stop probability
    q = -math.expm1(-rho1 * R_v)       # 1 - p
    # truncated-exponential gap moments
    m1 = 1.0 / rho1 - R_v * p / q
    m2 = (2.0 / rho1**2 - p * (R_v**2 + 2.0 * R_v / rho1 + 2.0 / rho1**2)) / q
    var_g = m2 - m1 * m1
    e_k = q / p
    var_k = q / (p * p)
    side_mean = e_k * m1
    side_var = e_k * var_g + var_k * m1 * m1
    mean = 2.0 * side_mean
    second = 2.0 * side_var + mean * mean
    return mean, second


@dataclass(frozen=True)
class ClusterSizeModel:
    """Gamma law moment-matched to the cluster-length distribution."""

    mean: float
    second_moment: float

    def __post_init__(self):
        if self.variance <= 0 or self.mean <= 0:
            raise ValueError("cluster-size model needs positive mean and variance")

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    @property
    def shape(self) -> float:
        return self.mean**2 / self.variance

    @property
    def scale(self) -> float:
        return self.variance / self.mean

    @classmethod
    def from_gap_model(cls, rho1: float, R_v: float) -> "ClusterSizeModel":
        mean, second = cluster_size_moments(rho1, R_v)
        return cls(mean=mean, second_moment=second)


def cluster_size_pdf(x, model: ClusterSizeModel):
    """Gamma density of the cluster length, evaluated in log space."""
    k, theta = model.shape, model.scale
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, 0.0) if x.ndim else np.float64(0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = (k - 1.0) * np.log(x) - x / theta - k * math.log(theta) - special.gammaln(k)
    if x.ndim:
        pos = x > 0
        out[pos] = np.exp(logpdf[pos])
        return out
    return float(np.exp(logpdf)) if x > 0 else 0.0


def cs_thresholds(cfg: ScenarioConfig) -> tuple[float, float]:
    """Cluster-length thresholds of the conditional-throughput regimes.

    Below the first, the contact window (cluster span + 2*R_v) transfers
    less than a carrier can download, so the supply cap never binds. Above
    the second, relayed infrastructure data alone spans the inter-RSU gap
    and carriers are not needed at all.
    """
    c_s1 = 2.0 * cfg.R_u * cfg.r_u * (cfg.v1 + cfg.v2) / (cfg.v2 * cfg.r_v) - 2.0 * cfg.R_v
    c_s2 = (cfg.d - 2.0 * cfg.R_u) * cfg.r_v / cfg.r_u
    return c_s1, c_s2


def _eta_carriers_unsaturated(cfg: ScenarioConfig, C_s: float) -> float:
    """Conditional throughput while the supply cap is slack (regimes x.1)."""
    T = cfg.period
    e_du = (2.0 * cfg.R_u + C_s) * cfg.r_u / cfg.v1
    e_n = _carrier_count(cfg, cfg.d - 2.0 * cfg.R_u - C_s * cfg.r_u / cfg.r_v)
    e_di = _mean_min_exp(cfg.rho2, C_s + 2.0 * cfg.R_v) * cfg.r_v / (cfg.v1 + cfg.v2)
    return (e_du + e_n * e_di) / T


def _eta_carriers_saturated(cfg: ScenarioConfig, C_s: float) -> float:
    """Conditional throughput once long contacts hit the carrier supply cap (regime 1.2)."""
    T = cfg.period
    rel = cfg.v1 + cfg.v2
    e_du = (2.0 * cfg.R_u + C_s) * cfg.r_u / cfg.v1
    e_n = _carrier_count(cfg, cfg.d - 2.0 * cfg.R_u - C_s * cfg.r_u / cfg.r_v)
    c1 = 2.0 * cfg.R_u * cfg.r_u * rel / (cfg.r_v * cfg.v2)
    p_short = -math.expm1(-cfg.rho2 * c1)
    mean_short = _mean_min_exp(cfg.rho2, c1) - c1 * (1.0 - p_short)
    e_di = mean_short * cfg.r_v / rel + (1.0 - p_short) * 2.0 * cfg.R_u * cfg.r_u / cfg.v2
    return (e_du + e_n * e_di) / T


def _eta_cluster_only(cfg: ScenarioConfig) -> float:
    """Conditional throughput when the cluster alone bridges the RSUs (regimes x.last)."""
    e_du = 2.0 * cfg.R_u * cfg.r_u / cfg.v1 + (cfg.d - 2.0 * cfg.R_u) * cfg.r_v / cfg.v1
    return e_du / cfg.period


def throughput_cluster_conditional(C_s: float, cfg: ScenarioConfig) -> float:
    """Mean throughput for one period given the cluster length."""
    if C_s < 0:
        raise ValueError("C_s must be nonnegative")
    c_s1, c_s2 = cs_thresholds(cfg)
    if C_s > c_s2:
        return _eta_cluster_only(cfg)
    if c_s1 <= c_s2 and C_s > c_s1:
        return _eta_carriers_saturated(cfg, C_s)
    return _eta_carriers_unsaturated(cfg, C_s)


def throughput_cluster(cfg: ScenarioConfig, model: ClusterSizeModel | None = None) -> ThroughputReport:
    """Mean cluster-based throughput: conditional throughput integrated over the gamma law."""
    if model is None:
        model = ClusterSizeModel.from_gap_model(cfg.rho1, cfg.R_v)
    k, theta = model.shape, model.scale
    c_s1, c_s2 = cs_thresholds(cfg)
    x_hi = float(special.gammainccinv(k, _TAIL_SURVIVAL)) * theta

    def cdf(x: float) -> float:
        return float(special.gammainc(k, x / theta)) if x > 0 else 0.0

    def piece(eta_fn, lo: float, hi: float, label: str) -> tuple[CaseMass, float]:
        mass = cdf(hi) - cdf(lo) if hi != math.inf else 1.0 - cdf(lo)
        if hi == math.inf:
            # constant integrand: the tail integrates exactly
            return CaseMass(label, mass, _eta_cluster_only(cfg) * mass), 0.0
        hi_eff = min(hi, x_hi)
        if hi_eff <= lo:
            return CaseMass(label, mass, eta_fn(lo) * mass if mass > 0 else 0.0), 0.0
        val, abserr = integrate.quad(
            lambda x: eta_fn(x) * cluster_size_pdf(x, model),
            lo, hi_eff, epsrel=_QUAD_REL_TOL, epsabs=0.0, limit=200,
        )
        return CaseMass(label, mass, val), abserr

    pieces: list[tuple[CaseMass, float]] = []
    if c_s1 <= c_s2:
        pieces.append(piece(lambda x: _eta_carriers_unsaturated(cfg, x), 0.0, c_s1, "carriers, supply slack"))
        pieces.append(piece(lambda x: _eta_carriers_saturated(cfg, x), c_s1, c_s2, "carriers, supply capped"))
        pieces.append(piece(None, c_s2, math.inf, "cluster bridges RSUs"))
    else:
        pieces.append(piece(lambda x: _eta_carriers_unsaturated(cfg, x), 0.0, c_s2, "carriers, supply slack"))
        pieces.append(piece(None, c_s2, math.inf, "cluster bridges RSUs"))

    cases = tuple(case for case, _ in pieces)
    eta = math.fsum(case.contribution_bps for case in cases)
    abserr = math.fsum(err for _, err in pieces)
    achieved = abserr / eta if eta > 0 else abserr
    if achieved > 1e-6:
        raise AnalyticsError(f"quadrature did not converge: achieved relative tolerance {achieved:.3g}")
    mass_total = math.fsum(case.mass for case in cases)
    if abs(mass_total - 1.0) > 1e-6:
        raise AnalyticsError(f"regime masses sum to {mass_total!r}, not 1")
    return ThroughputReport(analytic_bps=eta, cases=cases)


def throughput_relay_aided(cfg: ScenarioConfig) -> ThroughputReport:
    """Mean throughput of the no-carrier baseline (direct coverage only)."""
    eta = 2.0 * cfg.R_u * cfg.r_u / cfg.d
    return ThroughputReport(analytic_bps=eta, cases=(CaseMass("relay-aided", 1.0, eta),))
