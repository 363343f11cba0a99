import math

import numpy as np
import pytest
from scipy import integrate

from vvstream import (ClusterSizeModel, RngStream, cluster_size_moments,
                      cluster_size_pdf, cs_thresholds, expected_carrier_count,
                      expected_contact_data_onehop, expected_interarrival,
                      sample_cluster_spans, throughput_cluster,
                      throughput_cluster_conditional, throughput_onehop,
                      throughput_relay_aided)
from vvstream.analytics import _eta_cluster_only


def test_interarrival_reference_value(cfg):
    assert expected_interarrival(cfg) == pytest.approx(1 / (0.005 * 35))


def test_interarrival_scalings(cfg):
    dense = cfg.to_dict(); dense["rho2"] = 0.01
    from vvstream.model import ScenarioConfig
    assert expected_interarrival(ScenarioConfig.from_dict(dense)) == pytest.approx(
        expected_interarrival(cfg) / 2)
    still = cfg.to_dict(); still["v2"] = 1e-12
    assert expected_interarrival(ScenarioConfig.from_dict(still)) == pytest.approx(
        1 / (cfg.rho2 * cfg.v1), rel=1e-9)


def test_carrier_count_values(cfg):
    assert expected_carrier_count(cfg, cfg.d - 2 * cfg.R_u) == pytest.approx(14.0)
    big = cfg.with_d(10000.0)
    assert expected_carrier_count(big, big.d - 2 * big.R_u) == pytest.approx(107.3333, rel=1e-4)
    with pytest.warns(RuntimeWarning):
        assert expected_carrier_count(cfg, 0.0) == 0.0


def test_carrier_count_warns_outside_regime(cfg):
    with pytest.warns(RuntimeWarning, match="approximation"):
        expected_carrier_count(cfg, 100.0)


def test_contact_data_reference_value(cfg):
    assert expected_contact_data_onehop(cfg) == pytest.approx(4.9409e6, rel=1e-4)


def test_contact_data_matches_composite_form(cfg):
    # capped-mean identity: split form with conditional expectation
    rho, c = cfg.rho2, 2 * cfg.R_v
    e = math.exp(-rho * c)
    composite = ((1 - e) * (1 / rho - c * e / (1 - e)) + e * c) * cfg.r_v / (cfg.v1 + cfg.v2)
    assert expected_contact_data_onehop(cfg) == pytest.approx(composite, rel=1e-12)


def test_contact_data_limits(cfg):
    from vvstream.model import ScenarioConfig
    dense = cfg.to_dict(); dense["rho2"] = 1e3
    assert expected_contact_data_onehop(ScenarioConfig.from_dict(dense)) == pytest.approx(
        1e-3 * cfg.r_v / 35, rel=1e-6)
    sparse = cfg.to_dict(); sparse["rho2"] = 1e-12
    assert expected_contact_data_onehop(ScenarioConfig.from_dict(sparse)) == pytest.approx(
        2 * cfg.R_v * cfg.r_v / 35, rel=1e-6)


def test_contact_data_against_monte_carlo(cfg):
    gaps = RngStream(60).generator().exponential(1 / cfg.rho2, size=1_000_000)
    samples = np.minimum(gaps, 2 * cfg.R_v) * cfg.r_v / (cfg.v1 + cfg.v2)
    se = samples.std(ddof=1) / math.sqrt(len(samples))
    assert abs(samples.mean() - expected_contact_data_onehop(cfg)) < 3 * se


def test_onehop_throughput_spot_values(cfg):
    assert throughput_onehop(cfg).analytic_bps == pytest.approx(1.319e6, rel=0.005)
    assert throughput_onehop(cfg.with_d(10000)).analytic_bps == pytest.approx(0.955e6, rel=0.005)


def test_onehop_throughput_monotone_in_distance(cfg):
    ds = np.linspace(2000, 10000, 33)
    etas = [throughput_onehop(cfg.with_d(float(d))).analytic_bps for d in ds]
    assert all(a >= b - 1e-9 for a, b in zip(etas, etas[1:]))


def test_cluster_moments_match_simulation():
    mean, second = cluster_size_moments(0.007, 200.0)
    spans, _ = sample_cluster_spans(0.007, 200.0, 1_000_000, RngStream(61))
    assert mean == pytest.approx(spans.mean(), rel=0.01)
    assert second == pytest.approx(np.mean(spans**2), rel=0.01)
    assert second >= mean**2


def test_cluster_moments_vanish_with_range():
    mean, second = cluster_size_moments(0.007, 1e-9)
    assert mean == pytest.approx(0.0, abs=1e-6)
    assert second == pytest.approx(0.0, abs=1e-6)


def test_gamma_model_identities():
    model = ClusterSizeModel.from_gap_model(0.007, 200.0)
    assert model.shape * model.scale == pytest.approx(model.mean, rel=1e-12)
    assert model.shape > 0 and model.scale > 0


def test_pdf_normalization_and_mean():
    model = ClusterSizeModel.from_gap_model(0.007, 200.0)
    total, err = integrate.quad(lambda x: cluster_size_pdf(x, model), 0, np.inf, limit=200)
    assert abs(total - 1.0) <= max(1e-8, err)
    mean, _ = integrate.quad(lambda x: x * cluster_size_pdf(x, model), 0, np.inf, limit=200)
    assert mean == pytest.approx(model.shape * model.scale, rel=1e-6)


def test_pdf_exponential_special_case():
    model = ClusterSizeModel(mean=100.0, second_moment=2 * 100.0**2)   # k = 1
    assert model.shape == pytest.approx(1.0)
    for x in (1.0, 50.0, 300.0):
        assert cluster_size_pdf(x, model) == pytest.approx(math.exp(-x / 100.0) / 100.0)


def test_thresholds_at_reference_scenario(cfg):
    c_s1, c_s2 = cs_thresholds(cfg)
    assert c_s1 == pytest.approx(2400.0)
    assert c_s2 == pytest.approx(600.0)
    c_s1, c_s2 = cs_thresholds(cfg.with_d(10000))
    assert c_s1 == pytest.approx(2400.0)
    assert c_s2 == pytest.approx(4600.0)


def test_threshold_c_s2_vanishes_at_minimal_distance(cfg):
    tight = cfg.with_d(2 * cfg.R_u + 1e-9)
    assert cs_thresholds(tight)[1] == pytest.approx(0.0, abs=1e-9)


def test_conditional_reduces_to_onehop_for_empty_cluster(cfg):
    assert throughput_cluster_conditional(0.0, cfg) == pytest.approx(
        throughput_onehop(cfg).analytic_bps, rel=1e-12)


def test_conditional_cluster_only_value(cfg):
    c_s2 = cs_thresholds(cfg)[1]
    expect = (2 * 400 * 2e6 / 15 + 1200 * 1e6 / 15) / (2000 / 15)
    assert throughput_cluster_conditional(c_s2 + 1.0, cfg) == pytest.approx(expect)
    assert expect == pytest.approx(1.4e6)


def test_conditional_continuous_at_thresholds(cfg):
    for d in (2000.0, 4000.0, 6000.0, 10000.0):
        c = cfg.with_d(d)
        c_s1, c_s2 = cs_thresholds(c)
        lo = throughput_cluster_conditional(c_s2 * (1 - 1e-9), c)
        hi = throughput_cluster_conditional(c_s2 * (1 + 1e-9), c)
        assert hi == pytest.approx(lo, rel=1e-6)
        if c_s1 <= c_s2:
            lo = throughput_cluster_conditional(c_s1 * (1 - 1e-9), c)
            hi = throughput_cluster_conditional(c_s1 * (1 + 1e-9), c)
            assert hi == pytest.approx(lo, rel=1e-6)


def test_saturated_regime_mean_against_monte_carlo(cfg):
    # capped-contact expectation with the supply ceiling, at a cluster size
    # where long gaps saturate the carrier download
    big = cfg.with_d(10000.0)
    c_s1, c_s2 = cs_thresholds(big)
    assert c_s1 < c_s2
    c_s = 3000.0
    assert c_s1 < c_s <= c_s2
    rel = big.v1 + big.v2
    gaps = RngStream(62).generator().exponential(1 / big.rho2, size=1_000_000)
    supply_cap = 2 * big.R_u * big.r_u / big.v2
    cluster_cap = (c_s + 2 * big.R_v) * big.r_v / rel
    samples = np.minimum(np.minimum(gaps * big.r_v / rel, supply_cap), cluster_cap)
    from vvstream.analytics import _eta_carriers_saturated, _carrier_count
    eta = _eta_carriers_saturated(big, c_s)
    e_du = (2 * big.R_u + c_s) * big.r_u / big.v1
    e_n = _carrier_count(big, big.d - 2 * big.R_u - c_s * big.r_u / big.r_v)
    e_di = (eta * big.period - e_du) / e_n
    se = samples.std(ddof=1) / math.sqrt(len(samples))
    assert abs(samples.mean() - e_di) < 3 * se


def test_unsaturated_regime_mean_against_monte_carlo(cfg):
    c_s = 300.0
    rel = cfg.v1 + cfg.v2
    gaps = RngStream(63).generator().exponential(1 / cfg.rho2, size=1_000_000)
    samples = np.minimum(gaps, c_s + 2 * cfg.R_v) * cfg.r_v / rel
    from vvstream.analytics import _eta_carriers_unsaturated, _carrier_count
    eta = _eta_carriers_unsaturated(cfg, c_s)
    e_du = (2 * cfg.R_u + c_s) * cfg.r_u / cfg.v1
    e_n = _carrier_count(cfg, cfg.d - 2 * cfg.R_u - c_s * cfg.r_u / cfg.r_v)
    e_di = (eta * cfg.period - e_du) / e_n
    se = samples.std(ddof=1) / math.sqrt(len(samples))
    assert abs(samples.mean() - e_di) < 3 * se


def test_cluster_throughput_uses_both_regime_partitions(cfg):
    # short road: supply threshold above the bridge threshold, two regimes
    report = throughput_cluster(cfg)
    assert [c.label for c in report.cases] == ["carriers, supply slack", "cluster bridges RSUs"]
    # long road: three regimes
    report = throughput_cluster(cfg.with_d(10000))
    assert [c.label for c in report.cases] == [
        "carriers, supply slack", "carriers, supply capped", "cluster bridges RSUs"]


def test_cluster_case_masses_sum_to_one(cfg, sweep_d):
    for d in sweep_d:
        report = throughput_cluster(cfg.with_d(d))
        assert math.fsum(c.mass for c in report.cases) == pytest.approx(1.0, abs=1e-6)
        assert all(c.mass >= 0 for c in report.cases)


def test_cluster_dominates_onehop(cfg, sweep_d):
    for d in sweep_d:
        c = cfg.with_d(d)
        assert throughput_cluster(c).analytic_bps >= throughput_onehop(c).analytic_bps


def test_cluster_throughput_monotone_in_distance(cfg):
    ds = np.linspace(2000, 10000, 17)
    etas = [throughput_cluster(cfg.with_d(float(d))).analytic_bps for d in ds]
    assert all(a >= b - 1e-6 for a, b in zip(etas, etas[1:]))


def test_degenerate_cluster_model_recovers_onehop(cfg):
    tiny = ClusterSizeModel(mean=1e-6, second_moment=2e-12)
    report = throughput_cluster(cfg, model=tiny)
    assert report.analytic_bps == pytest.approx(throughput_onehop(cfg).analytic_bps, rel=1e-4)


def test_relay_aided_analytic(cfg):
    assert throughput_relay_aided(cfg).analytic_bps == pytest.approx(0.8e6)
    assert _eta_cluster_only(cfg) == pytest.approx(1.4e6)
