import math

import numpy as np
import pytest
from scipy import stats

from vvstream import (CLUSTER, ONE_HOP, RngStream, build_encounter_timeline,
                      cluster_size_moments, sample_carrier_gaps, sample_cluster,
                      sample_cluster_spans)
from vvstream import linkbudget
from vvstream.model import ScenarioConfig


def test_gap_mean_matches_density():
    gaps = sample_carrier_gaps(0.005, horizon=1e6 / 0.005, rng=RngStream(1))
    # cumulative-sum stopping keeps the sample size near horizon * rho
    assert len(gaps) > 900_000
    assert np.mean(gaps) == pytest.approx(200.0, rel=0.01)


def test_gap_sequence_is_deterministic_per_stream():
    a = sample_carrier_gaps(0.005, 5000.0, RngStream(7, 3))
    b = sample_carrier_gaps(0.005, 5000.0, RngStream(7, 3))
    c = sample_carrier_gaps(0.005, 5000.0, RngStream(7, 4))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_gap_sum_first_exceeds_horizon():
    gaps = sample_carrier_gaps(0.01, 1000.0, RngStream(2))
    cum = np.cumsum(gaps)
    assert cum[-1] > 1000.0
    assert np.all(cum[:-1] <= 1000.0)


def test_degenerate_density_gives_tiny_gaps():
    gaps = sample_carrier_gaps(1e6, 1.0, RngStream(3))
    assert np.mean(gaps) < 1e-5


def test_cluster_mean_span_matches_analytic_moments():
    spans, _ = sample_cluster_spans(0.007, 200.0, 200_000, RngStream(4))
    mean, second = cluster_size_moments(0.007, 200.0)
    assert spans.mean() == pytest.approx(mean, rel=0.01)
    assert np.mean(spans**2) == pytest.approx(second, rel=0.02)


def test_cluster_vanishes_with_tiny_range():
    for k in range(500):
        s = sample_cluster(0.007, 1e-9, RngStream(5, k))
        assert s.C_s == 0.0
        assert s.n_vehicles == 1


def test_cluster_span_bounded_by_gap_cap():
    for k in range(500):
        s = sample_cluster(0.007, 200.0, RngStream(6, k))
        assert s.C_s <= (s.n_vehicles - 1) * 200.0
        assert (s.C_s == 0.0) == (s.n_vehicles == 1)


def test_scalar_and_bulk_cluster_samplers_agree_in_distribution():
    scal = np.array([sample_cluster(0.007, 200.0, RngStream(11, k)).C_s for k in range(8000)])
    bulk, _ = sample_cluster_spans(0.007, 200.0, 8000, RngStream(12))
    assert stats.ks_2samp(scal, bulk).pvalue > 0.01


def test_per_side_gap_counts_are_geometric():
    # total accepted gaps over both sides follows NB(2, p) with p = exp(-rho*R_v)
    _, counts = sample_cluster_spans(0.007, 200.0, 100_000, RngStream(13))
    accepted = counts - 1
    p = math.exp(-0.007 * 200.0)
    kmax = 25
    obs = np.bincount(np.minimum(accepted, kmax), minlength=kmax + 1)
    pmf = np.array([stats.nbinom.pmf(i, 2, p) for i in range(kmax)]
                   + [stats.nbinom.sf(kmax - 1, 2, p)])
    assert stats.chisquare(obs, pmf * len(accepted)).pvalue > 0.01


class TestOneHopTimeline:
    def test_mean_carrier_count(self, cfg):
        ns = [build_encounter_timeline(cfg, ONE_HOP, RngStream(20, k)).n for k in range(2000)]
        assert sum(ns) / len(ns) == pytest.approx(14.0, rel=0.05)

    def test_intervals_tile_the_period(self, cfg):
        for k in range(200):
            tl = build_encounter_timeline(cfg, ONE_HOP, RngStream(21, k))
            assert math.fsum(tl.intervals) == pytest.approx(tl.period, abs=1e-9)
            assert all(t > 0 for t in tl.intervals)

    def test_meet_times_increase_within_v2v_phase(self, cfg):
        exit_time = 2 * cfg.R_u / cfg.v1
        for k in range(200):
            tl = build_encounter_timeline(cfg, ONE_HOP, RngStream(22, k))
            meets = [e.meet_time for e in tl.encounters]
            assert all(a < b for a, b in zip(meets, meets[1:]))
            assert all(exit_time < m <= tl.period for m in meets)

    def test_v2i_budget_is_fixed(self, cfg):
        tl = build_encounter_timeline(cfg, ONE_HOP, RngStream(23))
        assert tl.budgets[0] == pytest.approx(2 * cfg.R_u * cfg.r_u / cfg.v1)

    def test_budgets_match_contact_formula_inside_period(self, cfg):
        tl = build_encounter_timeline(cfg, ONE_HOP, RngStream(24))
        cap = 2 * cfg.R_v / (cfg.v1 + cfg.v2)
        for e in tl.encounters:
            full = linkbudget.carrier_budget_onehop(e.gap, cfg)
            if e.meet_time + min(e.gap, 2 * cfg.R_v) / (cfg.v1 + cfg.v2) <= tl.period:
                assert e.budget == pytest.approx(full)
            else:
                assert e.budget <= full

    def test_vanishing_carrier_density_gives_empty_phase(self, cfg):
        sparse = ScenarioConfig(**{**cfg.to_dict(), "rho2": 1e-9,
                                   "layer_rates": cfg.layer_rates})
        tl = build_encounter_timeline(sparse, ONE_HOP, RngStream(25))
        assert tl.n == 0
        assert tl.intervals == (tl.period,)
        assert tl.budgets == (pytest.approx(2 * cfg.R_u * cfg.r_u / cfg.v1),)

    def test_first_gap_is_memoryless(self, cfg):
        l1 = []
        for k in range(100_000):
            tl = build_encounter_timeline(cfg, ONE_HOP, RngStream(26, k))
            if tl.encounters:
                l1.append(tl.encounters[0].gap)
        ref = RngStream(27).generator().exponential(1 / cfg.rho2, size=len(l1))
        assert stats.ks_2samp(l1, ref).pvalue > 0.01

    def test_timeline_is_deterministic(self, cfg):
        a = build_encounter_timeline(cfg, ONE_HOP, RngStream(28, 1))
        b = build_encounter_timeline(cfg, ONE_HOP, RngStream(28, 1))
        assert a == b


class TestClusterTimeline:
    def test_v2i_budget_includes_relayed_data(self, cfg):
        tl = build_encounter_timeline(cfg, CLUSTER, RngStream(30))
        cs = tl.cluster_size
        usable = min(cs * cfg.r_u / cfg.r_v, cfg.d - 2 * cfg.R_u)
        expect = (2 * cfg.R_u * cfg.r_u + usable * cfg.r_v) / cfg.v1
        assert tl.budgets[0] == pytest.approx(expect)

    def test_carrier_phase_starts_after_relay_drain(self, cfg):
        for k in range(300):
            tl = build_encounter_timeline(cfg, CLUSTER, RngStream(31, k))
            start = (2 * cfg.R_u + tl.cluster_size * cfg.r_u / cfg.r_v) / cfg.v1
            for e in tl.encounters:
                assert e.meet_time > start

    def test_oversized_cluster_leaves_no_carrier_phase(self, cfg):
        # with d barely above 2*R_u almost any cluster bridges the RSUs
        tight = cfg.with_d(810.0)
        saw_empty = 0
        for k in range(200):
            tl = build_encounter_timeline(tight, CLUSTER, RngStream(32, k))
            if tight.d - 2 * tight.R_u - tl.cluster_size * tight.r_u / tight.r_v <= 0:
                assert tl.n == 0
                assert tl.intervals == (tl.period,)
                saw_empty += 1
        assert saw_empty > 100

    def test_tiling_holds_in_cluster_mode(self, cfg):
        for k in range(200):
            tl = build_encounter_timeline(cfg, CLUSTER, RngStream(33, k))
            assert math.fsum(tl.intervals) == pytest.approx(tl.period, abs=1e-9)
