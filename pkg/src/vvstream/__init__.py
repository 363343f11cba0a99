"""Cooperative vehicular video streaming: simulator, scheduler, and throughput analytics."""

__version__ = "0.1.0"

from .model import (BC, CLUSTER, GREEDY, MODES, ONE_HOP, RELAY_AIDED, STRATEGIES,
                    CarrierEncounter, ConfigError, EncounterTimeline,
                    ScenarioConfig, default_config, load_config, validate_config)
from .traffic import (ClusterSample, RngStream, build_encounter_timeline,
                      sample_carrier_gaps, sample_cluster, sample_cluster_spans)
from .linkbudget import (ContactBudget, SupplyCheck, carrier_budget_cluster,
                         carrier_budget_onehop, carrier_supply,
                         check_supply_sufficiency, v2i_budget_cluster,
                         v2i_budget_onehop)
from .scheduler import (AllocationPlan, FillLedger, PlaybackGrid,
                        allocate_to_links, bc_schedule, dress_right,
                        greedy_schedule, relay_aided_timeline, schedule_timeline)
from .metrics import (MetricsReport, average_playback_quality,
                      average_quality_variation, empirical_throughput,
                      interruption_ratio, quality_profile)
from .analytics import (ClusterSizeModel, ThroughputReport, cluster_size_moments,
                        cluster_size_pdf, cs_thresholds, expected_carrier_count,
                        expected_contact_data_onehop, expected_interarrival,
                        throughput_cluster, throughput_cluster_conditional,
                        throughput_onehop, throughput_relay_aided)
from .harness import (AggregateRow, ComparisonTable, ExperimentSpec,
                      compare_report, render_csv, run_cell, run_experiment,
                      run_trial, trial_stream)
