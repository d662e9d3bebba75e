"""Sequential experiment design for species discovery.

A hierarchical Pitman-Yor model shares statistical strength across the arms
of a multi-armed bandit whose reward is the number of previously unseen
species in each sampled batch.  The package provides the exact partition
calculus, franchise-style seating state, posterior warm start, particle
filtering, Thompson-sampling batch allocation, a simulation harness, and a
small HTTP advisory service.
"""
from .crf import CrfState, HpyParams, LabeledBatch, log_peppf, state_from_batches
from .experiment import (
    ConfigError,
    ExperimentConfig,
    Trace,
    preset_config,
    run_experiment,
)
from .gibbs import GibbsConfig, PriorSpec, gibbs_run
from .populations import (
    PopulationSpec,
    load_replay,
    population_from_counts,
    zipf_population,
)
from .pyp import (
    ClusterCounts,
    GfcTable,
    PyParams,
    crp_predictive,
    distinct_count_pmf,
    eppf_log,
    gfc_table,
    stick_breaking_sample,
)
from .reward import RewardDraw, expected_new_species, posterior_mean_forecast, thompson_draw
from .smc import ParticleSet, effective_sample_size, filter_update
from .strategies import (
    FreqOfFreq,
    gt_estimate,
    gtts_select,
    hpyts_allocate_delayed,
    hpyts_select,
    oracle_select,
    uniform_select,
)

__all__ = [
    "ClusterCounts",
    "ConfigError",
    "CrfState",
    "ExperimentConfig",
    "FreqOfFreq",
    "GfcTable",
    "GibbsConfig",
    "HpyParams",
    "LabeledBatch",
    "ParticleSet",
    "PopulationSpec",
    "PriorSpec",
    "PyParams",
    "RewardDraw",
    "Trace",
    "crp_predictive",
    "distinct_count_pmf",
    "effective_sample_size",
    "eppf_log",
    "expected_new_species",
    "filter_update",
    "gfc_table",
    "gibbs_run",
    "gt_estimate",
    "gtts_select",
    "hpyts_allocate_delayed",
    "hpyts_select",
    "load_replay",
    "log_peppf",
    "oracle_select",
    "population_from_counts",
    "posterior_mean_forecast",
    "preset_config",
    "run_experiment",
    "state_from_batches",
    "stick_breaking_sample",
    "thompson_draw",
    "uniform_select",
    "zipf_population",
]

__version__ = "0.1.0"
