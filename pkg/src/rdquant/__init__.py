"""Regression-discontinuity estimates and optimal circular partitions of population by longitude."""

__version__ = "0.1.0"

from .distortion import ObjectiveConfig, SegmentCost, SegmentCostTable, partition_cost, segment_cost
from .dp_quantizer import (
    Partition,
    brute_force_design,
    choose_prime_meridian_uniform,
    design_fixed_k,
    design_open_k,
)
from .estimators import PartitionDesigner, RDDRegressor
from .exceptions import EstimationError, InputError, RdquantError
from .grid import (
    PopulationProfile,
    index_to_longitude,
    load_population_profile,
    rotate,
    save_population_profile,
)
from .rdd import (
    EffectEstimate,
    RddDataset,
    RddFit,
    counterfactual_lines,
    effect_to_eta,
    fit_global,
    fit_local,
    load_rdd_dataset,
    mccrary_test,
    reassign_units,
    select_bandwidth_cv,
)
from .vi_quantizer import build_mdp, design_fixed_k_vi, extract_policy, horizon_bound, value_iteration

__all__ = [
    "ObjectiveConfig", "SegmentCost", "SegmentCostTable", "partition_cost", "segment_cost",
    "Partition", "brute_force_design", "choose_prime_meridian_uniform", "design_fixed_k",
    "design_open_k", "PartitionDesigner", "RDDRegressor", "EstimationError", "InputError",
    "RdquantError", "PopulationProfile", "index_to_longitude", "load_population_profile", "rotate",
    "save_population_profile", "EffectEstimate", "RddDataset", "RddFit", "counterfactual_lines",
    "effect_to_eta", "fit_global", "fit_local", "load_rdd_dataset", "mccrary_test",
    "reassign_units", "select_bandwidth_cv", "build_mdp", "design_fixed_k_vi", "extract_policy",
    "horizon_bound", "value_iteration",
]
