"""Covering-array experiment planning and result screening."""

from .analysis import best_configurations, common_levels, group_experiments, main_effects
from .coverage import (
    CoverageLedger,
    CoveringArray,
    InteractionTuple,
    Verification,
    coverage_of,
    enumerate_tuples,
    is_covering_array,
    missing_tuples,
)
from .generator import GenerationConfig, generate, generate_greedy, refine_anneal
from .model import Factor, FactorModel, exhaustive_size, load_model, lower_bound, parse_model
from .plan_io import ExperimentPlan, ResultSet, TimeSeries, aggregate_series, export_plan, import_plan, import_results, label_plan
from .sim import ResponseModel, emit_series, run_plan

__version__ = "0.1.0"

__all__ = [
    "CoverageLedger",
    "CoveringArray",
    "ExperimentPlan",
    "Factor",
    "FactorModel",
    "GenerationConfig",
    "InteractionTuple",
    "ResponseModel",
    "ResultSet",
    "TimeSeries",
    "Verification",
    "aggregate_series",
    "best_configurations",
    "common_levels",
    "coverage_of",
    "emit_series",
    "enumerate_tuples",
    "exhaustive_size",
    "export_plan",
    "generate",
    "generate_greedy",
    "group_experiments",
    "import_plan",
    "import_results",
    "is_covering_array",
    "label_plan",
    "load_model",
    "lower_bound",
    "main_effects",
    "missing_tuples",
    "parse_model",
    "refine_anneal",
    "run_plan",
]
