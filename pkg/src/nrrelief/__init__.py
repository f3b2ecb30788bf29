"""Hyperparameter importance assessment with N-RReliefF."""

__version__ = "0.1.0"

from .conditional import ConditionalQuery, conditional_importance, filter_by_parent
from .dataset import HiaDataset
from .engine import EngineParams, ImportanceReport, joint_importance, run_nrrelieff
from .errors import EmptySliceError, HiaError, ValidationError
from .io import load_dataset, load_space, read_report, write_dataset, write_report
from .reliability import StratificationPlan, icc, repeat_assess, spearman_rank_corr, stratified_subsample
from .space import INACTIVE, ConfigSpace, HyperparameterDef, Parent, diff_value, distance, validate_space
from .synthetic import SurfaceSpec, generate_dataset

__all__ = [
    "INACTIVE",
    "ConditionalQuery",
    "ConfigSpace",
    "EmptySliceError",
    "EngineParams",
    "HiaDataset",
    "HiaError",
    "HyperparameterDef",
    "ImportanceReport",
    "Parent",
    "StratificationPlan",
    "SurfaceSpec",
    "ValidationError",
    "conditional_importance",
    "diff_value",
    "distance",
    "filter_by_parent",
    "generate_dataset",
    "icc",
    "joint_importance",
    "load_dataset",
    "load_space",
    "read_report",
    "repeat_assess",
    "run_nrrelieff",
    "spearman_rank_corr",
    "stratified_subsample",
    "validate_space",
    "write_dataset",
    "write_report",
]
