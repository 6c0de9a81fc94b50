"""Conditional independence testing through learned latent representations."""

from .benchmark import (
    SimConfig,
    auc,
    calibrate,
    classification_metrics,
    function_library,
    generate_instance,
    run_benchmark,
)
from .citest import TestResult, fisher_z_pvalue, lcit, partial_correlation_test
from .data import Dataset, clip_quantiles, load_csv, preprocess, split, standardize
from .flow import ConditionalFlow, LatentSeries, TrainConfig, train_cnf
from .graphs import DAG, Triplet, extract_triplets, read_edge_list
from .nn import Adam, MlpHead

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "ConditionalFlow",
    "DAG",
    "Dataset",
    "LatentSeries",
    "MlpHead",
    "SimConfig",
    "TestResult",
    "TrainConfig",
    "Triplet",
    "auc",
    "calibrate",
    "classification_metrics",
    "clip_quantiles",
    "extract_triplets",
    "fisher_z_pvalue",
    "function_library",
    "generate_instance",
    "lcit",
    "load_csv",
    "partial_correlation_test",
    "preprocess",
    "read_edge_list",
    "run_benchmark",
    "split",
    "standardize",
    "train_cnf",
]
