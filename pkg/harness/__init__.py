from .config import ALL_METHODS, ALL_METRICS, DatasetKind, ExperimentConfig, config_hash, load_config, parse_config
from .datasets import generate_shapes, load_datasets, load_idx_dataset, split_dataset
from .pipeline import AnalysisReport, Combo, ImageRecord, MetricAccounting, RunManifest, analyze_scores, run_pipeline

__all__ = [
    "ALL_METHODS",
    "ALL_METRICS",
    "DatasetKind",
    "ExperimentConfig",
    "config_hash",
    "load_config",
    "parse_config",
    "generate_shapes",
    "load_datasets",
    "load_idx_dataset",
    "split_dataset",
    "AnalysisReport",
    "Combo",
    "ImageRecord",
    "MetricAccounting",
    "RunManifest",
    "analyze_scores",
    "run_pipeline",
]
