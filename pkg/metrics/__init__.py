from .curves import (
    DEFAULT_BLUR_SIGMA,
    DEFAULT_STEPS,
    Direction,
    MetricScore,
    PixelSchedule,
    ProbabilityCurve,
    auc,
    deletion_curve,
    insertion_blur_curve,
    insertion_curve,
    perturbation_curve,
    pixel_schedule,
    schedule_states,
)
from .scalar import adcc, average_drop, coherency, complexity, explanation_map, increase_in_confidence
from .metric_registry import METRICS, CurveMetric, MetricSpec, ScalarMetric, Trend, compute_curve, is_curve_metric, metric_spec

__all__ = [
    "DEFAULT_BLUR_SIGMA",
    "DEFAULT_STEPS",
    "Direction",
    "MetricScore",
    "PixelSchedule",
    "ProbabilityCurve",
    "auc",
    "deletion_curve",
    "insertion_blur_curve",
    "insertion_curve",
    "perturbation_curve",
    "pixel_schedule",
    "schedule_states",
    "adcc",
    "average_drop",
    "coherency",
    "complexity",
    "explanation_map",
    "increase_in_confidence",
    "METRICS",
    "CurveMetric",
    "MetricSpec",
    "ScalarMetric",
    "Trend",
    "compute_curve",
    "is_curve_metric",
    "metric_spec",
]
