from enum import Enum
from typing import Dict, Optional, Union

import numpy as np
from pydantic import BaseModel

from attacks import AttackResult
from errors import AttackFailedError
from methods.maps import AttributionMap
from metrics.curves import (
    DEFAULT_BLUR_SIGMA,
    Direction,
    ProbabilityCurve,
    deletion_curve,
    insertion_blur_curve,
    insertion_curve,
    perturbation_curve,
)
from nn.model import Model
from nn.tensors import Image8, TargetClass


class CurveMetric(str, Enum):
    DELETION = "deletion"
    INSERTION = "insertion"
    INSERTION_BLUR = "insertion_blur"
    PERTURBATION = "perturbation"


class ScalarMetric(str, Enum):
    AVERAGE_DROP = "average_drop"
    INCREASE_IN_CONFIDENCE = "increase_in_confidence"
    COMPLEXITY = "complexity"
    COHERENCY = "coherency"
    ADCC = "adcc"


class Trend(str, Enum):
    INCREASE = "increase"
    DECREASE = "decrease"


class MetricSpec(BaseModel):
    name: str
    direction: Direction
    # Expected movement of a well-behaved curve; None for scalar metrics.
    trend: Optional[Trend] = None
    short: str


METRICS: Dict[str, MetricSpec] = {
    CurveMetric.DELETION.value: MetricSpec(name="deletion", direction=Direction.LOWER_BETTER, trend=Trend.DECREASE, short="Del"),
    CurveMetric.INSERTION.value: MetricSpec(name="insertion", direction=Direction.HIGHER_BETTER, trend=Trend.INCREASE, short="Ins"),
    CurveMetric.INSERTION_BLUR.value: MetricSpec(name="insertion_blur", direction=Direction.HIGHER_BETTER, trend=Trend.INCREASE, short="InsBlur"),
    CurveMetric.PERTURBATION.value: MetricSpec(name="perturbation", direction=Direction.HIGHER_BETTER, trend=Trend.INCREASE, short="Perturb"),
    ScalarMetric.AVERAGE_DROP.value: MetricSpec(name="average_drop", direction=Direction.LOWER_BETTER, short="AD"),
    ScalarMetric.INCREASE_IN_CONFIDENCE.value: MetricSpec(name="increase_in_confidence", direction=Direction.HIGHER_BETTER, short="IIC"),
    ScalarMetric.COMPLEXITY.value: MetricSpec(name="complexity", direction=Direction.LOWER_BETTER, short="CP"),
    ScalarMetric.COHERENCY.value: MetricSpec(name="coherency", direction=Direction.HIGHER_BETTER, short="CH"),
    ScalarMetric.ADCC.value: MetricSpec(name="adcc", direction=Direction.HIGHER_BETTER, short="ADCC"),
}


def metric_spec(name: str) -> MetricSpec:
    if name not in METRICS:
        raise KeyError(f"unknown metric '{name}', choose from {sorted(METRICS)}")
    return METRICS[name]


def is_curve_metric(name: str) -> bool:
    return name in {m.value for m in CurveMetric}


def compute_curve(metric: Union[str, CurveMetric], model: Model, image: Image8, attribution: Union[AttributionMap, np.ndarray], steps: int,
                  target_class: TargetClass, attack: Optional[AttackResult] = None, blur_sigma: float = DEFAULT_BLUR_SIGMA) -> ProbabilityCurve:
    metric = CurveMetric(metric)
    if metric is CurveMetric.DELETION:
        return deletion_curve(model, image, attribution, steps, target_class)
    if metric is CurveMetric.INSERTION:
        return insertion_curve(model, image, attribution, steps, target_class)
    if metric is CurveMetric.INSERTION_BLUR:
        return insertion_blur_curve(model, image, attribution, steps, target_class, blur_sigma)
    if attack is None:
        raise AttackFailedError("the perturbation metric needs an attack result")
    return perturbation_curve(model, image, attack, attribution, steps, target_class)
