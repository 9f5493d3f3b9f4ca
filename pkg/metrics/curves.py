"""Pixel-modification score functions.

Every curve walks a schedule of pixels ordered by attribution value (highest
first) from a start image towards a target image, recording the class
probability after each chunk:

    deletion        X        -> black
    insertion       black    -> X
    insertion_blur  blur(X)  -> X
    perturbation    X*       -> X      (X* an adversarial 8-bit image)

All channels of a pixel change together.
"""
from enum import Enum
from typing import List, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from attacks import AttackResult
from errors import AttackFailedError, InvalidMapError, ShapeMismatchError
from imaging.filters import gaussian_blur
from methods.maps import AttributionMap
from nn.model import Model
from nn.tensors import Image8, TargetClass

DEFAULT_STEPS = 100
DEFAULT_BLUR_SIGMA = 5.0


class Direction(str, Enum):
    HIGHER_BETTER = "higher-better"
    LOWER_BETTER = "lower-better"


class PixelSchedule(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    order: np.ndarray = Field(..., description="Row-major flat pixel indices, most important first.")
    chunks: List[np.ndarray]
    height: int
    width: int

    @property
    def steps(self) -> int:
        return len(self.chunks)

    @property
    def pixels_per_step(self) -> List[int]:
        return [len(chunk) for chunk in self.chunks]


class ProbabilityCurve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: np.ndarray = Field(..., description="Fraction of pixels changed, 0 to 1.")
    y: np.ndarray = Field(..., description="Target-class probability at each x.")
    metric: str = ""

    @model_validator(mode="after")
    def _check(self) -> "ProbabilityCurve":
        if len(self.x) != len(self.y):
            raise ValueError(f"curve has {len(self.x)} x values and {len(self.y)} y values")
        if len(self.x) > 1 and np.any(np.diff(self.x) <= 0):
            raise ValueError("curve x values must be strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.y)


class MetricScore(BaseModel):
    auc: float
    direction: Direction


def _map_values(attribution: Union[AttributionMap, np.ndarray]) -> np.ndarray:
    values = attribution.values if isinstance(attribution, AttributionMap) else np.asarray(attribution, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise InvalidMapError(f"cannot schedule an empty or non 2-D map of shape {values.shape}")
    return values


def pixel_schedule(attribution: Union[AttributionMap, np.ndarray], steps: int = DEFAULT_STEPS) -> PixelSchedule:
    """Descending by value, ties by ascending row-major index, split into `steps` near-equal chunks."""
    values = _map_values(attribution)
    if steps < 1 or steps > values.size:
        raise ValueError(f"steps must be in [1, {values.size}], got {steps}")
    order = np.argsort(-values.reshape(-1), kind="stable")
    # array_split puts the remainder into the first chunks.
    chunks = np.array_split(order, steps)
    return PixelSchedule(order=order, chunks=chunks, height=values.shape[0], width=values.shape[1])


def schedule_states(start: np.ndarray, target: np.ndarray, schedule: PixelSchedule) -> np.ndarray:
    """(steps + 1, C, H, W) images visited while moving `start` towards `target` chunk by chunk."""
    if start.shape != target.shape or start.shape[1:] != (schedule.height, schedule.width):
        raise ShapeMismatchError(f"image {target.shape} does not match map {schedule.height}x{schedule.width}")
    states = np.empty((schedule.steps + 1,) + start.shape)
    current = start.copy()
    states[0] = current
    for i, chunk in enumerate(schedule.chunks, start=1):
        rows, cols = np.divmod(chunk, schedule.width)
        current[:, rows, cols] = target[:, rows, cols]
        states[i] = current
    return states


def _walk(model: Model, start: np.ndarray, target: np.ndarray, schedule: PixelSchedule, target_class: TargetClass, metric: str) -> ProbabilityCurve:
    class_id = model.check_class(target_class)
    states = schedule_states(start, target, schedule)
    probabilities = model.predict(states)[:, class_id]
    changed = np.concatenate([[0], np.cumsum(schedule.pixels_per_step)])
    x = changed.astype(np.float64) / (schedule.height * schedule.width)
    return ProbabilityCurve(x=x, y=probabilities, metric=metric)


def deletion_curve(model: Model, image: Image8, attribution: Union[AttributionMap, np.ndarray], steps: int, target_class: TargetClass) -> ProbabilityCurve:
    x = image.to_tensor()
    return _walk(model, x, np.zeros_like(x), pixel_schedule(attribution, steps), target_class, "deletion")


def insertion_curve(model: Model, image: Image8, attribution: Union[AttributionMap, np.ndarray], steps: int, target_class: TargetClass) -> ProbabilityCurve:
    x = image.to_tensor()
    return _walk(model, np.zeros_like(x), x, pixel_schedule(attribution, steps), target_class, "insertion")


def insertion_blur_curve(model: Model, image: Image8, attribution: Union[AttributionMap, np.ndarray], steps: int, target_class: TargetClass,
                         sigma: float = DEFAULT_BLUR_SIGMA) -> ProbabilityCurve:
    if sigma <= 0:
        raise ValueError(f"insertion blur sigma must be positive, got {sigma}")
    x = image.to_tensor()
    return _walk(model, gaussian_blur(x, sigma), x, pixel_schedule(attribution, steps), target_class, "insertion_blur")


def perturbation_curve(model: Model, image: Image8, attack: AttackResult, attribution: Union[AttributionMap, np.ndarray], steps: int,
                       target_class: TargetClass) -> ProbabilityCurve:
    """Undo the adversarial perturbation, highest-attribution pixels first."""
    if not attack.success:
        raise AttackFailedError("perturbation curve needs a successful attack")
    if attack.adversarial.shape != image.shape:
        raise ShapeMismatchError(f"adversarial {attack.adversarial.shape} does not match image {image.shape}")
    return _walk(model, attack.adversarial.to_tensor(), image.to_tensor(), pixel_schedule(attribution, steps), target_class, "perturbation")


def auc(curve: ProbabilityCurve, direction: Direction = Direction.HIGHER_BETTER) -> MetricScore:
    """Trapezoidal area under the curve over x normalized to [0, 1]."""
    if len(curve) < 2:
        raise ValueError("auc needs at least two curve points")
    x, y = np.asarray(curve.x, dtype=np.float64), np.asarray(curve.y, dtype=np.float64)
    area = float(np.sum(np.diff(x) * (y[1:] + y[:-1]) * 0.5) / (x[-1] - x[0]))
    return MetricScore(auc=area, direction=direction)
