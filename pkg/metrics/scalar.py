"""Scalar faithfulness scores computed on the explanation map X * h(X)."""
from typing import Callable, Union

import numpy as np
from loguru import logger

from analysis.statistics import pearson
from errors import InvalidMapError, UndefinedStatisticError
from methods.maps import AttributionMap
from nn.model import Model, forward
from nn.tensors import TargetClass, Tensor

MapLike = Union[AttributionMap, np.ndarray]
# Re-runs an attribution method on a new input (the explanation map).
Explainer = Callable[[Tensor], MapLike]


def _values(attribution: MapLike) -> np.ndarray:
    return attribution.values if isinstance(attribution, AttributionMap) else np.asarray(attribution, dtype=np.float64)


def _require_normalized(values: np.ndarray) -> None:
    if values.min() < 0.0 or values.max() > 1.0:
        raise InvalidMapError(f"map must be normalized to [0, 1], got range [{values.min():.4g}, {values.max():.4g}]")


def explanation_map(image: Tensor, attribution: MapLike) -> Tensor:
    """X * h(X), the map broadcast over channels."""
    values = _values(attribution)
    _require_normalized(values)
    image = np.asarray(image, dtype=np.float64)
    if image.shape[1:] != values.shape:
        raise InvalidMapError(f"map {values.shape} does not match image {image.shape}")
    return image * values[None, :, :]


def _confidences(model: Model, image: Tensor, attribution: MapLike, target_class: TargetClass):
    class_id = model.check_class(target_class)
    clean = float(forward(model, image)[class_id])
    explained = float(forward(model, explanation_map(image, attribution))[class_id])
    return clean, explained


def drop(clean: float, explained: float) -> float:
    return max(clean - explained, 0.0)


def average_drop(model: Model, image: Tensor, attribution: MapLike, target_class: TargetClass) -> float:
    """max(f(X) - f(X * h(X)), 0)."""
    return drop(*_confidences(model, image, attribution, target_class))


def increase_in_confidence(model: Model, image: Tensor, attribution: MapLike, target_class: TargetClass) -> int:
    clean, explained = _confidences(model, image, attribution, target_class)
    return int(clean < explained)


def complexity(attribution: MapLike) -> float:
    """L1 norm divided by the pixel count, so CP lies in [0, 1]."""
    values = _values(attribution)
    _require_normalized(values)
    return float(np.abs(values).sum() / values.size)


def coherency(image: Tensor, attribution: MapLike, explainer: Explainer) -> float:
    """Correlation of h(X) with h(X * h(X)), mapped from [-1, 1] to [0, 1] by (r + 1) / 2.

    A zero-variance map scores 0.
    """
    first = _values(attribution)
    second = _values(explainer(explanation_map(image, attribution)))
    try:
        r = pearson(first, second)
    except UndefinedStatisticError:
        logger.debug("Coherency undefined for a constant map; scoring 0")
        return 0.0
    return (r + 1.0) / 2.0


def adcc(ad: float, cp: float, ch: float) -> float:
    """3 / (1/CH + 1/(1 - CP) + 1/(1 - AD))."""
    if not 0.0 < ch <= 1.0:
        raise UndefinedStatisticError(f"ADCC needs CH in (0, 1], got {ch}")
    if not 0.0 <= cp < 1.0:
        raise UndefinedStatisticError(f"ADCC needs CP in [0, 1), got {cp}")
    if not 0.0 <= ad < 1.0:
        raise UndefinedStatisticError(f"ADCC needs AD in [0, 1), got {ad}")
    return 3.0 / (1.0 / ch + 1.0 / (1.0 - cp) + 1.0 / (1.0 - ad))
