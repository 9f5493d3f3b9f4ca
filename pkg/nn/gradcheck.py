from typing import Callable

import numpy as np
from loguru import logger
from pydantic import BaseModel

from nn.layers import MaxPool2x2, ReLU
from nn.model import Model, forward, input_gradient
from nn.tensors import TargetClass, Tensor


class GradCheckReport(BaseModel):
    max_relative_error: float
    compared: int
    excluded: int
    kink_margin: float


def central_difference(fn: Callable[[np.ndarray], float], x: Tensor, h: float = 1e-3) -> np.ndarray:
    """(fn(x + h e_i) - fn(x - h e_i)) / 2h for every element i of x."""
    if h <= 0:
        raise ValueError(f"step h must be positive, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    shifted = x.copy()
    flat_shifted, flat_grad = shifted.reshape(-1), grad.reshape(-1)
    for i in range(flat_shifted.size):
        original = flat_shifted[i]
        flat_shifted[i] = original + h
        upper = fn(shifted)
        flat_shifted[i] = original - h
        lower = fn(shifted)
        flat_shifted[i] = original
        flat_grad[i] = (upper - lower) / (2.0 * h)
    return grad


def finite_difference_gradient(model: Model, image: Tensor, target_class: TargetClass, h: float = 1e-3) -> Tensor:
    class_id = model.check_class(target_class)
    return central_difference(lambda x: float(forward(model, x)[class_id]), image, h)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Max |a - n| / max(|a|, |n|) over elements where |a| >= floor."""
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    keep = np.abs(analytic) >= floor
    if not np.any(keep):
        return 0.0
    a, n = analytic[keep], numeric[keep]
    return float(np.max(np.abs(a - n) / np.maximum(np.abs(a), np.abs(n))))


def kink_margin(model: Model, image: Tensor) -> float:
    """Distance of the input from the nearest non-differentiable point of the network.

    Smallest |pre-activation| over ReLUs and smallest gap between the two largest
    values of any max-pool window. Finite differences with h well below this
    margin never straddle a kink.
    """
    trace = model.forward_trace(image)
    margin = np.inf
    for i, layer in enumerate(model.layers):
        layer_input = trace.inputs if i == 0 else trace.outputs[i - 1]
        if isinstance(layer, ReLU):
            margin = min(margin, float(np.min(np.abs(layer_input))))
        elif isinstance(layer, MaxPool2x2):
            n, c, h, w = layer_input.shape
            h2, w2 = h // 2, w // 2
            flat = layer_input[:, :, :2 * h2, :2 * w2].reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
            top = np.sort(flat, axis=-1)
            gaps = top[..., -1] - top[..., -2]
            # Windows of ReLU zeros stay tied at 0 while the ReLU margin holds.
            live = top[..., -1] != 0
            if np.any(live):
                margin = min(margin, float(np.min(gaps[live])))
    return float(margin)


def check_input_gradient(model: Model, image: Tensor, target_class: TargetClass, h: float = 1e-5, floor: float = 1e-8) -> GradCheckReport:
    analytic = input_gradient(model, image, target_class)
    numeric = finite_difference_gradient(model, image, target_class, h)
    excluded = int(np.sum(np.abs(analytic) < floor))
    report = GradCheckReport(
        max_relative_error=relative_error(analytic, numeric, floor),
        compared=int(analytic.size) - excluded,
        excluded=excluded,
        kink_margin=kink_margin(model, image),
    )
    logger.debug(f"Gradient check on '{model.name}': {report}")
    return report
