from typing import Any

import numpy as np

from imaging.filters import gaussian_blur
from methods.integrated_gradients_method import BaselineKind, IGParams
from methods.maps import AttributionMap
from methods.method_base import MethodBase
from nn.model import Model, input_gradient
from nn.tensors import TargetClass, Tensor


def blur_schedule(sigma_max: float, steps: int) -> np.ndarray:
    """sigma_j = sigma_max * (1 - j / m), j = 0..m: from the blurred baseline down to the image."""
    if sigma_max <= 0:
        raise ValueError(f"sigma_max must be positive, got {sigma_max}")
    return sigma_max * (1.0 - np.arange(steps + 1) / steps)


def blur_integrated_gradients(model: Model, image: Tensor, target_class: TargetClass,
                              params: IGParams = IGParams(baseline=BaselineKind.BLUR)) -> AttributionMap:
    """Path sum over progressively less blurred images.

    Each segment contributes grad(midpoint image) * (gamma_j - gamma_{j-1}); the
    total telescopes to f(X) - f(blur(X, sigma_max)).
    """
    image = np.asarray(image, dtype=np.float64)
    sigmas = blur_schedule(params.sigma_max, params.steps)
    path = np.stack([gaussian_blur(image, sigma) for sigma in sigmas])
    midpoints = 0.5 * (path[1:] + path[:-1])
    gradients = input_gradient(model, midpoints, target_class)
    attributions = np.sum(gradients * np.diff(path, axis=0), axis=0)
    return AttributionMap(values=attributions.sum(axis=0), method="blur_integrated_gradients")


class BlurIntegratedGradientsMethod(MethodBase):
    name = "blur_integrated_gradients"
    description = "Integrated Gradients along a Gaussian blur path instead of a black baseline."
    params_schema = IGParams

    def compute(self, model: Model, image: Tensor, target_class: TargetClass, **params: Any) -> AttributionMap:
        params = {**params, "baseline": BaselineKind.BLUR}
        return blur_integrated_gradients(model, image, target_class, IGParams(**params))
