from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from methods.maps import AttributionMap
from methods.method_base import MethodBase
from nn.model import Model, input_gradient
from nn.tensors import TargetClass, Tensor


class BaselineKind(str, Enum):
    BLACK = "black"
    BLUR = "blur"


class IGParams(BaseModel):
    steps: int = Field(32, ge=1, description="Riemann steps m.")
    baseline: BaselineKind = BaselineKind.BLACK
    sigma_max: float = Field(8.0, gt=0, description="Blur of the baseline image, in pixels (blur baseline only).")


def integrated_gradients(model: Model, image: Tensor, target_class: TargetClass, params: IGParams = IGParams()) -> AttributionMap:
    """Midpoint Riemann sum of the straight-line path integral from the black image, summed over channels."""
    if params.baseline is not BaselineKind.BLACK:
        raise ValueError("integrated_gradients uses the black baseline; use blur_integrated_gradients for blur")
    image = np.asarray(image, dtype=np.float64)
    baseline = np.zeros_like(image)
    alphas = (np.arange(1, params.steps + 1) - 0.5) / params.steps
    path = baseline[None] + alphas[:, None, None, None] * (image - baseline)[None]
    gradients = input_gradient(model, path, target_class)
    attributions = (image - baseline) * gradients.mean(axis=0)
    return AttributionMap(values=attributions.sum(axis=0), method="integrated_gradients")


class IntegratedGradientsMethod(MethodBase):
    name = "integrated_gradients"
    description = "Integrated Gradients along the straight line from a black image."
    params_schema = IGParams

    def compute(self, model: Model, image: Tensor, target_class: TargetClass, **params: Any) -> AttributionMap:
        return integrated_gradients(model, image, target_class, IGParams(**params))
