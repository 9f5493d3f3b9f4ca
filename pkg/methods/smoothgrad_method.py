from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from methods.gradients_method import gradients_map
from methods.maps import AttributionMap, ChannelReduction, reduce_channels
from methods.method_base import MethodBase
from nn.model import Model, input_gradient
from nn.tensors import TargetClass, Tensor


class SmoothGradParams(BaseModel):
    samples: int = Field(25, ge=1, description="Number of noisy gradient evaluations n.")
    sigma: float = Field(0.1, ge=0, description="Noise std as a fraction of the image value range.")
    seed: int = Field(0, description="Noise RNG seed.")
    reduction: ChannelReduction = ChannelReduction.MAX_ABS


def smoothgrad(model: Model, image: Tensor, target_class: TargetClass, params: SmoothGradParams = SmoothGradParams()) -> AttributionMap:
    """Channel reduction of the gradient averaged over Gaussian-noised copies of the image.

    Noise is added in continuous [0, 1] space and is not re-quantized.
    """
    if params.sigma == 0:
        return gradients_map(model, image, target_class, params.reduction).model_copy(update={"method": "smoothgrad"})
    image = np.asarray(image, dtype=np.float64)
    value_range = float(image.max() - image.min()) or 1.0
    rng = np.random.default_rng(params.seed)
    noisy = image[None] + rng.normal(0.0, params.sigma * value_range, size=(params.samples,) + image.shape)
    gradients = input_gradient(model, noisy, target_class)
    return AttributionMap(values=reduce_channels(gradients.mean(axis=0), params.reduction), method="smoothgrad")


class SmoothGradMethod(MethodBase):
    name = "smoothgrad"
    description = "Gradients averaged over noisy copies of the input."
    params_schema = SmoothGradParams

    def compute(self, model: Model, image: Tensor, target_class: TargetClass, **params: Any) -> AttributionMap:
        return smoothgrad(model, image, target_class, SmoothGradParams(**params))
