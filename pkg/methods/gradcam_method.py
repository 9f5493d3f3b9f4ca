from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field

from errors import ShapeMismatchError
from methods.maps import AttributionMap, upsample_bilinear
from methods.method_base import MethodBase
from nn.model import Model, capture_layer
from nn.tensors import TargetClass, Tensor


class GradCAMParams(BaseModel):
    layer: Optional[str] = Field(None, description="Feature layer name; defaults to the last spatial layer.")


def cam_from_capture(activations: np.ndarray, gradients: np.ndarray) -> np.ndarray:
    """ReLU(sum_k w_k A_k) with w_k the spatial mean of dA_k."""
    weights = gradients.mean(axis=(1, 2))
    return np.maximum(np.tensordot(weights, activations, axes=(0, 0)), 0.0)


def gradcam(model: Model, image: Tensor, target_class: TargetClass, layer: Optional[str] = None) -> AttributionMap:
    layer = layer or model.default_cam_layer()
    capture = capture_layer(model, image, target_class, layer)
    if capture.activations.ndim != 3:
        raise ShapeMismatchError(f"layer '{layer}' has no spatial extent (shape {capture.activations.shape})")
    cam = AttributionMap(values=cam_from_capture(capture.activations, capture.gradients), method="gradcam")
    _, height, width = model.input_shape
    return upsample_bilinear(cam, height, width)


class GradCAMMethod(MethodBase):
    name = "gradcam"
    description = "Gradient-weighted class activation map of a feature layer, upsampled to the input."
    params_schema = GradCAMParams

    def compute(self, model: Model, image: Tensor, target_class: TargetClass, layer: Optional[str] = None, **kwargs: Any) -> AttributionMap:
        return gradcam(model, image, target_class, layer)
