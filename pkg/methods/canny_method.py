from typing import Any

from imaging.filters import CannyParams, canny
from methods.maps import AttributionMap
from methods.method_base import MethodBase
from nn.model import Model
from nn.tensors import TargetClass, Tensor


def canny_baseline(image: Tensor, sigma: float = 1.0, low: float = 0.1, high: float = 0.2) -> AttributionMap:
    edges = canny(image, CannyParams(sigma=sigma, low=low, high=high))
    return AttributionMap(values=edges, method="canny")


class CannyMethod(MethodBase):
    name = "canny"
    description = "Sanity-check baseline: binary Canny edge map of the image."
    params_schema = CannyParams
    model_free = True

    def compute(self, model: Model, image: Tensor, target_class: TargetClass, **params: Any) -> AttributionMap:
        return canny_baseline(image, **CannyParams(**params).model_dump())
