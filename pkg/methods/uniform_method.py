from typing import Any

import numpy as np
from pydantic import BaseModel

from methods.maps import AttributionMap
from methods.method_base import MethodBase
from nn.model import Model
from nn.tensors import TargetClass, Tensor


class UniformParams(BaseModel):
    seed: int = 0


def uniform_baseline(height: int, width: int, seed: int) -> AttributionMap:
    """I.i.d. U[0, 1) importance: a map that carries no information."""
    rng = np.random.default_rng(seed)
    return AttributionMap(values=rng.random((height, width)), method="uniform")


class UniformMethod(MethodBase):
    name = "uniform"
    description = "Sanity-check baseline: uniform random importance."
    params_schema = UniformParams
    model_free = True

    def compute(self, model: Model, image: Tensor, target_class: TargetClass, seed: int = 0, **kwargs: Any) -> AttributionMap:
        _, height, width = np.shape(image)
        return uniform_baseline(height, width, seed)
