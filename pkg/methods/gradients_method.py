from typing import Any

from pydantic import BaseModel, Field

from methods.maps import AttributionMap, ChannelReduction, reduce_channels
from methods.method_base import MethodBase
from nn.model import Model, input_gradient
from nn.tensors import TargetClass, Tensor


class GradientsParams(BaseModel):
    reduction: ChannelReduction = Field(ChannelReduction.MAX_ABS, description="How channel gradients become one spatial map.")


def gradients_map(model: Model, image: Tensor, target_class: TargetClass,
                  reduction: ChannelReduction = ChannelReduction.MAX_ABS) -> AttributionMap:
    gradient = input_gradient(model, image, target_class)
    return AttributionMap(values=reduce_channels(gradient, reduction), method="gradients")


class GradientsMethod(MethodBase):
    name = "gradients"
    description = "Magnitude of the class-score gradient with respect to the input pixels."
    params_schema = GradientsParams

    def compute(self, model: Model, image: Tensor, target_class: TargetClass, reduction: ChannelReduction = ChannelReduction.MAX_ABS,
                **kwargs: Any) -> AttributionMap:
        return gradients_map(model, image, target_class, reduction)
