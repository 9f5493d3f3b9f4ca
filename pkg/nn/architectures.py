from typing import Dict, List, Tuple

from pydantic import BaseModel, Field

from nn.layers import Conv2D, Dense, GlobalAvgPool, Layer, MaxPool2x2, ReLU, Softmax, Standardize
from nn.model import Model


class LayerSpec(BaseModel):
    kind: str = Field(..., description="One of standardize, conv2d, relu, maxpool, gap, dense, softmax.")
    name: str
    channels: int = Field(0, ge=0, description="Output channels (conv2d) or units (dense).")
    kernel_size: int = Field(3, ge=1)


def _conv_stack(*widths: int, pool_after: Tuple[int, ...]) -> List[LayerSpec]:
    specs: List[LayerSpec] = [LayerSpec(kind="standardize", name="standardize")]
    for i, width in enumerate(widths, start=1):
        specs.append(LayerSpec(kind="conv2d", name=f"conv{i}", channels=width))
        # The last ReLU is the default GradCAM feature layer.
        specs.append(LayerSpec(kind="relu", name="features" if i == len(widths) else f"relu{i}"))
        if i in pool_after:
            specs.append(LayerSpec(kind="maxpool", name=f"pool{i}"))
    specs += [LayerSpec(kind="gap", name="gap"), LayerSpec(kind="dense", name="logits"), LayerSpec(kind="softmax", name="softmax")]
    return specs


ARCHITECTURES: Dict[str, List[LayerSpec]] = {
    "conv2": _conv_stack(8, 16, pool_after=(1,)),
    "conv3": _conv_stack(8, 16, 16, pool_after=(1, 2)),
    "wide2": _conv_stack(16, 32, pool_after=(1,)),
}


def build_model(specs: List[LayerSpec], input_shape: Tuple[int, int, int], num_classes: int, name: str = "model") -> Model:
    layers: List[Layer] = []
    shape: Tuple[int, ...] = tuple(input_shape)
    for spec in specs:
        if spec.kind == "standardize":
            layer: Layer = Standardize(spec.name, shape[0])
        elif spec.kind == "conv2d":
            layer = Conv2D(spec.name, shape[0], spec.channels, spec.kernel_size)
        elif spec.kind == "relu":
            layer = ReLU(spec.name)
        elif spec.kind == "maxpool":
            layer = MaxPool2x2(spec.name)
        elif spec.kind == "gap":
            layer = GlobalAvgPool(spec.name)
        elif spec.kind == "dense":
            features = 1
            for extent in shape:
                features *= extent
            layer = Dense(spec.name, features, spec.channels or num_classes)
        elif spec.kind == "softmax":
            layer = Softmax(spec.name)
        else:
            raise ValueError(f"unknown layer kind '{spec.kind}'")
        shape = tuple(layer.output_shape(shape))
        layers.append(layer)
    return Model(layers, input_shape, name=name)


def build_architecture(architecture: str, input_shape: Tuple[int, int, int], num_classes: int, seed: int = 0) -> Model:
    if architecture not in ARCHITECTURES:
        raise ValueError(f"unknown architecture '{architecture}', choose from {sorted(ARCHITECTURES)}")
    model = build_model(ARCHITECTURES[architecture], input_shape, num_classes, name=architecture)
    model.initialize(seed)
    return model
