from .tensors import Image8, LabeledDataset, TargetClass, Tensor
from .layers import Conv2D, Dense, GlobalAvgPool, Layer, MaxPool2x2, ReLU, Softmax, Standardize
from .model import (
    ForwardTrace,
    LayerCapture,
    Model,
    TrainReport,
    capture_layer,
    forward,
    input_gradient,
    layer_capture,
    linear_model,
    loss_gradient,
)
from .training import Optimizer, TrainConfig, train
from .gradcheck import central_difference, check_input_gradient, finite_difference_gradient, kink_margin, relative_error
from .architectures import ARCHITECTURES, LayerSpec, build_architecture, build_model
from .serialization import load_model, save_model

__all__ = [
    "Image8",
    "LabeledDataset",
    "TargetClass",
    "Tensor",
    "Conv2D",
    "Dense",
    "GlobalAvgPool",
    "Layer",
    "MaxPool2x2",
    "ReLU",
    "Softmax",
    "Standardize",
    "ForwardTrace",
    "LayerCapture",
    "Model",
    "TrainReport",
    "capture_layer",
    "forward",
    "input_gradient",
    "layer_capture",
    "linear_model",
    "loss_gradient",
    "Optimizer",
    "TrainConfig",
    "train",
    "central_difference",
    "check_input_gradient",
    "finite_difference_gradient",
    "kink_margin",
    "relative_error",
    "ARCHITECTURES",
    "LayerSpec",
    "build_architecture",
    "build_model",
    "load_model",
    "save_model",
]
