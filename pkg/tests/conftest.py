import numpy as np
import pytest

from harness.datasets import generate_shapes
from nn.architectures import LayerSpec, build_model
from nn.layers import Conv2D
from nn.model import Model, linear_model
from nn.tensors import Image8, LabeledDataset

TINY_SPECS = [
    LayerSpec(kind="conv2d", name="conv1", channels=3),
    LayerSpec(kind="relu", name="relu1"),
    LayerSpec(kind="maxpool", name="pool1"),
    LayerSpec(kind="conv2d", name="conv2", channels=4),
    LayerSpec(kind="relu", name="features"),
    LayerSpec(kind="gap", name="gap"),
    LayerSpec(kind="dense", name="logits"),
    LayerSpec(kind="softmax", name="softmax"),
]


def make_tiny_model(seed: int = 3, channels: int = 1, size: int = 8, num_classes: int = 3, conv_bias: float = 0.0) -> Model:
    model = build_model(TINY_SPECS, (channels, size, size), num_classes, name="tiny")
    model.initialize(seed)
    for layer in model.layers:
        if isinstance(layer, Conv2D):
            layer.bias = np.full(layer.out_channels, conv_bias)
    return model


def random_image8(rng: np.random.Generator, shape=(1, 8, 8)) -> Image8:
    return Image8(pixels=rng.integers(0, 256, size=shape))


def bright_dark_dataset(count: int = 40, size: int = 8, seed: int = 0) -> LabeledDataset:
    """Class 0 is dark, class 1 is bright."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for i in range(count):
        label = i % 2
        low, high = (0, 60) if label == 0 else (180, 256)
        images.append(Image8(pixels=rng.integers(low, high, size=(1, size, size))))
        labels.append(label)
    return LabeledDataset(images=images, labels=labels, name="bright-dark")


def threshold_model(image: Image8, margin: float = 0.004) -> Model:
    """Two-class linear softmax model that puts `image` just on the class-0 side of the boundary.

    z0 - z1 = 2 * mean(x) - b1, with b1 chosen so the gap at `image` is `margin`.
    """
    size = int(np.prod(image.shape))
    w = np.full(size, 1.0 / size)
    model = linear_model(np.stack([w, -w]), image.shape, softmax=True)
    model.layers[0].bias = np.array([0.0, 2.0 * float(image.to_tensor().mean()) - margin])
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model():
    return make_tiny_model()


@pytest.fixture
def rgb_model():
    return make_tiny_model(seed=5, channels=3, num_classes=2)


@pytest.fixture(scope="session")
def shapes_dataset():
    return generate_shapes(40, size=12, seed=0)
