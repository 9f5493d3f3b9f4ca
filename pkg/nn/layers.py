from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

Shape = Tuple[int, ...]
Grads = Dict[str, np.ndarray]


class Layer(ABC):
    """One stage of a Model.

    Layers hold parameters only. Everything a backward pass needs is returned
    from forward as an opaque cache, so concurrent calls never share scratch state.
    """

    kind: str

    def __init__(self, name: str):
        self.name = name

    @abstractmethod
    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Any]:
        pass

    @abstractmethod
    def backward(self, dy: np.ndarray, cache: Any) -> Tuple[np.ndarray, Grads]:
        pass

    @abstractmethod
    def output_shape(self, input_shape: Shape) -> Shape:
        pass

    def parameters(self) -> Dict[str, np.ndarray]:
        return {}

    def initialize(self, rng: np.random.Generator, scale: float = None) -> None:
        pass

    def descriptor(self) -> Dict[str, Any]:
        return {"kind": self.kind, "name": self.name}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"


class Standardize(Layer):
    """Fixed per-channel (x - mean) / std on the raw [0, 1] input.

    The statistics are fit once from training images and never receive gradient
    updates, so input gradients of the whole model stay in raw pixel units.
    """

    kind = "standardize"

    def __init__(self, name: str, channels: int):
        super().__init__(name)
        self.channels = channels
        self.mean = np.zeros(channels)
        self.std = np.ones(channels)

    def fit(self, x: np.ndarray) -> None:
        """Per-channel statistics of a (N, C, H, W) batch; a constant channel keeps std 1."""
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ValueError(f"{self.name}: expected (N, {self.channels}, H, W) images, got {x.shape}")
        self.mean = x.mean(axis=(0, 2, 3))
        std = x.std(axis=(0, 2, 3))
        self.std = np.where(std > 1e-12, std, 1.0)

    def forward(self, x):
        return (x - self.mean[None, :, None, None]) / self.std[None, :, None, None], None

    def backward(self, dy, cache):
        return dy / self.std[None, :, None, None], {}

    def output_shape(self, input_shape):
        if input_shape[0] != self.channels:
            raise ValueError(f"{self.name}: expected {self.channels} input channels, got {input_shape[0]}")
        return input_shape

    def parameters(self):
        return {"mean": self.mean, "std": self.std}

    def descriptor(self):
        return {**super().descriptor(), "channels": self.channels}


class Conv2D(Layer):
    """Stride-1 convolution. Weights (out, in, k, k); padding 'same' or 'valid'."""

    kind = "conv2d"

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel_size: int = 3, padding: str = "same"):
        super().__init__(name)
        if padding not in ("same", "valid"):
            raise ValueError(f"unsupported padding '{padding}'")
        if padding == "same" and kernel_size % 2 == 0:
            raise ValueError("'same' padding needs an odd kernel size")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.padding = padding
        self.weight = np.zeros((out_channels, in_channels, kernel_size, kernel_size))
        self.bias = np.zeros(out_channels)

    @property
    def pad(self) -> int:
        return self.kernel_size // 2 if self.padding == "same" else 0

    def forward(self, x):
        p = self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        windows = sliding_window_view(xp, (self.kernel_size, self.kernel_size), axis=(2, 3))
        # windows: (N, C, H', W', k, k) -> (N, H', W', K)
        y = np.tensordot(windows, self.weight, axes=([1, 4, 5], [1, 2, 3]))
        y = y.transpose(0, 3, 1, 2) + self.bias[None, :, None, None]
        return np.ascontiguousarray(y), (x.shape, windows)

    def backward(self, dy, cache):
        x_shape, windows = cache
        k, p = self.kernel_size, self.pad
        d_weight = np.tensordot(dy, windows, axes=([0, 2, 3], [0, 2, 3]))
        d_bias = dy.sum(axis=(0, 2, 3))
        # Full correlation of dy with the flipped kernel gives the padded-input gradient.
        dyp = np.pad(dy, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
        dy_windows = sliding_window_view(dyp, (k, k), axis=(2, 3))
        flipped = self.weight[:, :, ::-1, ::-1]
        dxp = np.tensordot(dy_windows, flipped, axes=([1, 4, 5], [0, 2, 3])).transpose(0, 3, 1, 2)
        h, w = x_shape[2], x_shape[3]
        dx = dxp[:, :, p:p + h, p:p + w]
        return np.ascontiguousarray(dx), {"weight": d_weight, "bias": d_bias}

    def output_shape(self, input_shape):
        c, h, w = input_shape
        if c != self.in_channels:
            raise ValueError(f"{self.name}: expected {self.in_channels} input channels, got {c}")
        shrink = 0 if self.padding == "same" else self.kernel_size - 1
        if h - shrink < 1 or w - shrink < 1:
            raise ValueError(f"{self.name}: input {input_shape} too small for kernel {self.kernel_size}")
        return self.out_channels, h - shrink, w - shrink

    def parameters(self):
        return {"weight": self.weight, "bias": self.bias}

    def initialize(self, rng, scale=None):
        if scale is None:
            fan = (self.in_channels + self.out_channels) * self.kernel_size ** 2
            scale = float(np.sqrt(6.0 / fan))
        self.weight = rng.uniform(-scale, scale, size=self.weight.shape)
        self.bias = np.zeros_like(self.bias)

    def descriptor(self):
        return {**super().descriptor(), "in_channels": self.in_channels, "out_channels": self.out_channels,
                "kernel_size": self.kernel_size, "padding": self.padding}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, dy, cache):
        return dy * cache, {}

    def output_shape(self, input_shape):
        return input_shape


class MaxPool2x2(Layer):
    """2x2 stride-2 max pool. Odd trailing rows/columns are dropped.

    Backward routes the gradient to the first maximal element in row-major window order.
    """

    kind = "maxpool"

    def forward(self, x):
        n, c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        cropped = x[:, :, :2 * h2, :2 * w2]
        flat = cropped.reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
        arg = flat.argmax(axis=-1)
        y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
        return y, (x.shape, arg)

    def backward(self, dy, cache):
        (n, c, h, w), arg = cache
        h2, w2 = h // 2, w // 2
        flat = np.zeros((n, c, h2, w2, 4))
        np.put_along_axis(flat, arg[..., None], dy[..., None], axis=-1)
        blocks = flat.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * h2, 2 * w2)
        dx = np.zeros((n, c, h, w))
        dx[:, :, :2 * h2, :2 * w2] = blocks
        return dx, {}

    def output_shape(self, input_shape):
        c, h, w = input_shape
        if h < 2 or w < 2:
            raise ValueError(f"{self.name}: input {input_shape} too small to pool")
        return c, h // 2, w // 2


class GlobalAvgPool(Layer):
    kind = "gap"

    def forward(self, x):
        return x.mean(axis=(2, 3)), x.shape

    def backward(self, dy, cache):
        n, c, h, w = cache
        return np.broadcast_to(dy[:, :, None, None] / (h * w), cache).copy(), {}

    def output_shape(self, input_shape):
        return (input_shape[0],)


class Dense(Layer):
    """Fully connected layer; inputs are flattened per sample. Weights (out, in)."""

    kind = "dense"

    def __init__(self, name: str, in_features: int, out_features: int):
        super().__init__(name)
        self.in_features = in_features
        self.out_features = out_features
        self.weight = np.zeros((out_features, in_features))
        self.bias = np.zeros(out_features)

    def forward(self, x):
        flat = x.reshape(x.shape[0], -1)
        return flat @ self.weight.T + self.bias, (x.shape, flat)

    def backward(self, dy, cache):
        x_shape, flat = cache
        dx = (dy @ self.weight).reshape(x_shape)
        return dx, {"weight": dy.T @ flat, "bias": dy.sum(axis=0)}

    def output_shape(self, input_shape):
        size = int(np.prod(input_shape))
        if size != self.in_features:
            raise ValueError(f"{self.name}: expected {self.in_features} features, got {size}")
        return (self.out_features,)

    def parameters(self):
        return {"weight": self.weight, "bias": self.bias}

    def initialize(self, rng, scale=None):
        if scale is None:
            scale = float(np.sqrt(6.0 / (self.in_features + self.out_features)))
        self.weight = rng.uniform(-scale, scale, size=self.weight.shape)
        self.bias = np.zeros_like(self.bias)

    def descriptor(self):
        return {**super().descriptor(), "in_features": self.in_features, "out_features": self.out_features}


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x):
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=1, keepdims=True)
        return y, y

    def backward(self, dy, cache):
        y = cache
        return y * (dy - np.sum(dy * y, axis=1, keepdims=True)), {}

    def output_shape(self, input_shape):
        return input_shape


LAYER_TYPES = {cls.kind: cls for cls in (Standardize, Conv2D, ReLU, MaxPool2x2, GlobalAvgPool, Dense, Softmax)}
