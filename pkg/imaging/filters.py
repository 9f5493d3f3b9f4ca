import math
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, Field, model_validator


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with radius ceil(3 sigma)."""
    if sigma <= 0:
        return np.ones(1)
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def _filter_axis(array: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    if radius == 0:
        return array * kernel[0]
    pad = [(0, 0)] * array.ndim
    pad[axis] = (radius, radius)
    # 'symmetric' mirrors including the edge sample (d c b a | a b c d).
    padded = np.pad(array, pad, mode="symmetric")
    windows = sliding_window_view(padded, len(kernel), axis=axis)
    return windows @ kernel


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur over the last two axes; sigma in pixels, 0 is identity."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    image = np.asarray(image, dtype=np.float64)
    if sigma == 0:
        return image.copy()
    kernel = gaussian_kernel(sigma)
    blurred = _filter_axis(image, kernel, axis=image.ndim - 2)
    return _filter_axis(blurred, kernel, axis=image.ndim - 1)


def sobel(gray: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Horizontal and vertical Sobel responses of a 2-D array (symmetric borders)."""
    smooth = np.array([1.0, 2.0, 1.0])
    diff = np.array([-1.0, 0.0, 1.0])
    # sliding windows correlate, so [-1, 0, 1] yields right-minus-left.
    gx = _filter_axis(_filter_axis(gray, smooth, axis=0), diff, axis=1)
    gy = _filter_axis(_filter_axis(gray, diff, axis=0), smooth, axis=1)
    return gx, gy


def non_maximum_suppression(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(magnitude, 1)
    h, w = magnitude.shape

    def shifted(di: int, dj: int) -> np.ndarray:
        return padded[1 + di:1 + di + h, 1 + dj:1 + dj + w]

    bins = np.round(angle / 45.0).astype(int) % 4
    neighbours = {
        0: (shifted(0, -1), shifted(0, 1)),
        1: (shifted(-1, -1), shifted(1, 1)),
        2: (shifted(-1, 0), shifted(1, 0)),
        3: (shifted(-1, 1), shifted(1, -1)),
    }
    keep = np.zeros_like(magnitude, dtype=bool)
    for direction, (before, after) in neighbours.items():
        in_bin = bins == direction
        keep |= in_bin & (magnitude >= before) & (magnitude >= after)
    return np.where(keep & (magnitude > 0), magnitude, 0.0)


def hysteresis(suppressed: np.ndarray, low: float, high: float) -> np.ndarray:
    """Keeps strong edges and weak edges 8-connected to them."""
    strong = suppressed >= high
    weak = suppressed >= low
    edges = strong.copy()
    while True:
        padded = np.pad(edges, 1)
        h, w = edges.shape
        grown = np.zeros_like(edges)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                grown |= padded[1 + di:1 + di + h, 1 + dj:1 + dj + w]
        grown &= weak
        if np.array_equal(grown, edges):
            return edges
        edges = grown


class CannyParams(BaseModel):
    sigma: float = Field(1.0, ge=0, description="Gaussian smoothing in pixels.")
    low: float = Field(0.1, ge=0, description="Weak threshold as a fraction of the max gradient magnitude.")
    high: float = Field(0.2, description="Strong threshold as a fraction of the max gradient magnitude.")

    @model_validator(mode="after")
    def _check_order(self) -> "CannyParams":
        if not self.low < self.high:
            raise ValueError(f"canny thresholds need low < high, got low={self.low}, high={self.high}")
        return self


def canny(image: np.ndarray, params: CannyParams = CannyParams()) -> np.ndarray:
    """Binary {0, 1} edge map of a (C, H, W) or (H, W) float image."""
    image = np.asarray(image, dtype=np.float64)
    gray = image.mean(axis=0) if image.ndim == 3 else image
    smoothed = gaussian_blur(gray, params.sigma)
    gx, gy = sobel(smoothed)
    magnitude = np.hypot(gx, gy)
    peak = float(magnitude.max())
    if peak <= 1e-12:
        return np.zeros_like(gray)
    suppressed = non_maximum_suppression(magnitude, gx, gy)
    edges = hysteresis(suppressed, params.low * peak, params.high * peak)
    return edges.astype(np.float64)
