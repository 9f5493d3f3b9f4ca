from enum import Enum
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from errors import InvalidMapError


class ChannelReduction(str, Enum):
    MAX_ABS = "max-abs"
    SUM_ABS = "sum-abs"
    L2 = "l2"


class AttributionMap(BaseModel):
    """Per-pixel importance at input resolution, shape (height, width)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray = Field(..., description="Finite float64 array of shape (height, width).")
    method: str = ""

    @field_validator("values", mode="before")
    @classmethod
    def _check_values(cls, value):
        array = np.array(value, dtype=np.float64)
        if array.ndim != 2 or min(array.shape) < 1:
            raise ValueError(f"attribution maps are 2-D, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("attribution map contains non-finite values")
        array.setflags(write=False)
        return array

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self):
        return self.values.shape

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return bool(self.values.min() >= -tol and self.values.max() <= 1.0 + tol)


def reduce_channels(gradient: np.ndarray, mode: ChannelReduction = ChannelReduction.MAX_ABS) -> np.ndarray:
    """(C, H, W) -> (H, W)."""
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.ndim == 2:
        gradient = gradient[None]
    mode = ChannelReduction(mode)
    if mode is ChannelReduction.MAX_ABS:
        return np.abs(gradient).max(axis=0)
    if mode is ChannelReduction.SUM_ABS:
        return np.abs(gradient).sum(axis=0)
    return np.sqrt(np.sum(gradient ** 2, axis=0))


def normalize_map(attribution: Union[AttributionMap, np.ndarray]) -> AttributionMap:
    """Min-max rescale to [0, 1]; constant maps become all zeros."""
    method = attribution.method if isinstance(attribution, AttributionMap) else ""
    values = np.asarray(attribution.values if isinstance(attribution, AttributionMap) else attribution, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidMapError("cannot normalize a map with non-finite values")
    low, high = float(values.min()), float(values.max())
    if high == low:
        return AttributionMap(values=np.zeros_like(values), method=method)
    return AttributionMap(values=(values - low) / (high - low), method=method)


def _interpolation_axis(source: int, target: int):
    if target == 1 or source == 1:
        coords = np.zeros(target)
    else:
        coords = np.arange(target) * (source - 1) / (target - 1)
    lower = np.floor(coords).astype(int)
    upper = np.minimum(lower + 1, source - 1)
    return lower, upper, coords - lower


def upsample_bilinear(attribution: AttributionMap, target_h: int, target_w: int) -> AttributionMap:
    """Align-corners bilinear interpolation to (target_h, target_w)."""
    if target_h < 1 or target_w < 1:
        raise InvalidMapError(f"target size must be positive, got {target_h}x{target_w}")
    values = attribution.values
    h, w = values.shape
    if target_h < h or target_w < w:
        raise InvalidMapError(f"cannot upsample {h}x{w} to smaller {target_h}x{target_w}")
    if (target_h, target_w) == (h, w):
        return attribution
    r0, r1, rf = _interpolation_axis(h, target_h)
    c0, c1, cf = _interpolation_axis(w, target_w)
    rows = values[r0] * (1 - rf)[:, None] + values[r1] * rf[:, None]
    out = rows[:, c0] * (1 - cf)[None, :] + rows[:, c1] * cf[None, :]
    return AttributionMap(values=out, method=attribution.method)
