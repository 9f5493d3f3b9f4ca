from typing import Union

import numpy as np
from pydantic import BaseModel

from nn.tensors import Image8, Tensor


class ShiftReport(BaseModel):
    total_variation: float
    mean_shift: float


def intensity_histogram(image: Union[Image8, Tensor]) -> np.ndarray:
    """Normalized 256-bin histogram over all channel values."""
    if isinstance(image, Image8):
        values = image.pixels
    else:
        values = np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    counts = np.bincount(values.reshape(-1), minlength=256).astype(np.float64)
    return counts / counts.sum()


def distribution_shift(original: Image8, modified: Union[Image8, Tensor]) -> ShiftReport:
    """Total-variation distance between intensity histograms, plus the mean intensity change (8-bit units)."""
    p, q = intensity_histogram(original), intensity_histogram(modified)
    levels = np.arange(256)
    return ShiftReport(
        total_variation=float(0.5 * np.abs(p - q).sum()),
        mean_shift=float(np.dot(levels, q) - np.dot(levels, p)),
    )
