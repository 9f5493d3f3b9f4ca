from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import ShapeMismatchError

# Tensors are float64 numpy arrays. Images are channel-major (C, H, W).
Tensor = np.ndarray


class Image8(BaseModel):
    """Discrete 8-bit image, channel-major (C, H, W), values in {0, ..., 255}."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pixels: np.ndarray = Field(..., description="uint8 array of shape (channels, height, width).")

    @field_validator("pixels", mode="before")
    @classmethod
    def _coerce_pixels(cls, value):
        array = np.asarray(value)
        if array.ndim == 2:
            array = array[None, :, :]
        if array.ndim != 3 or min(array.shape) < 1:
            raise ValueError(f"expected a (C, H, W) array, got shape {array.shape}")
        if array.dtype != np.uint8:
            if np.any(array < 0) or np.any(array > 255) or np.any(array != np.round(array)):
                raise ValueError("8-bit pixels must be integers in [0, 255]")
            array = array.astype(np.uint8)
        array = np.ascontiguousarray(array)
        array.setflags(write=False)
        return array

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[2])

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.channels, self.height, self.width

    def to_tensor(self) -> Tensor:
        return self.pixels.astype(np.float64) / 255.0

    def as_int(self) -> np.ndarray:
        """Signed copy for integer arithmetic (attacks)."""
        return self.pixels.astype(np.int16)

    @classmethod
    def from_tensor(cls, tensor: Tensor) -> "Image8":
        scaled = np.rint(np.asarray(tensor, dtype=np.float64) * 255.0)
        return cls(pixels=np.clip(scaled, 0, 255).astype(np.uint8))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image8):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __hash__(self) -> int:
        return hash((self.shape, self.pixels.tobytes()))


class TargetClass(BaseModel):
    class_id: int = Field(..., ge=0, description="Class index into the model output.")
    probability: Optional[float] = Field(None, ge=0.0, le=1.0, description="Model confidence for the class, when known.")


class LabeledDataset(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    images: List[Image8]
    labels: List[int]
    name: str = "dataset"

    @model_validator(mode="after")
    def _check_counts(self) -> "LabeledDataset":
        if len(self.images) != len(self.labels):
            raise ValueError(f"{len(self.images)} images but {len(self.labels)} labels")
        if any(label < 0 for label in self.labels):
            raise ValueError("labels must be non-negative")
        shapes = {image.shape for image in self.images}
        if len(shapes) > 1:
            raise ValueError(f"images have mixed shapes: {sorted(shapes)}")
        return self

    def __len__(self) -> int:
        return len(self.images)

    def as_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        if not self.images:
            return np.zeros((0,)), np.zeros((0,), dtype=np.int64)
        return np.stack([image.to_tensor() for image in self.images]), np.asarray(self.labels, dtype=np.int64)

    def subset(self, indices: List[int]) -> "LabeledDataset":
        return LabeledDataset(images=[self.images[i] for i in indices], labels=[self.labels[i] for i in indices], name=self.name)


def as_batch(x: Tensor, input_shape: Tuple[int, ...]) -> Tuple[np.ndarray, bool]:
    """Adds a batch axis to a single sample; returns (batch, was_single)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape == tuple(input_shape):
        return x[None, ...], True
    if x.ndim == len(input_shape) + 1 and x.shape[1:] == tuple(input_shape):
        return x, False
    raise ShapeMismatchError(f"input of shape {x.shape} does not match model input {tuple(input_shape)}")
