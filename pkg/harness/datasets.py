from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, model_validator

from errors import DatasetFormatError
from harness.config import DatasetKind, ExperimentConfig
from imaging.image_io import images_from_idx, read_idx
from nn.tensors import Image8, LabeledDataset

SQUARE, DISC = 0, 1
_MIN_EXTENT = 7


class ShapeStyle(BaseModel):
    """Gray levels of the synthetic shapes, in 8-bit units.

    The shape sits only `contrast` levels above the background, so a one-level
    perturbation of every pixel is a sizeable fraction of the class signal.
    """

    background: int = Field(0, ge=0, le=255)
    contrast: int = Field(3, ge=1, le=255)
    noise: float = Field(0.4, ge=0, description="Std of additive Gaussian pixel noise before rounding.")

    @model_validator(mode="after")
    def _fits_in_byte(self) -> "ShapeStyle":
        if self.background + self.contrast > 255:
            raise ValueError(f"background {self.background} + contrast {self.contrast} exceeds 255")
        return self

    @property
    def threshold(self) -> float:
        """Gray level halfway between background and shape."""
        return self.background + self.contrast / 2.0


def _shape_mask(kind: int, size: int, extent: int, top: int, left: int) -> np.ndarray:
    rows, cols = np.mgrid[0:size, 0:size]
    inside = (rows >= top) & (rows < top + extent) & (cols >= left) & (cols < left + extent)
    if kind == SQUARE:
        return inside
    center_r, center_c = top + (extent - 1) / 2.0, left + (extent - 1) / 2.0
    return (rows - center_r) ** 2 + (cols - center_c) ** 2 <= (extent / 2.0) ** 2


def generate_shapes(count: int, size: int = 16, seed: int = 0, name: str = "shapes", style: ShapeStyle = ShapeStyle()) -> LabeledDataset:
    """Grayscale images of one filled square (class 0) or disc (class 1) on a flat, lightly noisy background.

    Position and extent are random; classes alternate before a seeded shuffle, so
    counts differ by at most one.
    """
    if count < 2:
        raise ValueError(f"need at least two images for two classes, got {count}")
    if size < 8:
        raise ValueError(f"image size must be at least 8, got {size}")
    rng = np.random.default_rng(seed)
    labels = [i % 2 for i in range(count)]
    labels = [labels[i] for i in rng.permutation(count)]
    largest = max(_MIN_EXTENT, (3 * size) // 4)
    images = []
    for label in labels:
        extent = int(rng.integers(_MIN_EXTENT, largest + 1))
        top, left = (int(v) for v in rng.integers(0, size - extent + 1, size=2))
        canvas = np.full((size, size), float(style.background))
        canvas[_shape_mask(label, size, extent, top, left)] += style.contrast
        canvas += rng.normal(0.0, style.noise, size=canvas.shape)
        images.append(Image8(pixels=np.clip(np.rint(canvas), 0, 255).astype(np.uint8)[None, :, :]))
    logger.debug(f"Generated {count} shape images of {size}x{size} (seed {seed}, contrast {style.contrast})")
    return LabeledDataset(images=images, labels=labels, name=name)


def load_idx_dataset(images_path: Union[str, Path], labels_path: Union[str, Path], name: str = "idx") -> LabeledDataset:
    images = images_from_idx(read_idx(images_path))
    labels = read_idx(labels_path)
    if labels.ndim != 1:
        raise DatasetFormatError(f"{labels_path}: label file must be 1-D, got shape {labels.shape}")
    if len(labels) != len(images):
        raise DatasetFormatError(f"{len(images)} images but {len(labels)} labels")
    return LabeledDataset(images=images, labels=[int(v) for v in labels], name=name)


def load_datasets(config: ExperimentConfig) -> List[LabeledDataset]:
    """Every dataset variant the config names, in a deterministic order."""
    if config.dataset is DatasetKind.IDX:
        return [load_idx_dataset(config.idx_images, config.idx_labels, name=Path(config.idx_images).stem)]
    style = ShapeStyle(background=config.shape_background, contrast=config.shape_contrast, noise=config.shape_noise)
    return [generate_shapes(config.image_count, config.image_size, seed, name=f"shapes-s{seed}", style=style) for seed in config.dataset_seeds]


def split_dataset(dataset: LabeledDataset, train_fraction: float, seed: int = 0) -> Tuple[LabeledDataset, LabeledDataset]:
    """Seeded shuffle, then the first `train_fraction` of images train; at least one image lands on each side."""
    if len(dataset) < 2:
        raise ValueError("need at least two images to split")
    order = np.random.default_rng(seed).permutation(len(dataset))
    cut = min(max(int(round(train_fraction * len(dataset))), 1), len(dataset) - 1)
    train_part = dataset.subset(sorted(int(i) for i in order[:cut]))
    test_part = dataset.subset(sorted(int(i) for i in order[cut:]))
    return train_part, test_part
