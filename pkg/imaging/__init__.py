from .filters import CannyParams, canny, gaussian_blur, gaussian_kernel, hysteresis, non_maximum_suppression, sobel
from .image_io import (
    images_from_idx,
    map_preview,
    read_idx,
    read_map_grid,
    read_pnm,
    write_idx,
    write_map_grid,
    write_pnm,
)

__all__ = [
    "CannyParams",
    "canny",
    "gaussian_blur",
    "gaussian_kernel",
    "hysteresis",
    "non_maximum_suppression",
    "sobel",
    "images_from_idx",
    "map_preview",
    "read_idx",
    "read_map_grid",
    "read_pnm",
    "write_idx",
    "write_map_grid",
    "write_pnm",
]
