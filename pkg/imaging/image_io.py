"""Readers and writers for the file formats the harness exchanges.

IDX (big-endian, ubyte payload), binary PGM (P5) / PPM (P6) with maxval 255, and
raw attribution-map grids: magic b"PEVA" | u32 height | u32 width | float32 LE values.
"""
import struct
from pathlib import Path
from typing import List, Union

import numpy as np
from loguru import logger

from errors import DatasetFormatError
from nn.tensors import Image8

PathLike = Union[str, Path]
MAP_MAGIC = b"PEVA"
_IDX_UBYTE = 0x08


# --- IDX ---

def read_idx(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[0] != 0 or data[1] != 0:
        raise DatasetFormatError(f"{path}: bad IDX magic number")
    if data[2] != _IDX_UBYTE:
        raise DatasetFormatError(f"{path}: only unsigned-byte IDX payloads are supported (type 0x{data[2]:02x})")
    ndim = data[3]
    if ndim < 1 or len(data) < 4 + 4 * ndim:
        raise DatasetFormatError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", data[4:4 + 4 * ndim])
    payload = np.frombuffer(data, dtype=np.uint8, offset=4 + 4 * ndim)
    expected = int(np.prod(dims))
    if payload.size != expected:
        raise DatasetFormatError(f"{path}: IDX payload has {payload.size} bytes, header says {expected}")
    return payload.reshape(dims)


def write_idx(path: PathLike, array: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    array = np.asarray(array, dtype=np.uint8)
    header = bytes([0, 0, _IDX_UBYTE, array.ndim]) + struct.pack(f">{array.ndim}I", *array.shape)
    path.write_bytes(header + array.tobytes())
    return path


def images_from_idx(array: np.ndarray) -> List[Image8]:
    """(N, H, W) -> grayscale images; (N, H, W, C) -> channel-major images."""
    if array.ndim == 3:
        return [Image8(pixels=img[None, :, :]) for img in array]
    if array.ndim == 4:
        return [Image8(pixels=np.transpose(img, (2, 0, 1))) for img in array]
    raise DatasetFormatError(f"IDX image array must be 3-D or 4-D, got {array.ndim}-D")


# --- PGM / PPM ---

def _header_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DatasetFormatError("truncated PNM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pnm(path: PathLike) -> Image8:
    data = Path(path).read_bytes()
    tokens, offset = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise DatasetFormatError(f"{path}: unsupported PNM magic {magic!r}")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise DatasetFormatError(f"{path}: only maxval 255 is supported")
    channels = 1 if magic == b"P5" else 3
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height * channels, offset=offset)
    return Image8(pixels=np.transpose(pixels.reshape(height, width, channels), (2, 0, 1)))


def write_pnm(path: PathLike, image: Image8) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if image.channels not in (1, 3):
        raise DatasetFormatError(f"PNM needs 1 or 3 channels, got {image.channels}")
    magic = "P5" if image.channels == 1 else "P6"
    header = f"{magic}\n{image.width} {image.height}\n255\n".encode("ascii")
    path.write_bytes(header + np.transpose(image.pixels, (1, 2, 0)).tobytes())
    return path


def map_preview(values: np.ndarray) -> Image8:
    """Quantized 8-bit preview of a map (min-max scaled)."""
    values = np.asarray(values, dtype=np.float64)
    span = float(values.max() - values.min())
    scaled = (values - values.min()) / span if span > 0 else np.zeros_like(values)
    return Image8(pixels=np.rint(scaled * 255.0).astype(np.uint8)[None, :, :])


# --- Float grids ---

def write_map_grid(path: PathLike, values: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError(f"map grids are 2-D, got shape {values.shape}")
    h, w = values.shape
    path.write_bytes(MAP_MAGIC + struct.pack("<2I", h, w) + values.astype("<f4").tobytes())
    return path


def read_map_grid(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MAP_MAGIC:
        raise DatasetFormatError(f"{path}: bad map magic")
    h, w = struct.unpack("<2I", data[4:12])
    if len(data) != 12 + 4 * h * w:
        raise DatasetFormatError(f"{path}: map payload size does not match {h}x{w}")
    values = np.frombuffer(data, dtype="<f4", offset=12).astype(np.float64).reshape(h, w)
    logger.debug(f"Read {h}x{w} map grid from {path}")
    return values
