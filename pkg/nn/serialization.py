"""Flat binary model format.

    header   magic b"PEVM" | u16 version | u32 C, H, W (input shape) | u16 layer count
    layers   u8 type code | u8 name length | name (utf-8) | type fields (u32 each)
               standardize: channels
               conv2d: in_channels, out_channels, kernel_size, padding (0 same, 1 valid)
               dense:  in_features, out_features
    params   for each parametrised layer in order, float32 little-endian:
               conv2d, dense: weight then bias; standardize: mean then std

All integers are little-endian.
"""
import struct
from pathlib import Path
from typing import BinaryIO, List, Union

import numpy as np
from loguru import logger

from errors import DatasetFormatError
from nn.layers import Conv2D, Dense, GlobalAvgPool, Layer, MaxPool2x2, ReLU, Softmax, Standardize
from nn.model import Model

MAGIC = b"PEVM"
VERSION = 1
TYPE_CODES = {"conv2d": 1, "relu": 2, "maxpool": 3, "gap": 4, "dense": 5, "softmax": 6, "standardize": 7}
_PADDING_CODES = {"same": 0, "valid": 1}


def _write_layer(stream: BinaryIO, layer: Layer) -> None:
    name = layer.name.encode("utf-8")
    stream.write(struct.pack("<BB", TYPE_CODES[layer.kind], len(name)))
    stream.write(name)
    if isinstance(layer, Conv2D):
        stream.write(struct.pack("<4I", layer.in_channels, layer.out_channels, layer.kernel_size, _PADDING_CODES[layer.padding]))
    elif isinstance(layer, Dense):
        stream.write(struct.pack("<2I", layer.in_features, layer.out_features))
    elif isinstance(layer, Standardize):
        stream.write(struct.pack("<I", layer.channels))


def save_model(model: Model, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as stream:
        stream.write(MAGIC)
        stream.write(struct.pack("<H3IH", VERSION, *model.input_shape, len(model.layers)))
        for layer in model.layers:
            _write_layer(stream, layer)
        for layer in model.layers:
            for value in layer.parameters().values():
                stream.write(np.asarray(value, dtype="<f4").tobytes())
    logger.info(f"Saved model '{model.name}' ({model.parameter_count()} parameters) to {path}")
    return path


def _read(stream: BinaryIO, size: int) -> bytes:
    data = stream.read(size)
    if len(data) != size:
        raise DatasetFormatError("truncated model file")
    return data


def load_model(path: Union[str, Path], name: str = None) -> Model:
    path = Path(path)
    with open(path, "rb") as stream:
        if _read(stream, 4) != MAGIC:
            raise DatasetFormatError(f"{path} is not a model file (bad magic)")
        version, c, h, w, count = struct.unpack("<H3IH", _read(stream, 16))
        if version != VERSION:
            raise DatasetFormatError(f"unsupported model format version {version}")
        codes = {code: kind for kind, code in TYPE_CODES.items()}
        paddings = {code: padding for padding, code in _PADDING_CODES.items()}
        layers: List[Layer] = []
        for _ in range(count):
            code, name_length = struct.unpack("<BB", _read(stream, 2))
            if code not in codes:
                raise DatasetFormatError(f"unknown layer type code {code}")
            layer_name = _read(stream, name_length).decode("utf-8")
            kind = codes[code]
            if kind == "conv2d":
                cin, cout, k, pad = struct.unpack("<4I", _read(stream, 16))
                layers.append(Conv2D(layer_name, cin, cout, k, paddings[pad]))
            elif kind == "dense":
                fin, fout = struct.unpack("<2I", _read(stream, 8))
                layers.append(Dense(layer_name, fin, fout))
            elif kind == "standardize":
                (channels,) = struct.unpack("<I", _read(stream, 4))
                layers.append(Standardize(layer_name, channels))
            else:
                layers.append({"relu": ReLU, "maxpool": MaxPool2x2, "gap": GlobalAvgPool, "softmax": Softmax}[kind](layer_name))
        for layer in layers:
            for key, current in layer.parameters().items():
                values = np.frombuffer(_read(stream, 4 * current.size), dtype="<f4").astype(np.float64)
                setattr(layer, key, values.reshape(current.shape))
        if stream.read(1):
            raise DatasetFormatError(f"trailing bytes after parameters in {path}")
    model = Model(layers, (c, h, w), name=name or path.stem)
    logger.info(f"Loaded model '{model.name}' from {path}")
    return model
