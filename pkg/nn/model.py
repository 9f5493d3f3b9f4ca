import copy
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict

from errors import InvalidClassError, ShapeMismatchError, StaleCaptureError, UnknownLayerError
from nn.layers import Dense, Layer, Softmax
from nn.tensors import TargetClass, Tensor, as_batch


class ForwardTrace:
    """Per-call record of a forward pass (and, after backward, its gradients).

    Traces are never stored on the model, so concurrent callers each own theirs.
    """

    def __init__(self, inputs: np.ndarray, outputs: List[np.ndarray], caches: List[Any], single: bool):
        self.inputs = inputs
        self.outputs = outputs
        self.caches = caches
        self.single = single
        self.gradients: Optional[Dict[str, np.ndarray]] = None

    @property
    def result(self) -> np.ndarray:
        return self.outputs[-1]


class LayerCapture(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    layer: str
    activations: np.ndarray
    gradients: np.ndarray


class TrainReport(BaseModel):
    epochs: int
    final_loss: float
    train_accuracy: float
    test_accuracy: Optional[float] = None


class Model:
    """Layered CNN. Parameters are fixed after training; all passes are pure functions of the input."""

    def __init__(self, layers: List[Layer], input_shape: Tuple[int, ...], name: str = "model"):
        if not layers:
            raise ValueError("a model needs at least one layer")
        self.layers = layers
        self.input_shape = tuple(int(v) for v in input_shape)
        self.name = name
        self.report: Optional[TrainReport] = None
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate layer names in {names}")
        self._index = {layer_name: i for i, layer_name in enumerate(names)}
        self.shapes = self._chain_shapes()

    def _chain_shapes(self) -> List[Tuple[int, ...]]:
        shapes, shape = [], self.input_shape
        for layer in self.layers:
            shape = tuple(layer.output_shape(shape))
            shapes.append(shape)
        return shapes

    @property
    def num_classes(self) -> int:
        return int(self.shapes[-1][0])

    @property
    def has_softmax(self) -> bool:
        return isinstance(self.layers[-1], Softmax)

    @property
    def layer_names(self) -> List[str]:
        return [layer.name for layer in self.layers]

    def layer_index(self, name: str) -> int:
        if name not in self._index:
            raise UnknownLayerError(f"model '{self.name}' has no layer named '{name}'")
        return self._index[name]

    def spatial_layers(self) -> List[str]:
        return [layer.name for layer, shape in zip(self.layers, self.shapes) if len(shape) == 3]

    def default_cam_layer(self) -> str:
        """Last layer whose output still has spatial extent."""
        spatial = self.spatial_layers()
        if not spatial:
            raise UnknownLayerError(f"model '{self.name}' has no spatial feature layer")
        return spatial[-1]

    def copy(self) -> "Model":
        return copy.deepcopy(self)

    def initialize(self, seed: int, scale: Optional[float] = None) -> None:
        rng = np.random.default_rng(seed)
        for layer in self.layers:
            layer.initialize(rng, scale)

    def parameter_count(self) -> int:
        return int(sum(p.size for layer in self.layers for p in layer.parameters().values()))

    # --- Passes ---

    def forward_trace(self, x: Tensor, start: int = 0) -> ForwardTrace:
        if start == 0:
            batch, single = as_batch(x, self.input_shape)
        else:
            batch, single = as_batch(x, self.shapes[start - 1])
        outputs, caches = [], []
        current = batch
        for layer in self.layers[start:]:
            current, cache = layer.forward(current)
            outputs.append(current)
            caches.append(cache)
        # Pad so outputs[i] always belongs to layers[i].
        outputs = [None] * start + outputs
        caches = [None] * start + caches
        return ForwardTrace(batch, outputs, caches, single)

    def backward(self, trace: ForwardTrace, grad_output: np.ndarray, stop: int = -1,
                 skip_last: bool = False) -> Tuple[np.ndarray, Dict[str, np.ndarray], Dict[str, Dict[str, np.ndarray]]]:
        """Back-propagates grad_output; returns (input gradient, per-layer output gradients, parameter gradients).

        With skip_last, grad_output is taken as the gradient of the last layer's input
        (used for the fused softmax/cross-entropy gradient).
        """
        layer_grads: Dict[str, np.ndarray] = {}
        param_grads: Dict[str, Dict[str, np.ndarray]] = {}
        grad = grad_output
        last = len(self.layers) - 1
        if skip_last:
            last -= 1
        for i in range(last, stop, -1):
            layer = self.layers[i]
            if trace.caches[i] is None:
                break
            layer_grads[layer.name] = grad
            grad, params = layer.backward(grad, trace.caches[i])
            if params:
                param_grads[layer.name] = params
        trace.gradients = layer_grads
        return grad, layer_grads, param_grads

    def forward_from(self, layer: str, activations: Tensor) -> np.ndarray:
        """Runs the layers after `layer`, treating `activations` as that layer's output."""
        start = self.layer_index(layer) + 1
        if start >= len(self.layers):
            return np.asarray(activations, dtype=np.float64)
        trace = self.forward_trace(activations, start=start)
        return trace.result[0] if trace.single else trace.result

    def predict(self, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
        images = np.asarray(images, dtype=np.float64)
        if images.shape == self.input_shape:
            return forward(self, images)
        chunks = [self.forward_trace(images[i:i + batch_size]).result for i in range(0, len(images), batch_size)]
        return np.concatenate(chunks, axis=0) if chunks else np.zeros((0, self.num_classes))

    def check_class(self, target_class: TargetClass) -> int:
        if target_class.class_id >= self.num_classes:
            raise InvalidClassError(f"class {target_class.class_id} out of range for {self.num_classes} outputs")
        return target_class.class_id

    def describe(self) -> List[Dict[str, Any]]:
        return [layer.descriptor() for layer in self.layers]

    def __repr__(self) -> str:
        return f"Model(name={self.name!r}, input_shape={self.input_shape}, layers={self.layer_names})"


# --- Operations ---

def forward(model: Model, image: Tensor) -> np.ndarray:
    """Output vector (softmax probabilities when the model ends in softmax) for one image."""
    trace = model.forward_trace(image)
    return trace.result[0] if trace.single else trace.result


def _class_seed(model: Model, trace: ForwardTrace, class_id: int) -> np.ndarray:
    seed = np.zeros_like(trace.result)
    seed[:, class_id] = 1.0
    return seed


def input_gradient(model: Model, image: Tensor, target_class: TargetClass) -> Tensor:
    """d f^(c) / dX, same shape as the image."""
    class_id = model.check_class(target_class)
    trace = model.forward_trace(image)
    grad, _, _ = model.backward(trace, _class_seed(model, trace, class_id))
    return grad[0] if trace.single else grad


def loss_gradient(model: Model, image: Tensor, target: TargetClass) -> Tensor:
    """d L / dX for cross-entropy L on the softmax output."""
    class_id = model.check_class(target)
    if not model.has_softmax:
        raise ShapeMismatchError(f"model '{model.name}' has no softmax head for a cross-entropy loss")
    trace = model.forward_trace(image)
    onehot = np.zeros_like(trace.result)
    onehot[:, class_id] = 1.0
    # Fused softmax + cross-entropy: dL/dz = p - y.
    grad, _, _ = model.backward(trace, trace.result - onehot, skip_last=True)
    return grad[0] if trace.single else grad


def layer_capture(model: Model, layer: str, trace: Optional[ForwardTrace]) -> Tuple[np.ndarray, np.ndarray]:
    """Activations A_k and gradients d f^(c) / dA_k of `layer` recorded in `trace`."""
    index = model.layer_index(layer)
    if trace is None or trace.outputs[index] is None:
        raise StaleCaptureError(f"no forward pass recorded for layer '{layer}'")
    if trace.gradients is None or layer not in trace.gradients:
        raise StaleCaptureError(f"no backward pass recorded for layer '{layer}'")
    activations, gradients = trace.outputs[index], trace.gradients[layer]
    if trace.single:
        return activations[0], gradients[0]
    return activations, gradients


def capture_layer(model: Model, image: Tensor, target_class: TargetClass, layer: str) -> LayerCapture:
    """Forward + backward for class `target_class`, returning the capture of `layer`."""
    class_id = model.check_class(target_class)
    model.layer_index(layer)
    trace = model.forward_trace(image)
    model.backward(trace, _class_seed(model, trace, class_id))
    activations, gradients = layer_capture(model, layer, trace)
    logger.debug(f"Captured layer '{layer}' of '{model.name}': activations {activations.shape}")
    return LayerCapture(layer=layer, activations=activations, gradients=gradients)


def linear_model(weights: np.ndarray, input_shape: Tuple[int, ...], bias: float = 0.0, softmax: bool = False) -> Model:
    """Dense-only model. One weight row gives f(x) = w.x + b; several rows give logits (optionally softmaxed)."""
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    layer = Dense("dense", weights.shape[1], weights.shape[0])
    layer.weight = weights.copy()
    layer.bias = np.full(weights.shape[0], float(bias))
    layers: List[Layer] = [layer]
    if softmax:
        layers.append(Softmax("softmax"))
    return Model(layers, input_shape, name="linear")
