from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from conftest import make_tiny_model
from errors import InvalidClassError, ShapeMismatchError, StaleCaptureError, UnknownLayerError
from nn.architectures import ARCHITECTURES, build_architecture
from nn.gradcheck import central_difference
from nn.layers import Conv2D, Dense, GlobalAvgPool, MaxPool2x2, ReLU, Softmax
from nn.model import Model, capture_layer, forward, input_gradient, layer_capture, linear_model, loss_gradient
from nn.tensors import TargetClass


def loop_forward(model: Model, x: np.ndarray) -> np.ndarray:
    """Layer-by-layer evaluation with explicit loops, independent of the engine's vectorized passes."""
    a = x.copy()
    for layer in model.layers:
        if isinstance(layer, Conv2D):
            c, h, w = a.shape
            k, p = layer.kernel_size, layer.pad
            padded = np.zeros((c, h + 2 * p, w + 2 * p))
            padded[:, p:p + h, p:p + w] = a
            out = np.zeros((layer.out_channels, h, w))
            for o in range(layer.out_channels):
                for i in range(h):
                    for j in range(w):
                        total = layer.bias[o]
                        for ci in range(c):
                            for di in range(k):
                                for dj in range(k):
                                    total += padded[ci, i + di, j + dj] * layer.weight[o, ci, di, dj]
                        out[o, i, j] = total
            a = out
        elif isinstance(layer, ReLU):
            a = np.where(a > 0, a, 0.0)
        elif isinstance(layer, MaxPool2x2):
            c, h, w = a.shape
            out = np.zeros((c, h // 2, w // 2))
            for ci in range(c):
                for i in range(h // 2):
                    for j in range(w // 2):
                        out[ci, i, j] = max(a[ci, 2 * i + di, 2 * j + dj] for di in range(2) for dj in range(2))
            a = out
        elif isinstance(layer, GlobalAvgPool):
            a = np.array([a[ci].sum() / a[ci].size for ci in range(a.shape[0])])
        elif isinstance(layer, Dense):
            flat = a.reshape(-1)
            a = np.array([sum(layer.weight[o, i] * flat[i] for i in range(flat.size)) + layer.bias[o]
                          for o in range(layer.out_features)])
        elif isinstance(layer, Softmax):
            e = np.exp(a - a.max())
            a = e / e.sum()
    return a


def test_forward_matches_loop_nest(tiny_model, rng):
    x = rng.random((1, 8, 8))
    np.testing.assert_allclose(forward(tiny_model, x), loop_forward(tiny_model, x), atol=1e-12)


def test_probabilities_sum_to_one(tiny_model, rng):
    probabilities = forward(tiny_model, rng.random((6, 1, 8, 8)))
    assert probabilities.shape == (6, 3)
    np.testing.assert_allclose(probabilities.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(probabilities >= 0)


def test_batch_rows_equal_single_calls(tiny_model, rng):
    batch = rng.random((4, 1, 8, 8))
    stacked = np.stack([forward(tiny_model, x) for x in batch])
    np.testing.assert_allclose(forward(tiny_model, batch), stacked, atol=1e-12)


def test_forward_rejects_wrong_shape(tiny_model):
    with pytest.raises(ShapeMismatchError):
        forward(tiny_model, np.zeros((1, 7, 8)))


def test_input_gradient_of_linear_model_is_w(rng):
    w = rng.normal(size=16)
    model = linear_model(w, (1, 4, 4), bias=0.3)
    x = rng.random((1, 4, 4))
    np.testing.assert_allclose(forward(model, x), [w @ x.reshape(-1) + 0.3])
    assert np.array_equal(input_gradient(model, x, TargetClass(class_id=0)), w.reshape(1, 4, 4))


def test_constant_model_has_zero_gradient(rng):
    model = linear_model(np.zeros((2, 16)), (1, 4, 4), softmax=True)
    gradient = input_gradient(model, rng.random((1, 4, 4)), TargetClass(class_id=1))
    assert np.array_equal(gradient, np.zeros((1, 4, 4)))


def test_input_gradient_rejects_unknown_class(tiny_model):
    with pytest.raises(InvalidClassError):
        input_gradient(tiny_model, np.zeros((1, 8, 8)), TargetClass(class_id=3))


def test_loss_gradient_closed_form(rng):
    weights = rng.normal(size=(2, 9))
    model = linear_model(weights, (1, 3, 3), softmax=True)
    x = rng.random((1, 3, 3))
    p = forward(model, x)
    y = np.array([0.0, 1.0])
    expected = ((p - y) @ weights).reshape(1, 3, 3)
    np.testing.assert_allclose(loss_gradient(model, x, TargetClass(class_id=1)), expected, atol=1e-12)


def test_loss_gradient_matches_finite_differences(tiny_model, rng):
    x = rng.random((1, 8, 8))
    analytic = loss_gradient(tiny_model, x, TargetClass(class_id=0))
    numeric = central_difference(lambda shifted: -np.log(forward(tiny_model, shifted)[0]), x, h=1e-6)
    significant = np.abs(numeric) > 1e-8
    assert np.any(significant)
    agree = np.mean(np.sign(analytic[significant]) == np.sign(numeric[significant]))
    assert agree >= 0.99


def test_loss_gradient_is_zero_at_certainty():
    weights = np.zeros((2, 4))
    weights[0] = 1000.0
    model = linear_model(weights, (1, 2, 2), softmax=True)
    gradient = loss_gradient(model, np.ones((1, 2, 2)), TargetClass(class_id=0))
    np.testing.assert_allclose(gradient, 0.0, atol=1e-12)


def test_loss_gradient_needs_softmax(rng):
    model = linear_model(rng.normal(size=(2, 4)), (1, 2, 2))
    with pytest.raises(ShapeMismatchError):
        loss_gradient(model, np.ones((1, 2, 2)), TargetClass(class_id=0))


def test_layer_capture_shapes(tiny_model, rng):
    capture = capture_layer(tiny_model, rng.random((1, 8, 8)), TargetClass(class_id=1), "features")
    assert capture.activations.shape == (4, 4, 4)
    assert capture.gradients.shape == capture.activations.shape


def test_layer_capture_gradients_match_finite_differences(tiny_model, rng):
    x = rng.random((1, 8, 8))
    capture = capture_layer(tiny_model, x, TargetClass(class_id=2), "features")
    numeric = central_difference(lambda a: float(tiny_model.forward_from("features", a)[2]), capture.activations, h=1e-6)
    np.testing.assert_allclose(capture.gradients, numeric, rtol=1e-3, atol=1e-9)


def test_killed_channel_contributes_nothing(tiny_model, rng):
    x = rng.random((1, 8, 8))
    conv = tiny_model.layers[tiny_model.layer_index("conv2")]
    conv.weight[0] = 0.0
    conv.bias[0] = -1.0
    capture = capture_layer(tiny_model, x, TargetClass(class_id=0), "features")
    assert np.all(capture.activations[0] == 0)
    trace = tiny_model.forward_trace(x)
    tiny_model.backward(trace, np.eye(3)[[0]])
    _, relu_input_grad = layer_capture(tiny_model, "conv2", trace)
    assert np.all(relu_input_grad[0] == 0)


def test_forward_from_reproduces_forward(tiny_model, rng):
    x = rng.random((1, 8, 8))
    trace = tiny_model.forward_trace(x)
    activations = trace.outputs[tiny_model.layer_index("pool1")][0]
    np.testing.assert_allclose(tiny_model.forward_from("pool1", activations), forward(tiny_model, x), atol=1e-12)


def test_stale_capture(tiny_model, rng):
    with pytest.raises(StaleCaptureError):
        layer_capture(tiny_model, "features", None)
    trace = tiny_model.forward_trace(rng.random((1, 8, 8)))
    with pytest.raises(StaleCaptureError):
        layer_capture(tiny_model, "features", trace)


def test_unknown_layer(tiny_model):
    with pytest.raises(UnknownLayerError):
        tiny_model.layer_index("conv9")
    with pytest.raises(KeyError):
        capture_layer(tiny_model, np.zeros((1, 8, 8)), TargetClass(class_id=0), "conv9")


def test_duplicate_layer_names_rejected():
    with pytest.raises(ValueError):
        Model([ReLU("a"), ReLU("a")], (1, 2, 2))


def test_default_cam_layer_is_last_spatial_layer(tiny_model):
    assert tiny_model.default_cam_layer() == "features"
    assert tiny_model.spatial_layers() == ["conv1", "relu1", "pool1", "conv2", "features"]


def test_copy_is_independent(tiny_model):
    clone = tiny_model.copy()
    clone.layers[0].weight += 1.0
    assert not np.array_equal(clone.layers[0].weight, tiny_model.layers[0].weight)


def test_concurrent_gradients_equal_serial(tiny_model, rng):
    images = rng.random((16, 1, 8, 8))
    target_class = TargetClass(class_id=1)
    serial = [input_gradient(tiny_model, x, target_class) for x in images]
    with ThreadPoolExecutor(max_workers=4) as pool:
        parallel = list(pool.map(lambda x: input_gradient(tiny_model, x, target_class), images))
    for a, b in zip(serial, parallel):
        np.testing.assert_allclose(a, b, atol=1e-15)


@pytest.mark.parametrize("architecture", sorted(ARCHITECTURES))
def test_architectures_build(architecture):
    model = build_architecture(architecture, (1, 16, 16), 2, seed=0)
    assert model.num_classes == 2
    assert model.default_cam_layer() == "features"
    assert forward(model, np.zeros((1, 16, 16))).shape == (2,)


def test_unknown_architecture():
    with pytest.raises(ValueError):
        build_architecture("resnet", (1, 16, 16), 2)


def test_initialization_is_seeded():
    a, b, c = make_tiny_model(seed=1), make_tiny_model(seed=1), make_tiny_model(seed=2)
    assert np.array_equal(a.layers[0].weight, b.layers[0].weight)
    assert not np.array_equal(a.layers[0].weight, c.layers[0].weight)
