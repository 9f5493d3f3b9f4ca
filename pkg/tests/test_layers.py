import numpy as np
import pytest

from nn.gradcheck import central_difference
from nn.layers import Conv2D, Dense, GlobalAvgPool, MaxPool2x2, ReLU, Softmax, Standardize


def naive_conv(x, weight, bias, pad):
    n, c, h, w = x.shape
    out, _, k, _ = weight.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho, wo = xp.shape[2] - k + 1, xp.shape[3] - k + 1
    y = np.zeros((n, out, ho, wo))
    for b in range(n):
        for o in range(out):
            for i in range(ho):
                for j in range(wo):
                    y[b, o, i, j] = np.sum(xp[b, :, i:i + k, j:j + k] * weight[o]) + bias[o]
    return y


def check_backward(layer, x, rng, atol=1e-8):
    y, cache = layer.forward(x)
    dy = rng.normal(size=y.shape)
    dx, _ = layer.backward(dy, cache)
    numeric = central_difference(lambda shifted: float(np.sum(layer.forward(shifted)[0] * dy)), x, h=1e-6)
    np.testing.assert_allclose(dx, numeric, rtol=1e-5, atol=atol)


@pytest.mark.parametrize("padding", ["same", "valid"])
def test_conv_matches_loop_nest(rng, padding):
    layer = Conv2D("conv", 2, 3, 3, padding)
    layer.initialize(rng)
    layer.bias = rng.normal(size=3)
    x = rng.normal(size=(2, 2, 5, 6))
    y, _ = layer.forward(x)
    expected = naive_conv(x, layer.weight, layer.bias, layer.pad)
    np.testing.assert_allclose(y, expected, atol=1e-12)
    assert y.shape[1:] == layer.output_shape((2, 5, 6))


def test_conv_backward_matches_finite_differences(rng):
    layer = Conv2D("conv", 2, 3)
    layer.initialize(rng)
    check_backward(layer, rng.normal(size=(1, 2, 5, 5)), rng)


def test_conv_parameter_gradients(rng):
    layer = Conv2D("conv", 1, 2)
    layer.initialize(rng)
    x = rng.normal(size=(2, 1, 4, 4))
    y, cache = layer.forward(x)
    dy = rng.normal(size=y.shape)
    _, grads = layer.backward(dy, cache)

    def loss_for_weight(weight):
        layer.weight = weight
        return float(np.sum(layer.forward(x)[0] * dy))

    numeric = central_difference(loss_for_weight, layer.weight.copy(), h=1e-6)
    np.testing.assert_allclose(grads["weight"], numeric, rtol=1e-5, atol=1e-8)
    np.testing.assert_allclose(grads["bias"], dy.sum(axis=(0, 2, 3)))


def test_conv_rejects_even_same_kernel():
    with pytest.raises(ValueError):
        Conv2D("conv", 1, 1, kernel_size=2, padding="same")


def test_relu_masks_negatives():
    layer = ReLU("relu")
    x = np.array([[-1.0, 0.0, 2.0]])
    y, cache = layer.forward(x)
    assert y.tolist() == [[0.0, 0.0, 2.0]]
    dx, _ = layer.backward(np.ones_like(x), cache)
    assert dx.tolist() == [[0.0, 0.0, 1.0]]


def test_maxpool_crops_odd_sizes_and_routes_ties_to_first():
    layer = MaxPool2x2("pool")
    x = np.arange(25, dtype=np.float64).reshape(1, 1, 5, 5)
    y, _ = layer.forward(x)
    assert y.shape == (1, 1, 2, 2)
    assert y[0, 0].tolist() == [[6.0, 8.0], [16.0, 18.0]]

    tied = np.ones((1, 1, 2, 2))
    _, cache = layer.forward(tied)
    dx, _ = layer.backward(np.array([[[[5.0]]]]), cache)
    assert dx[0, 0].tolist() == [[5.0, 0.0], [0.0, 0.0]]


def test_maxpool_backward_matches_finite_differences(rng):
    check_backward(MaxPool2x2("pool"), rng.normal(size=(1, 2, 4, 5)), rng)


def test_global_average_pool(rng):
    layer = GlobalAvgPool("gap")
    x = rng.normal(size=(2, 3, 4, 4))
    y, _ = layer.forward(x)
    np.testing.assert_allclose(y, x.mean(axis=(2, 3)))
    check_backward(layer, x, rng)


def test_dense_flattens_and_backpropagates(rng):
    layer = Dense("dense", 12, 4)
    layer.initialize(rng)
    x = rng.normal(size=(3, 3, 2, 2))
    y, _ = layer.forward(x)
    np.testing.assert_allclose(y, x.reshape(3, -1) @ layer.weight.T + layer.bias)
    check_backward(layer, x, rng)


def test_softmax_normalizes_and_backpropagates(rng):
    layer = Softmax("softmax")
    x = rng.normal(size=(4, 5)) * 3
    y, _ = layer.forward(x)
    np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(y >= 0)
    assert layer.forward(np.zeros((1, 2)))[0].tolist() == [[0.5, 0.5]]
    check_backward(layer, x, rng, atol=1e-9)


def test_standardize_fits_per_channel_statistics(rng):
    layer = Standardize("standardize", 2)
    x = rng.random((5, 2, 4, 4))
    x[:, 1] = 0.25
    layer.fit(x)
    assert layer.mean == pytest.approx([x[:, 0].mean(), 0.25])
    assert layer.std == pytest.approx([x[:, 0].std(), 1.0])
    y, _ = layer.forward(x)
    assert y[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
    assert y[:, 0].std() == pytest.approx(1.0)
    np.testing.assert_array_equal(y[:, 1], 0.0)
    check_backward(layer, x, rng)
    _, grads = layer.backward(np.ones_like(x), None)
    assert grads == {}


def test_standardize_rejects_wrong_channels(rng):
    layer = Standardize("standardize", 1)
    with pytest.raises(ValueError):
        layer.fit(rng.random((3, 2, 4, 4)))
    with pytest.raises(ValueError):
        layer.output_shape((3, 4, 4))
