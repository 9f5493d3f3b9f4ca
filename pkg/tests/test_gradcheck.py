import numpy as np
import pytest

from conftest import make_tiny_model
from nn.gradcheck import central_difference, check_input_gradient, finite_difference_gradient, kink_margin, relative_error
from nn.model import input_gradient, linear_model
from nn.tensors import TargetClass


def test_central_difference_of_square():
    numeric = central_difference(lambda x: float(x[0] ** 2), np.array([1.0]), h=1e-3)
    assert numeric[0] == pytest.approx(2.0, abs=1e-6)


def test_central_difference_rejects_non_positive_step():
    with pytest.raises(ValueError):
        central_difference(lambda x: 0.0, np.zeros(2), h=0.0)


def test_linear_model_recovers_weights(rng):
    w = rng.normal(size=16)
    model = linear_model(w, (1, 4, 4))
    numeric = finite_difference_gradient(model, rng.random((1, 4, 4)), TargetClass(class_id=0), h=1e-3)
    np.testing.assert_allclose(numeric, w.reshape(1, 4, 4), atol=1e-9)


def test_relative_error():
    assert relative_error(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
    assert relative_error(np.array([1.0, 2.0]), np.array([1.0, 3.0])) == pytest.approx(1.0 / 3.0)
    # Elements below the floor are not compared.
    assert relative_error(np.array([1e-12, 1.0]), np.array([1.0, 1.0])) == 0.0


def test_smooth_model_gradient_check(rng):
    weights = rng.normal(size=(3, 36))
    model = linear_model(weights, (1, 6, 6), softmax=True)
    x = rng.random((1, 6, 6))
    analytic = input_gradient(model, x, TargetClass(class_id=1))
    numeric = finite_difference_gradient(model, x, TargetClass(class_id=1), h=1e-4)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-7)


def _smooth_input(model, rng, margin=2e-4, attempts=200):
    for _ in range(attempts):
        x = rng.random(model.input_shape)
        if kink_margin(model, x) > margin:
            return x
    pytest.fail("no random input away from ReLU and max-pool kinks")


@pytest.mark.parametrize("pair", range(20))
def test_tiny_cnn_gradient_check(pair):
    rng = np.random.default_rng(100 + pair)
    # Positive conv biases keep units fed only by dead channels off the ReLU kink.
    model = make_tiny_model(seed=pair, conv_bias=0.05)
    x = _smooth_input(model, rng)
    target_class = TargetClass(class_id=pair % 3)
    analytic = input_gradient(model, x, target_class)
    numeric = finite_difference_gradient(model, x, target_class, h=1e-5)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-9)
    report = check_input_gradient(model, x, target_class, h=1e-5, floor=1e-5)
    assert report.max_relative_error < 1e-4
    assert report.compared + report.excluded == x.size
    assert report.kink_margin > 2e-4


def test_kink_margin_sees_relu_zero(tiny_model):
    # A black image puts every first-layer pre-activation exactly on the ReLU kink (bias 0).
    assert kink_margin(tiny_model, np.zeros((1, 8, 8))) == 0.0
