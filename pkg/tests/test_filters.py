import numpy as np
import pytest
from pydantic import ValidationError

from imaging.filters import CannyParams, canny, gaussian_blur, gaussian_kernel, hysteresis, sobel


def test_gaussian_kernel():
    kernel = gaussian_kernel(1.0)
    assert len(kernel) == 7
    assert kernel.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(kernel, kernel[::-1])
    assert np.argmax(kernel) == 3
    assert gaussian_kernel(0.0).tolist() == [1.0]


def test_blur_identity_and_validation(rng):
    image = rng.random((2, 6, 6))
    assert np.array_equal(gaussian_blur(image, 0.0), image)
    with pytest.raises(ValueError):
        gaussian_blur(image, -1.0)


def test_blur_keeps_constant_images():
    np.testing.assert_allclose(gaussian_blur(np.full((1, 9, 9), 0.4), 2.0), 0.4, atol=1e-12)


def test_blur_is_per_channel(rng):
    image = rng.random((3, 10, 10))
    blurred = gaussian_blur(image, 1.5)
    for c in range(3):
        np.testing.assert_allclose(blurred[c], gaussian_blur(image[c], 1.5), atol=1e-14)


def test_blur_matches_scipy(rng):
    ndimage = pytest.importorskip("scipy.ndimage")
    image = rng.random((12, 12))
    # scipy's 'reflect' mode is numpy's 'symmetric'; truncate=3 gives the same radius ceil(3 sigma).
    expected = ndimage.gaussian_filter(image, 1.0, mode="reflect", truncate=3.0)
    np.testing.assert_allclose(gaussian_blur(image, 1.0), expected, atol=1e-12)


def test_sobel_of_ramp():
    ramp = np.tile(np.arange(6, dtype=np.float64), (6, 1))
    gx, gy = sobel(ramp)
    # Interior columns: (1 + 2 + 1) * (x+1 - (x-1)).
    np.testing.assert_allclose(gx[:, 1:-1], 8.0)
    np.testing.assert_allclose(gy, 0.0)


def test_hysteresis_grows_from_strong_edges():
    suppressed = np.array([[0.0, 0.15, 0.3, 0.0, 0.15]])
    edges = hysteresis(suppressed, low=0.1, high=0.2)
    assert edges.tolist() == [[False, True, True, False, False]]


def test_canny_params_validation():
    with pytest.raises(ValidationError):
        CannyParams(low=0.3, high=0.2)


def test_canny_constant_image_has_no_edges():
    assert np.array_equal(canny(np.full((1, 8, 8), 0.5)), np.zeros((8, 8)))


def test_canny_vertical_step():
    image = np.zeros((1, 8, 8))
    image[:, :, 4:] = 1.0
    edges = canny(image)
    assert set(np.unique(edges)) <= {0.0, 1.0}
    columns = set(np.nonzero(edges.any(axis=0))[0].tolist())
    assert columns and columns <= {3, 4, 5}
    assert edges.any(axis=1).all()
