import numpy as np
import pytest

from analysis.shift import distribution_shift, intensity_histogram
from nn.tensors import Image8


def test_histogram_is_normalized(rng):
    histogram = intensity_histogram(Image8(pixels=rng.integers(0, 256, size=(3, 5, 5))))
    assert histogram.shape == (256,)
    assert histogram.sum() == pytest.approx(1.0)


def test_identical_images_have_no_shift(rng):
    image = Image8(pixels=rng.integers(0, 256, size=(1, 6, 6)))
    report = distribution_shift(image, image)
    assert report.total_variation == 0.0
    assert report.mean_shift == pytest.approx(0.0, abs=1e-9)


def test_black_to_white_is_maximal_shift():
    report = distribution_shift(Image8(pixels=np.zeros((1, 2, 2), dtype=np.uint8)), Image8(pixels=np.full((1, 2, 2), 255)))
    assert report.total_variation == pytest.approx(1.0)
    assert report.mean_shift == pytest.approx(255.0)


def test_float_images_are_quantized():
    original = Image8(pixels=np.full((1, 2, 2), 100))
    blurred = np.full((1, 2, 2), 101.2 / 255.0)
    report = distribution_shift(original, blurred)
    assert report.total_variation == pytest.approx(1.0)
    assert report.mean_shift == pytest.approx(1.0)


def test_one_level_attack_shift_is_small(rng):
    pixels = rng.integers(1, 255, size=(1, 8, 8))
    shifted = Image8(pixels=pixels + rng.choice([-1, 1], size=pixels.shape))
    report = distribution_shift(Image8(pixels=pixels), shifted)
    assert abs(report.mean_shift) <= 1.0
    assert 0.0 <= report.total_variation <= 1.0
