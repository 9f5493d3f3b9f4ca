import numpy as np
import pytest
from pydantic import ValidationError

from errors import InvalidMapError
from methods.maps import AttributionMap, ChannelReduction, normalize_map, reduce_channels, upsample_bilinear


def test_attribution_map_validation():
    with pytest.raises(ValidationError):
        AttributionMap(values=np.array([[np.nan, 1.0]]))
    with pytest.raises(ValidationError):
        AttributionMap(values=np.zeros(4))
    attribution = AttributionMap(values=[[0.0, 1.0]], method="m")
    assert attribution.shape == (1, 2) and attribution.is_normalized()
    assert not AttributionMap(values=[[2.0]]).is_normalized()


def test_normalize_map():
    assert normalize_map(np.array([[0.0, 5.0, 10.0]])).values.tolist() == [[0.0, 0.5, 1.0]]
    assert normalize_map(np.full((2, 2), 7.0)).values.tolist() == [[0.0, 0.0], [0.0, 0.0]]


def test_normalize_is_idempotent(rng):
    once = normalize_map(AttributionMap(values=rng.normal(size=(5, 5)), method="x"))
    twice = normalize_map(once)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-15)
    assert twice.method == "x"


def test_normalize_rejects_non_finite():
    with pytest.raises(InvalidMapError):
        normalize_map(np.array([[1.0, np.inf]]))


def test_reduce_channels():
    gradient = np.array([[[1.0, -2.0]], [[-3.0, 0.5]]])
    assert reduce_channels(gradient, ChannelReduction.MAX_ABS).tolist() == [[3.0, 2.0]]
    assert reduce_channels(gradient, ChannelReduction.SUM_ABS).tolist() == [[4.0, 2.5]]
    np.testing.assert_allclose(reduce_channels(gradient, ChannelReduction.L2), [[np.sqrt(10.0), np.sqrt(4.25)]])


def test_upsample_identity():
    attribution = AttributionMap(values=[[1.0, 2.0], [3.0, 4.0]])
    assert upsample_bilinear(attribution, 2, 2) is attribution


def test_upsample_single_value_is_constant():
    out = upsample_bilinear(AttributionMap(values=[[0.7]]), 3, 4)
    np.testing.assert_allclose(out.values, 0.7)


def test_upsample_checkerboard_center():
    out = upsample_bilinear(AttributionMap(values=[[0.0, 1.0], [1.0, 0.0]]), 3, 3)
    assert out.values[1, 1] == pytest.approx(0.5)
    assert out.values[0, 1] == pytest.approx(0.5)


def test_upsample_2x2_to_4x4():
    out = upsample_bilinear(AttributionMap(values=[[0.0, 3.0], [6.0, 9.0]]), 4, 4).values
    assert [out[0, 0], out[0, 3], out[3, 0], out[3, 3]] == [0.0, 3.0, 6.0, 9.0]
    # Interior samples sit at thirds of the source grid: 3 * col + 6 * row in source units.
    np.testing.assert_allclose(out[1, 1], 3.0 / 3 + 6.0 / 3)
    np.testing.assert_allclose(out[2, 1], 3.0 / 3 + 12.0 / 3)


def test_upsample_rejects_shrinking():
    with pytest.raises(InvalidMapError):
        upsample_bilinear(AttributionMap(values=np.zeros((4, 4))), 2, 4)
