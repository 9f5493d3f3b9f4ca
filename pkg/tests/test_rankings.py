import numpy as np
import pytest

from analysis.rankings import (
    baseline_sanity_check,
    build_ranking,
    consistency_matrix,
    rank_methods,
    similarity_matrix,
    top_k_summary,
)
from analysis.statistics import pearson
from errors import UndefinedStatisticError
from methods.uniform_method import uniform_baseline
from metrics.curves import Direction

HIGHER = Direction.HIGHER_BETTER
LOWER = Direction.LOWER_BETTER


def table(means, label="t", dataset="", direction=HIGHER, metric="deletion"):
    return build_ranking({m: [v] for m, v in means.items()}, metric, direction, label=label, dataset=dataset)


def test_build_ranking_statistics():
    ranking = build_ranking({"gradcam": [1.0, 2.0, 3.0], "uniform": [5.0, 5.0]}, "insertion", HIGHER, label="shapes-conv2")
    assert ranking.order == ["uniform", "gradcam"]
    first, second = sorted(ranking.rows, key=lambda r: r.rank)
    assert (first.mean, first.std, first.count) == (5.0, 0.0, 2)
    assert second.mean == pytest.approx(2.0)
    assert second.std == pytest.approx(np.std([1.0, 2.0, 3.0]))
    assert ranking.ranks == {"uniform": 1, "gradcam": 2}


def test_lower_better_reverses_order():
    assert table({"a": 0.1, "b": 0.9}, direction=LOWER).order == ["a", "b"]
    assert table({"a": 0.1, "b": 0.9}, direction=HIGHER).order == ["b", "a"]


def test_ties_break_by_name():
    assert rank_methods({"smoothgrad": 0.5, "canny": 0.5, "gradients": 0.7}, HIGHER) == ["gradients", "canny", "smoothgrad"]


def test_build_ranking_rejects_empty_input():
    with pytest.raises(ValueError):
        build_ranking({}, "deletion", LOWER)
    with pytest.raises(ValueError):
        build_ranking({"a": []}, "deletion", LOWER)


def test_similarity_matrix(rng):
    maps = [rng.random((4, 4)) for _ in range(3)]
    matrix = similarity_matrix({"a": maps, "b": [2 * m + 1 for m in maps], "c": [-m for m in maps]})
    assert matrix.labels == ["a", "b", "c"]
    np.testing.assert_allclose(matrix.matrix, [[1, 1, -1], [1, 1, -1], [-1, -1, 1]], atol=1e-12)
    assert matrix.mean == pytest.approx(-1.0 / 3.0)
    assert matrix.excluded == {}


def test_similarity_skips_constant_maps(rng):
    first = [rng.random((3, 3)), rng.random((3, 3))]
    second = [first[0], np.zeros((3, 3))]
    matrix = similarity_matrix({"x": first, "y": second})
    assert matrix.matrix[0][1] == pytest.approx(1.0)
    assert matrix.excluded == {"x|y": 1}


def test_similarity_needs_equal_image_sets(rng):
    with pytest.raises(ValueError):
        similarity_matrix({"a": [rng.random((2, 2))], "b": []})


def test_consistency_matrix():
    forward = table({"a": 3.0, "b": 2.0, "c": 1.0}, label="one")
    same = table({"a": 30.0, "b": 20.0, "c": 10.0}, label="two")
    reverse = table({"a": 1.0, "b": 2.0, "c": 3.0}, label="three")
    matrix = consistency_matrix([forward, same, reverse])
    assert matrix.labels == ["one", "two", "three"]
    np.testing.assert_allclose(matrix.matrix, [[1, 1, -1], [1, 1, -1], [-1, -1, 1]])
    assert matrix.mean == pytest.approx(-1.0 / 3.0)
    assert matrix.std == pytest.approx(np.std([1.0, -1.0, -1.0]))


def test_consistency_needs_two_matching_tables():
    with pytest.raises(UndefinedStatisticError):
        consistency_matrix([table({"a": 1.0, "b": 2.0})])
    with pytest.raises(ValueError):
        consistency_matrix([table({"a": 1.0, "b": 2.0}), table({"a": 1.0, "c": 2.0})])


def test_baseline_sanity_check():
    tables = [
        table({"gradcam": 0.9, "canny": 0.2, "uniform": 0.1}, label="1"),
        table({"gradcam": 0.9, "canny": 0.05, "uniform": 0.1}, label="2"),
        table({"gradcam": 0.15, "canny": 0.2, "uniform": 0.1}, label="3"),
    ]
    counts = baseline_sanity_check(tables)
    assert (counts.uniform_last, counts.canny_second_to_last, counts.tables) == (2, 1, 3)
    assert counts.metric == "deletion"
    with pytest.raises(ValueError):
        baseline_sanity_check([table({"gradcam": 0.9, "uniform": 0.1})])


def test_top_k_summary_averages_over_architectures():
    tables = [
        table({"a": 0.9, "b": 0.1, "c": 0.5}, label="shapes-conv2", dataset="shapes"),
        table({"a": 0.1, "b": 0.3, "c": 0.6}, label="shapes-conv3", dataset="shapes"),
        table({"a": 0.2, "b": 0.8, "c": 0.1}, label="mnist-conv2", dataset="mnist"),
    ]
    summary = top_k_summary(tables, k=2)
    assert list(summary) == ["mnist", "shapes"]
    assert [row.method for row in summary["shapes"]] == ["c", "a"]
    assert summary["shapes"][0].mean == pytest.approx(0.55)
    assert [row.method for row in summary["mnist"]] == ["b", "a"]
    with pytest.raises(ValueError):
        top_k_summary(tables, k=4)


def test_independent_uniform_maps_are_uncorrelated():
    maps = {
        "uniform_a": [uniform_baseline(64, 64, seed) for seed in range(100)],
        "uniform_b": [uniform_baseline(64, 64, 1000 + seed) for seed in range(100)],
    }
    assert all(abs(pearson(a, b)) < 0.1 for a, b in zip(maps["uniform_a"], maps["uniform_b"]))
    matrix = similarity_matrix(maps)
    assert abs(matrix.matrix[0][1]) < 0.1
