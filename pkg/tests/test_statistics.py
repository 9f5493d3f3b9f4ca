import itertools
import math

import numpy as np
import pytest

from analysis.statistics import kendall_tau, monotonicity, pearson, smoothness
from errors import UndefinedStatisticError
from metrics.curves import ProbabilityCurve


def brute_force_tau_b(a, b) -> float:
    concordant = discordant = ties_a = ties_b = 0
    for i, j in itertools.combinations(range(len(a)), 2):
        da, db = np.sign(a[i] - a[j]), np.sign(b[i] - b[j])
        if da == 0 and db == 0:
            continue
        if da == 0:
            ties_a += 1
        elif db == 0:
            ties_b += 1
        elif da == db:
            concordant += 1
        else:
            discordant += 1
    return (concordant - discordant) / np.sqrt((concordant + discordant + ties_a) * (concordant + discordant + ties_b))


def brute_force_pearson(a, b) -> float:
    n = len(a)
    mean_a, mean_b = math.fsum(a) / n, math.fsum(b) / n
    cov = math.fsum((x - mean_a) * (y - mean_b) for x, y in zip(a, b))
    var_a = math.fsum((x - mean_a) ** 2 for x in a)
    var_b = math.fsum((y - mean_b) ** 2 for y in b)
    return cov / math.sqrt(var_a * var_b)


def brute_force_monotonicity(y, direction) -> float:
    hits = 0
    for i in range(1, len(y)):
        if (y[i] >= y[i - 1]) if direction == "increase" else (y[i] <= y[i - 1]):
            hits += 1
    return hits / (len(y) - 1)


def brute_force_smoothness(y) -> float:
    steps = [y[i] - y[i - 1] for i in range(1, len(y))]
    mean = math.fsum(steps) / len(steps)
    return math.sqrt(math.fsum((s - mean) ** 2 for s in steps)) / (len(y) - 1)


def random_values(rng, size):
    # Every third instance is coarse-grained so ties and flat steps show up.
    if rng.integers(3) == 0:
        return [float(v) for v in rng.integers(0, 4, size=size)]
    return [float(v) for v in rng.random(size)]


def test_kendall_examples():
    assert kendall_tau([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert kendall_tau([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert kendall_tau([1, 2, 3], [1, 0, 1]) == pytest.approx(0.0)
    assert kendall_tau([1, 2, 3], [2, 1, 3]) == pytest.approx(1.0 / 3.0)


def test_kendall_on_mappings_aligns_keys():
    a = {"gradcam": 0.9, "gradients": 0.1, "uniform": 0.5}
    b = {"uniform": 0.5, "gradcam": 0.8, "gradients": 0.2}
    assert kendall_tau(a, b) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        kendall_tau(a, {"gradcam": 1.0, "canny": 0.0, "uniform": 0.5})
    with pytest.raises(ValueError):
        kendall_tau(a, [1.0, 2.0, 3.0])


def test_kendall_matches_brute_force_with_ties():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(1000):
        size = int(rng.integers(2, 12))
        a, b = random_values(rng, size), random_values(rng, size)
        if len(set(a)) == 1 or len(set(b)) == 1:
            continue
        assert kendall_tau(a, b) == pytest.approx(brute_force_tau_b(a, b), abs=1e-12)
        checked += 1
    assert checked > 900


def test_kendall_matches_scipy(rng):
    stats = pytest.importorskip("scipy.stats")
    a, b = rng.integers(0, 5, size=20), rng.integers(0, 5, size=20)
    assert kendall_tau(a, b) == pytest.approx(stats.kendalltau(a, b)[0], abs=1e-12)


def test_kendall_undefined():
    with pytest.raises(UndefinedStatisticError):
        kendall_tau([1.0], [2.0])
    with pytest.raises(UndefinedStatisticError):
        kendall_tau([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        kendall_tau([1.0, 2.0], [1.0, 2.0, 3.0])


def test_pearson(rng):
    x = rng.random(30)
    assert pearson(x, 3 * x + 1) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    y = rng.random(30)
    assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1])
    with pytest.raises(UndefinedStatisticError):
        pearson(x, np.ones(30))


def test_monotonicity():
    assert monotonicity([0.0, 1.0, 0.0, 1.0, 0.0]) == pytest.approx(0.5)
    assert monotonicity([0.2, 0.2, 0.3]) == 1.0
    assert monotonicity([0.3, 0.2, 0.2], "decrease") == 1.0
    assert monotonicity([0.1, 0.2, 0.3], "decrease") == 0.0
    curve = ProbabilityCurve(x=np.linspace(0, 1, 4), y=np.array([0.1, 0.4, 0.3, 0.9]))
    assert monotonicity(curve) == pytest.approx(2.0 / 3.0)
    with pytest.raises(ValueError):
        monotonicity([1.0])


def test_smoothness():
    assert smoothness([0.0, 1.0, 0.0]) == pytest.approx(np.sqrt(2.0) / 2.0)
    assert smoothness(np.linspace(0.0, 1.0, 11)) == pytest.approx(0.0, abs=1e-12)
    assert smoothness([0.0, 0.5, 1.0, 0.5]) > smoothness([0.0, 0.3, 0.6, 0.9])
    with pytest.raises(ValueError):
        smoothness([0.0, 1.0])


def test_pearson_matches_brute_force():
    rng = np.random.default_rng(1)
    checked = 0
    for _ in range(1000):
        size = int(rng.integers(2, 40))
        a, b = random_values(rng, size), random_values(rng, size)
        if len(set(a)) == 1 or len(set(b)) == 1:
            continue
        assert pearson(a, b) == pytest.approx(brute_force_pearson(a, b), abs=1e-12)
        checked += 1
    assert checked > 900


def test_monotonicity_and_smoothness_match_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        y = random_values(rng, int(rng.integers(3, 60)))
        for direction in ("increase", "decrease"):
            assert monotonicity(y, direction) == pytest.approx(brute_force_monotonicity(y, direction), abs=1e-12)
        assert smoothness(y) == pytest.approx(brute_force_smoothness(y), abs=1e-12)
