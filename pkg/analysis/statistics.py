from typing import Hashable, Mapping, Sequence, Tuple, Union

import numpy as np

from errors import UndefinedStatisticError

Ranking = Union[Mapping[Hashable, float], Sequence[float], np.ndarray]


def _curve_values(curve) -> np.ndarray:
    return np.asarray(getattr(curve, "y", curve), dtype=np.float64).reshape(-1)


def pearson(a, b) -> float:
    """Sample Pearson correlation of two equally shaped arrays (or attribution maps)."""
    x = np.asarray(getattr(a, "values", a), dtype=np.float64).reshape(-1)
    y = np.asarray(getattr(b, "values", b), dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"pearson needs equal shapes, got {x.shape} and {y.shape}")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(np.sum(dx * dx)), float(np.sum(dy * dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedStatisticError("pearson correlation is undefined for a constant input")
    r = float(np.sum(dx * dy)) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def _aligned(rank_a: Ranking, rank_b: Ranking) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(rank_a, Mapping) or isinstance(rank_b, Mapping):
        if not (isinstance(rank_a, Mapping) and isinstance(rank_b, Mapping)):
            raise ValueError("kendall_tau needs two mappings or two sequences")
        if set(rank_a) != set(rank_b):
            raise ValueError(f"rankings cover different items: {sorted(map(str, set(rank_a) ^ set(rank_b)))}")
        keys = sorted(rank_a, key=str)
        return np.array([rank_a[k] for k in keys], dtype=np.float64), np.array([rank_b[k] for k in keys], dtype=np.float64)
    a, b = np.asarray(rank_a, dtype=np.float64), np.asarray(rank_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"rankings differ in length: {a.shape} vs {b.shape}")
    return a, b


def kendall_tau(rank_a: Ranking, rank_b: Ranking) -> float:
    """Tie-adjusted Kendall tau-b over all item pairs."""
    a, b = _aligned(rank_a, rank_b)
    n = len(a)
    if n < 2:
        raise UndefinedStatisticError("kendall tau needs at least two items")
    upper = np.triu_indices(n, k=1)
    sa = np.sign(a[:, None] - a[None, :])[upper]
    sb = np.sign(b[:, None] - b[None, :])[upper]
    pairs = n * (n - 1) // 2
    untied_a = pairs - int(np.sum(sa == 0))
    untied_b = pairs - int(np.sum(sb == 0))
    if untied_a == 0 or untied_b == 0:
        raise UndefinedStatisticError("kendall tau is undefined when one ranking is fully tied")
    return float(np.sum(sa * sb) / np.sqrt(untied_a * untied_b))


def monotonicity(curve, direction: str = "increase") -> float:
    """Fraction of steps moving in `direction` ('increase' counts >=, 'decrease' counts <=)."""
    y = _curve_values(curve)
    if len(y) < 2:
        raise ValueError("monotonicity needs at least two curve points")
    steps = np.diff(y)
    if str(getattr(direction, "value", direction)) == "decrease":
        hits = steps <= 0
    else:
        hits = steps >= 0
    return float(np.sum(hits) / len(steps))


def smoothness(curve) -> float:
    """(1 / (n - 1)) * sqrt(sum of squared deviations of the forward differences); lower is smoother."""
    y = _curve_values(curve)
    if len(y) < 3:
        raise ValueError("smoothness needs at least three curve points")
    steps = np.diff(y)
    return float(np.sqrt(np.sum((steps - steps.mean()) ** 2)) / (len(y) - 1))
