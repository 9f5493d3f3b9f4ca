from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from analysis.statistics import kendall_tau, pearson
from errors import UndefinedStatisticError
from metrics.curves import Direction

UNIFORM = "uniform"
CANNY = "canny"


class RankingRow(BaseModel):
    method: str
    mean: float
    std: float
    count: int
    rank: int


class RankingTable(BaseModel):
    """Mean +- std per method for one metric on one dataset-architecture combination."""

    metric: str
    direction: Direction
    label: str = Field("", description="Dataset-architecture combination id.")
    dataset: str = ""
    architecture: str = ""
    rows: List[RankingRow]

    @property
    def order(self) -> List[str]:
        return [row.method for row in sorted(self.rows, key=lambda r: r.rank)]

    @property
    def ranks(self) -> Dict[str, int]:
        return {row.method: row.rank for row in self.rows}

    @property
    def means(self) -> Dict[str, float]:
        return {row.method: row.mean for row in self.rows}


class SquareMatrix(BaseModel):
    labels: List[str]
    matrix: List[List[float]]
    mean: float = Field(..., description="Mean of the off-diagonal (upper triangle) entries.")
    std: float
    excluded: Dict[str, int] = Field(default_factory=dict, description="Per pair: images dropped as undefined.")


class SanityCounts(BaseModel):
    metric: str
    uniform_last: int
    canny_second_to_last: int
    tables: int


def _sort_key(direction: Direction, mean: float, method: str):
    return (-mean if direction is Direction.HIGHER_BETTER else mean, method)


def rank_methods(means: Mapping[str, float], direction: Direction) -> List[str]:
    """Best first; equal means fall back to method-name order."""
    return sorted(means, key=lambda m: _sort_key(Direction(direction), means[m], m))


def build_ranking(scores: Mapping[str, Sequence[float]], metric: str, direction: Direction, label: str = "", dataset: str = "",
                  architecture: str = "") -> RankingTable:
    if not scores:
        raise ValueError("cannot rank an empty method set")
    stats = {}
    for method, values in scores.items():
        values = np.asarray(list(values), dtype=np.float64)
        if values.size == 0:
            raise ValueError(f"method '{method}' has no scores for metric '{metric}'")
        stats[method] = (float(values.mean()), float(values.std()), int(values.size))
    order = rank_methods({m: s[0] for m, s in stats.items()}, direction)
    rows = [RankingRow(method=m, mean=stats[m][0], std=stats[m][1], count=stats[m][2], rank=i + 1) for i, m in enumerate(order)]
    return RankingTable(metric=metric, direction=Direction(direction), label=label, dataset=dataset, architecture=architecture, rows=rows)


def _off_diagonal(matrix: np.ndarray):
    upper = matrix[np.triu_indices(len(matrix), k=1)]
    if upper.size == 0:
        return float("nan"), float("nan")
    return float(upper.mean()), float(upper.std())


def similarity_matrix(maps: Mapping[str, Sequence]) -> SquareMatrix:
    """Mean per-image Pearson correlation between the maps of every method pair."""
    labels = sorted(maps)
    counts = {len(maps[m]) for m in labels}
    if len(counts) > 1:
        raise ValueError("all methods need maps for the same image set")
    size = len(labels)
    matrix = np.eye(size)
    excluded: Dict[str, int] = {}
    for i in range(size):
        for j in range(i + 1, size):
            values, skipped = [], 0
            for a, b in zip(maps[labels[i]], maps[labels[j]]):
                try:
                    values.append(pearson(a, b))
                except UndefinedStatisticError:
                    skipped += 1
            matrix[i, j] = matrix[j, i] = float(np.mean(values)) if values else float("nan")
            if skipped:
                excluded[f"{labels[i]}|{labels[j]}"] = skipped
    mean, std = _off_diagonal(matrix)
    return SquareMatrix(labels=labels, matrix=matrix.tolist(), mean=mean, std=std, excluded=excluded)


def consistency_matrix(tables: Sequence[RankingTable]) -> SquareMatrix:
    """Pairwise Kendall tau-b between the method rankings of the given tables."""
    if len(tables) < 2:
        raise UndefinedStatisticError("consistency needs at least two ranking tables")
    methods = set(tables[0].ranks)
    for table in tables[1:]:
        if set(table.ranks) != methods:
            raise ValueError(f"table '{table.label}' ranks a different method set")
    labels = [table.label for table in tables]
    size = len(tables)
    matrix = np.eye(size)
    for i in range(size):
        for j in range(i + 1, size):
            matrix[i, j] = matrix[j, i] = kendall_tau(tables[i].ranks, tables[j].ranks)
    mean, std = _off_diagonal(matrix)
    logger.debug(f"Consistency of '{tables[0].metric}' over {size} tables: {mean:.3f} +- {std:.3f}")
    return SquareMatrix(labels=labels, matrix=matrix.tolist(), mean=mean, std=std)


def baseline_sanity_check(tables: Sequence[RankingTable], metric: Optional[str] = None) -> SanityCounts:
    """How often uniform ranks last and canny second-to-last."""
    uniform_last = canny_second = 0
    for table in tables:
        order = table.order
        if UNIFORM not in order or CANNY not in order:
            raise ValueError(f"table '{table.label}' is missing the uniform/canny baselines")
        uniform_last += int(order[-1] == UNIFORM)
        canny_second += int(len(order) >= 2 and order[-2] == CANNY)
    name = metric or (tables[0].metric if tables else "")
    return SanityCounts(metric=name, uniform_last=uniform_last, canny_second_to_last=canny_second, tables=len(tables))


def top_k_summary(tables: Sequence[RankingTable], k: int) -> Dict[str, List[RankingRow]]:
    """Per dataset: average each method's mean score over architectures, then keep the best k."""
    by_dataset: Dict[str, List[RankingTable]] = {}
    for table in tables:
        by_dataset.setdefault(table.dataset, []).append(table)
    summary: Dict[str, List[RankingRow]] = {}
    for dataset in sorted(by_dataset):
        group = by_dataset[dataset]
        methods = sorted(group[0].means)
        if k < 1 or k > len(methods):
            raise ValueError(f"k must be in [1, {len(methods)}], got {k}")
        scores = {m: [t.means[m] for t in group] for m in methods}
        ranking = build_ranking(scores, group[0].metric, group[0].direction, label=dataset, dataset=dataset)
        summary[dataset] = [row for row in ranking.rows if row.rank <= k]
    return summary
