# statistics must load first: metrics.scalar imports it while the metrics package initializes.
# Sweeps pull in metrics and are imported as analysis.sweeps.
from .statistics import kendall_tau, monotonicity, pearson, smoothness
from .rankings import (
    RankingRow,
    RankingTable,
    SanityCounts,
    SquareMatrix,
    baseline_sanity_check,
    build_ranking,
    consistency_matrix,
    rank_methods,
    similarity_matrix,
    top_k_summary,
)
from .shift import ShiftReport, distribution_shift, intensity_histogram

__all__ = [
    "kendall_tau",
    "monotonicity",
    "pearson",
    "smoothness",
    "RankingRow",
    "RankingTable",
    "SanityCounts",
    "SquareMatrix",
    "baseline_sanity_check",
    "build_ranking",
    "consistency_matrix",
    "rank_methods",
    "similarity_matrix",
    "top_k_summary",
    "ShiftReport",
    "distribution_shift",
    "intensity_histogram",
]
