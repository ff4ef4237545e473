from .correlation import (
    average_ranks,
    corr_thresholded,
    correlate,
    ranking_from_scores,
    spearman_rankings,
)
from .stability import (
    RankingSupport,
    ScoreGrid,
    StabilityReport,
    build_stability_report,
    mu_stability,
    pair_minavg,
    profile_correlation,
    ranking_support,
    sim_cross,
    sim_size,
    size_stability,
)

__all__ = [
    "average_ranks",
    "corr_thresholded",
    "correlate",
    "ranking_from_scores",
    "spearman_rankings",
    "RankingSupport",
    "ScoreGrid",
    "StabilityReport",
    "build_stability_report",
    "mu_stability",
    "pair_minavg",
    "profile_correlation",
    "ranking_support",
    "sim_cross",
    "sim_size",
    "size_stability",
]
