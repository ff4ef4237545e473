"""Pearson and Spearman correlation with two-sided p-values."""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np
from scipy import stats as sps


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks of x in ascending order; ties receive their mean rank."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson_r(x: np.ndarray, y: np.ndarray) -> float | None:
    """Product-moment correlation; None when either vector is constant."""
    dx = x - x.mean()
    dy = y - y.mean()
    nx = math.sqrt(float(dx @ dx))
    ny = math.sqrt(float(dy @ dy))
    if nx == 0.0 or ny == 0.0:
        return None
    # exact +-1 for (anti)identical deviations, so perfect agreement is not
    # blurred by square-root rounding
    if np.array_equal(dx, dy):
        return 1.0
    if np.array_equal(dx, -dy):
        return -1.0
    r = float(dx @ dy) / (nx * ny)
    return max(-1.0, min(1.0, r))


def _t_pvalue(r: float, n: int) -> float:
    if 1.0 - r * r <= 1e-15:
        return 0.0
    t = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    return float(2.0 * sps.t.sf(t, n - 2))


def correlate(
    x, y, method: str = "pearson", p_mode: str = "t"
) -> tuple[float, float]:
    """Correlation coefficient and two-sided p-value.

    A constant input yields (0.0, 1.0). The p-value comes from the Student-t
    statistic r*sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom; p_mode
    "permutation" (Spearman only, n <= 8) enumerates all rank permutations
    instead.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    if method == "spearman":
        x, y = average_ranks(x), average_ranks(y)
    elif method != "pearson":
        raise ValueError(f"unknown correlation method {method!r}")
    r = _pearson_r(x, y)
    if r is None:
        return 0.0, 1.0
    if p_mode == "t":
        return r, _t_pvalue(r, n)
    if p_mode != "permutation":
        raise ValueError(f"unknown p_mode {p_mode!r}")
    if method != "spearman":
        raise ValueError("permutation p-values are only supported for Spearman")
    if n > 8:
        raise ValueError("permutation p-values are limited to n <= 8")
    hits = 0
    total = 0
    for perm in permutations(y):
        rp = _pearson_r(x, np.array(perm))
        total += 1
        if rp is not None and abs(rp) >= abs(r) - 1e-12:
            hits += 1
    return r, hits / total


def corr_thresholded(
    x, y, method: str = "pearson", p_max: float = 0.2, p_mode: str = "t"
) -> float:
    """Correlation set to zero when the p-value exceeds p_max (kept at p == p_max)."""
    r, p = correlate(x, y, method=method, p_mode=p_mode)
    return r if p <= p_max else 0.0


def ranking_from_scores(scores) -> np.ndarray:
    """Rank vector of encoder scores: rank 1 is the highest score, ties get
    average ranks."""
    return average_ranks(-np.asarray(scores, dtype=np.float64))


def spearman_rankings(ranks_a: np.ndarray, ranks_b: np.ndarray) -> float:
    """Spearman correlation between two (possibly tied) rank vectors."""
    r = _pearson_r(np.asarray(ranks_a, dtype=np.float64), np.asarray(ranks_b, dtype=np.float64))
    return 0.0 if r is None else r
