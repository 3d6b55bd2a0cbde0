"""Engagement and stance-neutrality metrics: CTR, JSD-O, JSD-G, UMS, UMOE,
plus the Welch t-test used for cross-seed significance stars.

All Jensen-Shannon distances use base-2 logarithms so values lie in [0, 1];
they measure the distance of a stance distribution from uniform.
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from .core import DegenerateDistributionError


def ctr(clicks: int, exposures: int) -> float:
    if exposures <= 0:
        raise DegenerateDistributionError("CTR over an empty window")
    return clicks / exposures


def _validate_distribution(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"not a probability vector: {p}")
    return np.clip(p, 0.0, None)


def jsd_overall(p) -> float:
    """Square root of the Jensen-Shannon divergence between p and uniform."""
    p = _validate_distribution(p)
    q = np.full(len(p), 1.0 / len(p))
    m = 0.5 * (p + q)

    def kl(a, b):
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / b[mask])))

    div = 0.5 * kl(p, m) + 0.5 * kl(q, m)
    return math_sqrt_clamped(div)


def math_sqrt_clamped(value: float) -> float:
    # tiny negatives from float cancellation
    return float(np.sqrt(max(value, 0.0)))


def jsd_group(per_group_distributions) -> float:
    """Mean JSD-from-uniform over the per-group stance distributions."""
    dists = list(per_group_distributions)
    if not dists:
        raise ValueError("no group distributions supplied")
    return float(np.mean([jsd_overall(p) for p in dists]))


def stance_values(num_stances: int) -> np.ndarray:
    """Scalar stance scores, [-1, 0, 1] for the default three stances."""
    return np.linspace(-1.0, 1.0, num_stances)


def _normalized_rows(U: np.ndarray):
    sums = U.sum(axis=1)
    keep = sums > 0
    return U[keep] / sums[keep, None], int((~keep).sum())


def ums(U: np.ndarray) -> float:
    """Population mean stance on the [-1, 1] axis (rows normalized first)."""
    rows, _dropped = _normalized_rows(np.asarray(U, dtype=float))
    if len(rows) == 0:
        raise ValueError("all preference rows are zero")
    scores = rows @ stance_values(rows.shape[1])
    return float(scores.mean())


def umoe(U: np.ndarray, normalize: bool = True) -> float:
    """Mean per-user population variance of the (normalized) preference row."""
    U = np.asarray(U, dtype=float)
    if normalize:
        rows, _dropped = _normalized_rows(U)
    else:
        rows = U[U.sum(axis=1) > 0]
    if len(rows) == 0:
        raise ValueError("all preference rows are zero")
    return float(rows.var(axis=1).mean())


def welch_t(samples_a, samples_b):
    """Two-sided Welch t-test with the paper-style significance stars."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need >= 2 samples on each side")
    if a.std() == 0 and b.std() == 0:
        if a.mean() == b.mean():
            return 0.0, 1.0, "ns"
        return float("inf"), 0.0, "**"
    t, p = stats.ttest_ind(a, b, equal_var=False)
    return float(t), float(p), stars(p)


def stars(p: float) -> str:
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return "ns"
