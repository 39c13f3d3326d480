"""Comparison metrics between Monte Carlo samples and computed distributions."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..errors import DomainError

__all__ = ["ks_distance", "kernel_density", "density_distances", "mean_and_se"]


def ks_distance(sample, cdf):
    """Kolmogorov-Smirnov distance ``sup_x |F_n(x) - F(x)|`` for a continuous ``F``.

    The supremum is taken over both one-sided limits at every distinct sample
    point and over the midpoints between consecutive distinct points, where
    ``F_n`` is flat and a non-continuous ``cdf`` may peak.

    Parameters
    ----------
    sample : array_like
        Nonempty sample.
    cdf : callable
        Vectorized reference CDF.
    """
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("ks_distance needs a nonempty sample")
    u, counts = np.unique(x, return_counts=True)
    upper = np.cumsum(counts) / n  # F_n at each distinct point
    lower = upper - counts / n  # left limit
    f = np.asarray(cdf(u), dtype=float)
    d = max(np.max(upper - f), np.max(f - lower))
    if u.size > 1:
        mid = 0.5 * (u[1:] + u[:-1])
        d = max(d, np.max(np.abs(upper[:-1] - np.asarray(cdf(mid), dtype=float))))
    return float(min(max(d, 0.0), 1.0))


def kernel_density(sample, x):
    """Gaussian kernel density on ``x`` with bandwidth ``n**(-1/5) * std``."""
    sample = np.asarray(sample, dtype=float)
    n = sample.size
    kde = stats.gaussian_kde(sample, bw_method=n ** (-0.2))
    return kde(np.asarray(x, dtype=float)), n ** (-0.2) * float(np.std(sample, ddof=1))


def density_distances(p, q, dx):
    """L1 and L2 grid-norm distances between two densities sampled with spacing ``dx``."""
    d = np.asarray(p) - np.asarray(q)
    return float(np.sum(np.abs(d)) * dx), float(math.sqrt(np.sum(d * d) * dx))


def mean_and_se(values):
    """Compensated mean and standard error of the mean."""
    v = np.asarray(values, dtype=float).ravel()
    m = math.fsum(v) / v.size
    if v.size < 2:
        return m, float("nan")
    var = math.fsum((v - m) ** 2) / (v.size - 1)
    return m, math.sqrt(var / v.size)
