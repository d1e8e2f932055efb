"""Empirical-distribution machinery: ECDF, Kolmogorov-Smirnov, total
variation on discrete supports, batch-means errors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample values with their count."""

    sorted_values: np.ndarray
    count: int

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalDistribution":
        arr = np.sort(np.asarray(samples, dtype=np.float64))
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValueError("need a nonempty 1-d sample")
        return cls(sorted_values=arr, count=int(arr.shape[0]))

    def ecdf(self, x) -> np.ndarray | float:
        """Right-continuous empirical cdf."""
        pos = np.searchsorted(self.sorted_values, np.asarray(x, dtype=np.float64), side="right")
        out = pos / self.count
        return float(out) if out.ndim == 0 else out


def ks_statistic(emp: EmpiricalDistribution, cdf: Callable) -> float:
    """sup-distance between the ECDF and a reference cdf.

    Evaluated at the sample points, where the sup over the line is attained:
    D = max_i max(|i/N - F(x_i)|, |(i-1)/N - F(x_i)|).
    """
    x = emp.sorted_values
    n = emp.count
    try:
        f = np.asarray(cdf(x), dtype=np.float64)
        if f.shape != x.shape:
            raise TypeError
    except TypeError:
        f = np.asarray([cdf(float(v)) for v in x])
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(np.maximum(np.abs(hi - f), np.abs(lo - f)).max())


def ks_pvalue(statistic: float, count: int) -> float:
    """Asymptotic Kolmogorov p-value Q(sqrt(N) * D).

    Q(lam) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lam^2), truncated when the
    next term drops below 1e-12. Valid for the N >= 1e3 regime used here.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0.0 <= statistic <= 1.0:
        raise ValueError("KS statistic must lie in [0, 1]")
    lam = math.sqrt(count) * statistic
    if lam == 0.0:
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 100_000):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        sign = -sign
        if term < 1e-12:
            break
    return min(1.0, max(0.0, 2.0 * total))


def tv_distance(
    p_values,
    p_probs,
    q_values,
    q_probs,
    match_tol: float = 1e-9,
) -> float:
    """Total variation (1/2) sum |p - q| over the union of two discrete supports.

    Support points closer than match_tol are identified. Both inputs must be
    normalized within 1e-9.
    """
    pv = np.asarray(p_values, dtype=np.float64)
    pp = np.asarray(p_probs, dtype=np.float64)
    qv = np.asarray(q_values, dtype=np.float64)
    qp = np.asarray(q_probs, dtype=np.float64)
    for probs in (pp, qp):
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("distributions must be normalized within 1e-9")
        if (probs < -1e-15).any():
            raise ValueError("probabilities must be nonnegative")
    order_p = np.argsort(pv)
    order_q = np.argsort(qv)
    pv, pp = pv[order_p], pp[order_p]
    qv, qp = qv[order_q], qp[order_q]
    i = j = 0
    total = 0.0
    while i < pv.shape[0] or j < qv.shape[0]:
        if j >= qv.shape[0] or (i < pv.shape[0] and pv[i] < qv[j] - match_tol):
            total += abs(pp[i])
            i += 1
        elif i >= pv.shape[0] or qv[j] < pv[i] - match_tol:
            total += abs(qp[j])
            j += 1
        else:
            total += abs(pp[i] - qp[j])
            i += 1
            j += 1
    return 0.5 * total


def batch_means(samples, batches: int = 50) -> tuple[float, float]:
    """Mean of batch means and its standard error.

    The sample is split into `batches` equal batches (trailing remainder
    dropped); the error is sqrt(var(batch means) / batches), which absorbs
    autocorrelation at lags shorter than a batch.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.shape[0] < 2 * batches:
        raise ValueError("too few samples for the requested batch count")
    length = x.shape[0] // batches
    used = x[: length * batches].reshape(batches, length)
    bm = used.mean(axis=1)
    return float(bm.mean()), float(math.sqrt(bm.var(ddof=1) / batches))
