"""The Gibbs weight exp(S^2 / (2T)) on {T > 0} and its statistics.

A Configuration holds one state (x_1, ..., x_n) with cached S = sum(x_i)
and T = sum(x_i^2) so single-site MCMC updates cost O(1). The cache is
refreshed by full recomputation every RECOMPUTE_EVERY updates to bound
floating-point drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

RECOMPUTE_EVERY = 10_000


@dataclass
class Configuration:
    """One state of the n-site system with cached sufficient statistics."""

    values: np.ndarray
    cached_s: float
    cached_t: float
    update_count: int = 0
    _n: int = field(init=False)

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape[0] < 1:
            raise ValueError("values must be a nonempty 1-d array")
        self._n = int(self.values.shape[0])

    @property
    def n(self) -> int:
        return self._n

    @classmethod
    def from_values(cls, values) -> "Configuration":
        arr = np.asarray(values, dtype=np.float64)
        return cls(values=arr.copy(), cached_s=float(arr.sum()), cached_t=float(np.dot(arr, arr)))

    def recompute(self) -> None:
        """Refresh the S and T caches from the raw values."""
        self.cached_s = float(self.values.sum())
        self.cached_t = float(np.dot(self.values, self.values))
        self.update_count = 0

    def log_weight(self) -> float:
        """log of the unnormalized Gibbs weight: S^2 / (2T), -inf when T = 0.

        The indicator 1{T > 0} in the target density maps to weight zero,
        returned in-band as -inf so samplers can reject uniformly.
        """
        if self.cached_t > 0.0:
            return 0.5 * self.cached_s * self.cached_s / self.cached_t
        return -math.inf

    def self_normalized_stat(self) -> float:
        """S / (n^{1/4} sqrt(T)); undefined (raises) when T = 0.

        Scale-invariant: multiplying every site by a nonzero constant leaves
        the value unchanged. The target gives the event {T = 0} probability
        zero, so a domain error is the honest behavior there.
        """
        if not self.cached_t > 0.0:
            raise ValueError("self_normalized_stat undefined at T = 0")
        return self.cached_s / (self._n**0.25 * math.sqrt(self.cached_t))

    def scaled_sum_stat(self) -> float:
        """S / n^{3/4}; equals sqrt(T/n) * self_normalized_stat when T > 0."""
        return self.cached_s / self._n**0.75

    def update_site(self, i: int, new_value: float) -> tuple[float, float, float]:
        """Set site i to new_value, returning (new S, new T, delta log weight).

        The delta uses the -inf convention when either side has T = 0.
        The update is applied; callers implementing rejection must restore
        the old value themselves (the sampler instead precomputes deltas).
        """
        if not 0 <= i < self._n:
            raise IndexError(f"site index {i} out of range for n={self._n}")
        old = float(self.values[i])
        old_lw = self.log_weight()
        new_s = self.cached_s - old + new_value
        new_t = self.cached_t - old * old + new_value * new_value
        if new_t < 0.0:
            new_t = 0.0
        self.values[i] = new_value
        self.cached_s = new_s
        self.cached_t = new_t
        self.update_count += 1
        if self.update_count >= RECOMPUTE_EVERY:
            self.recompute()
        new_lw = self.log_weight()
        if math.isinf(new_lw) and math.isinf(old_lw):
            delta = 0.0
        else:
            delta = new_lw - old_lw
        return self.cached_s, self.cached_t, delta

    def validate(self, rel_tol: float = 1e-9) -> None:
        """Check the cache against full recomputation and Cauchy-Schwarz."""
        s = float(self.values.sum())
        t = float(np.dot(self.values, self.values))
        scale_s = max(abs(s), abs(self.cached_s), 1.0)
        scale_t = max(t, self.cached_t, 1.0)
        if abs(s - self.cached_s) > rel_tol * scale_s:
            raise AssertionError(f"cached_s drifted: {self.cached_s} vs {s}")
        if abs(t - self.cached_t) > rel_tol * scale_t:
            raise AssertionError(f"cached_t drifted: {self.cached_t} vs {t}")
        if self.cached_t < 0.0:
            raise AssertionError("cached_t negative")
        # S^2 <= n T up to roundoff.
        if self.cached_s**2 > self._n * self.cached_t * (1.0 + 1e-12) + 1e-12:
            raise AssertionError("Cauchy-Schwarz violated by cached statistics")

    def to_list(self) -> list[float]:
        """Flat-real serialization: [n, s, t, update_count, x_1, ..., x_n]."""
        return [
            float(self._n),
            self.cached_s,
            self.cached_t,
            float(self.update_count),
            *(float(v) for v in self.values),
        ]

    @classmethod
    def from_list(cls, flat: list[float]) -> "Configuration":
        n = int(flat[0])
        if len(flat) != 4 + n:
            raise ValueError("flat configuration has wrong length")
        cfg = cls(
            values=np.asarray(flat[4:], dtype=np.float64),
            cached_s=float(flat[1]),
            cached_t=float(flat[2]),
            update_count=int(flat[3]),
        )
        return cfg
