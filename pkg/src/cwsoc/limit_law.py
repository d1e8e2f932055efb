"""The quartic limit law: density C * exp(-a s^4) on the real line.

Two parameterizations arise from the fluctuation theorems: the
self-normalized statistic converges with a = mu4 / (12 sigma^4), the scaled
sum with a = mu4 / (12 sigma^8). Closed forms used throughout (derived once
from the substitution u = a s^4, certified by quadrature in the tests):

    integral of exp(-a s^4) ds over R = Gamma(1/4) / (2 a^{1/4})
    normalization C = 2 a^{1/4} / Gamma(1/4)
    cdf(s) = 1/2 + sign(s)/2 * P(1/4, a s^4)   (P = reg. lower inc. gamma)
    E|s|^k = a^{-k/4} Gamma((k+1)/4) / Gamma(1/4)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import BaseMeasure
from .numerics import gamma_quarter, reg_lower_gamma

_GAMMA_QUARTER = gamma_quarter()


@dataclass(frozen=True)
class QuarticLaw:
    """Immutable law with rate a, normalization C and provenance tag."""

    a: float
    normalization: float
    source_theorem: str

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise ValueError("quartic rate a must be positive")

    def pdf(self, s) -> np.ndarray | float:
        x = np.asarray(s, dtype=np.float64)
        # squared square instead of x**4: numpy's vectorized pow is not
        # bitwise even in the base, squaring is
        out = self.normalization * np.exp(-self.a * np.square(np.square(x)))
        return float(out) if out.ndim == 0 else out

    def cdf(self, s) -> np.ndarray | float:
        x = np.asarray(s, dtype=np.float64)
        if x.ndim == 0:
            return self._cdf_scalar(float(x))
        return np.asarray([self._cdf_scalar(float(v)) for v in x])

    def _cdf_scalar(self, s: float) -> float:
        if s == 0.0:
            return 0.5
        p = reg_lower_gamma(0.25, self.a * s**4)
        return 0.5 + math.copysign(0.5 * p, s)

    def quantile(self, p: float) -> float:
        """Inverse cdf by bisection; |cdf(quantile(p)) - p| <= 1e-10."""
        if not 0.0 < p < 1.0:
            raise ValueError("quantile requires 0 < p < 1")
        if p == 0.5:
            return 0.0
        # P(1/4, x) > 1 - 1e-13 for x >= 40, so this bracket spans the mass
        hi = (40.0 / self.a) ** 0.25
        lo = -hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._cdf_scalar(mid) < p:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13 * max(1.0, abs(hi)):
                break
        return 0.5 * (lo + hi)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw via the gamma transform: s = +/- (G/a)^{1/4}, G ~ Gamma(1/4, 1).

        If G has density g^{-3/4} e^{-g} / Gamma(1/4) then |s| = (G/a)^{1/4}
        has density 4 a^{1/4} s^3 * (a s^4)^{-3/4} e^{-a s^4} / Gamma(1/4)
        = 2C e^{-a s^4} on s > 0; the independent sign symmetrizes. The
        gamma draws are taken first, then the signs.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        gammas = rng.gamma(0.25, 1.0, size=count)
        signs = rng.integers(0, 2, size=count).astype(np.float64) * 2.0 - 1.0
        return signs * (gammas / self.a) ** 0.25

    def abs_moment(self, k: float) -> float:
        """E|s|^k = a^{-k/4} Gamma((k+1)/4) / Gamma(1/4)."""
        if k < 0:
            raise ValueError("moment order must be >= 0")
        return self.a ** (-k / 4.0) * math.gamma((k + 1.0) / 4.0) / _GAMMA_QUARTER

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "normalization": self.normalization,
            "source_theorem": self.source_theorem,
        }


def _make_law(a: float, source: str) -> QuarticLaw:
    normalization = 2.0 * a**0.25 / _GAMMA_QUARTER
    return QuarticLaw(a=a, normalization=normalization, source_theorem=source)


def make_theorem1_law(measure: BaseMeasure) -> QuarticLaw:
    """Limit law of S/(n^{1/4} sqrt(T)): rate a = mu4 / (12 sigma^4)."""
    sigma2 = measure.variance()
    a = measure.fourth_moment() / (12.0 * sigma2 * sigma2)
    return _make_law(a, "theorem1")


def make_theorem2_law(measure: BaseMeasure) -> QuarticLaw:
    """Limit law of S/n^{3/4}: rate a = mu4 / (12 sigma^8).

    Requires the sub-Gaussian integrability flag (exp(v0 x^2) integrable for
    some v0 > 0); measures without it are refused because the scaled-sum
    limit is not established for them.
    """
    if not measure.satisfies_star():
        raise ValueError(
            "scaled-sum law requires exp(v0 x^2) integrability; "
            f"measure {measure.name!r} does not satisfy it"
        )
    sigma2 = measure.variance()
    a = measure.fourth_moment() / (12.0 * sigma2**4)
    return _make_law(a, "theorem2")
