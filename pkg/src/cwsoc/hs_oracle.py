"""Gaussian-smoothing integral oracle for the self-normalized statistic.

Adding an independent standard normal W to the self-normalized statistic
(scaled by n^{-1/4}) turns expectations under the Gibbs measure into
one-dimensional integrals: the smoothed statistic has unnormalized density

    psi_n(z) = E[exp(sum_i g(z n^{1/4} A_i))],   A_i = U_i / sqrt(sum U_j^2),

where the U_i are i.i.d. from the base measure and g(y) = ln cosh y - y^2/2.
This module evaluates psi_n by Monte Carlo with common random numbers across
the z grid, integrates it for the partition-function ratio, and provides the
pieces of the supporting concentration bound: the function h, the constant c
with sum g <= -c z^4 / (1 + z^2/sqrt(n)), and a finite-size allowance from
the fifth-order Taylor remainder of g.

Everything here is estimated from i.i.d. draws only, with no Markov chain,
which is what makes it an independent oracle for the sampler.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._kernels import g_array, g_scalar, profile_block
from .measures import BaseMeasure
from .numerics import (
    adaptive_simpson,
    composite_simpson,
    gamma_quarter,
    golden_section_max,
    simpson_weights,
)

# sup over y of |g'''''(y)| = |(1 - t^2) t (16 - 24 t^2)|, t = tanh(y),
# attained at t^2 = (120 - sqrt(6720))/240, y ~ 0.4213; value rounded up in
# the last digit so the frozen constant stays an upper bound. Recomputed and
# asserted in the test suite.
G5_SUP = 4.08588550296966

DEFAULT_Z_MAX = 8.0
DEFAULT_Z_STEPS = 161

_lemma_cache: dict[str, float] = {}


def g(y: float) -> float:
    """g(y) = ln cosh y - y^2/2, stable over the whole line.

    Nonpositive, even, g(0) = 0; behaves like -y^4/12 near 0 and like
    -y^2/2 + |y| - ln 2 at infinity. Large arguments avoid cosh overflow
    via ln cosh y = |y| - ln 2 + log1p(exp(-2|y|)).
    """
    return g_scalar(float(y))


def h(y: float) -> float:
    """h(y) = (1 + y^2) g(y) / y^4, extended with h(0) = -1/12.

    Strictly negative, tends to -1/2 at infinity. Below |y| = 1e-3 the
    series h = -1/12 - 11 y^2/180 + 13 y^4/840 + O(y^6) avoids the 0/0 and
    underflow in the direct quotient.
    """
    y = float(y)
    y2 = y * y
    if abs(y) < 1e-3:
        return -1.0 / 12.0 - 11.0 * y2 / 180.0 + 13.0 * y2 * y2 / 840.0
    return (1.0 + y2) * g_scalar(y) / (y2 * y2)


def _h_array(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    y2 = y * y
    out = np.empty_like(y2)
    small = np.abs(y) < 1e-3
    ys = y2[small]
    out[small] = -1.0 / 12.0 - 11.0 * ys / 180.0 + 13.0 * ys * ys / 840.0
    yl = y[~small]
    y2l = y2[~small]
    out[~small] = (1.0 + y2l) * g_array(yl) / (y2l * y2l)
    return out


def lemma1_constant() -> float:
    """The constant c > 0 with sum_i g(z n^{1/4} A_i) <= -c z^4/(1+z^2/sqrt(n)).

    Since sum A_i^2 = 1, the bound reduces to c = -sup_y h(y). The sup is
    located by a dense grid scan on [0, 50] (h is even) refined by
    golden-section search, then certified on a 10x finer grid; beyond 50,
    h is within 1e-3 of -1/2 and cannot compete. The computed value is
    cached. Raises ArithmeticError if certification fails.
    """
    if "c" in _lemma_cache:
        return _lemma_cache["c"]
    ys = np.arange(0.0, 50.0, 1e-3)
    hv = _h_array(ys)
    best = int(np.argmax(hv))
    lo = ys[max(0, best - 1)]
    hi = ys[min(ys.shape[0] - 1, best + 1)]
    _, h_max = golden_section_max(h, lo, hi, tol=1e-14)
    h_max = max(h_max, float(hv[best]))
    c = -h_max
    if not c > 0.0:
        raise ArithmeticError("sup of h is not negative; bound is empty")
    fine = np.arange(0.0, 50.0, 1e-4)
    if (_h_array(fine) > -c + 1e-12).any():
        raise ArithmeticError("certification grid found h above -c")
    _lemma_cache["c"] = c
    return c


def g_sum(z: float, config_values: Sequence[float]) -> float:
    """sum_i g(z n^{1/4} values_i / sqrt(T)) with T = sum values_i^2.

    Raises on T = 0 (the normalized coordinates A_i are undefined there).
    """
    values = np.asarray(config_values, dtype=np.float64)
    t = float(np.dot(values, values))
    if not t > 0.0:
        raise ValueError("g_sum requires sum of squares > 0")
    n = values.shape[0]
    coef = float(z) * n**0.25 / math.sqrt(t)
    return float(g_array(coef * values).sum())


def lemma1_check(z: float, config_values: Sequence[float], c: float) -> bool:
    """Whether the concentration bound holds at (z, configuration)."""
    values = np.asarray(config_values, dtype=np.float64)
    n = values.shape[0]
    bound = -c * z**4 / (1.0 + z * z / math.sqrt(n))
    return g_sum(z, values) <= bound + 1e-9


@dataclass
class HsProfile:
    """Monte Carlo estimate of psi_n on a z grid.

    values[j] estimates psi_n(z_grid[j]) from mc_draws common draws;
    std_errors are per-point Monte Carlo standard errors (zero at n = 1,
    where every draw gives exactly exp(g(z))). integral_estimate carries
    the quadrature of the profile over the grid with the standard error of
    the per-draw integrals; quad_weights are the quadrature weights used.
    """

    z_grid: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    n: int
    mc_draws: int
    measure_name: str
    integral_estimate: float
    integral_std_error: float
    quad_weights: np.ndarray = field(repr=False, default=None)

    def normalized(self) -> tuple[np.ndarray, np.ndarray]:
        """Profile scaled to integrate to 1 over the grid.

        The returned errors combine the pointwise error with the integral
        error conservatively (plain sum, since the two are correlated
        through the common draws).
        """
        if not self.integral_estimate > 0.0:
            raise ValueError("profile integral is not positive")
        inv = 1.0 / self.integral_estimate
        norm = self.values * inv
        errs = self.std_errors * inv + norm * (self.integral_std_error * inv)
        return norm, errs


def default_z_grid(z_max: float = DEFAULT_Z_MAX, steps: int = DEFAULT_Z_STEPS) -> np.ndarray:
    """Symmetric uniform grid on [-z_max, z_max].

    The default half-width 8 makes the truncated tail mass below 1e-10 of
    the integral for every supported measure and every n: for n >= 25 the
    quartic bound exp(-c z^4/(1 + z^2/sqrt(n))) is below 1e-16 at |z| = 8,
    and for smaller n the summands g(y) <= |y| - y^2/2 give even faster
    Gaussian-type decay.
    """
    return np.linspace(-z_max, z_max, steps)


def _quad_weights(z: np.ndarray) -> np.ndarray:
    m = z.shape[0]
    dx = (z[-1] - z[0]) / (m - 1)
    uniform = np.allclose(np.diff(z), dx, rtol=0.0, atol=1e-9 * abs(dx))
    if uniform and m % 2 == 1:
        return simpson_weights(m, float(dx))
    # fallback: trapezoid on arbitrary spacing
    w = np.zeros(m)
    gaps = np.diff(z)
    w[:-1] += 0.5 * gaps
    w[1:] += 0.5 * gaps
    return w


def _unique_abs(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cluster |z| values within 1e-9 so mirrored points share evaluations.

    g is even, so psi_n(z) depends on |z| only, draw by draw; mapping both
    signs to one representative makes the estimated profile exactly
    symmetric under common random numbers.
    """
    za = np.abs(z)
    order = np.argsort(za, kind="stable")
    reps: list[float] = []
    inverse = np.empty(z.shape[0], dtype=np.int64)
    tol = 1e-9 * max(1.0, float(za.max()))
    for idx in order:
        if reps and za[idx] - reps[-1] <= tol:
            inverse[idx] = len(reps) - 1
        else:
            reps.append(float(za[idx]))
            inverse[idx] = len(reps) - 1
    return np.asarray(reps), inverse


def smoothed_density_profile(
    n: int,
    measure: BaseMeasure,
    z_grid: Sequence[float],
    mc_draws: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> HsProfile:
    """Estimate psi_n on the grid by Monte Carlo over base-measure draws.

    The same draws are used for every grid point (common random numbers),
    so the profile is smooth in z and exactly symmetric on symmetric grids.
    Draws with T = 0 are redrawn. Per-draw quadratures of the profile are
    accumulated alongside, giving the integral estimate and its error.

    Work is split into fixed blocks with independently seeded streams;
    block partials are merged in block order, so the result depends only on
    (arguments, rng state), not on the thread count.
    """
    z = np.asarray(z_grid, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] < 3:
        raise ValueError("z_grid needs at least 3 points")
    if (np.diff(z) <= 0.0).any():
        raise ValueError("z_grid must be strictly increasing")
    if mc_draws < 1:
        raise ValueError("mc_draws must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")

    weights = _quad_weights(z)
    reps, inverse = _unique_abs(z)
    zcoefs = reps * n**0.25
    wsum = np.zeros(reps.shape[0])
    np.add.at(wsum, inverse, weights)

    block = max(1, (1 << 22) // n)
    nblocks = -(-mc_draws // block)
    block_sizes = [min(block, mc_draws - i * block) for i in range(nblocks)]
    block_seeds = rng.integers(0, 2**63, size=nblocks)

    def run_block(i: int):
        child = np.random.Generator(np.random.PCG64(int(block_seeds[i])))
        b = block_sizes[i]
        rows = measure.sample(child, b * n).reshape(b, n)
        t = np.einsum("ij,ij->i", rows, rows)
        while True:
            bad = np.flatnonzero(t == 0.0)
            if bad.size == 0:
                break
            rows[bad] = measure.sample(child, bad.size * n).reshape(bad.size, n)
            t[bad] = np.einsum("ij,ij->i", rows[bad], rows[bad])
        s1 = np.zeros(reps.shape[0])
        s2 = np.zeros(reps.shape[0])
        c1 = np.zeros(reps.shape[0])
        c2 = np.zeros(reps.shape[0])
        i1, i2 = profile_block(rows, zcoefs, wsum, s1, s2, c1, c2)
        return s1, s2, float(i1), float(i2)

    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run_block, range(nblocks)))
    else:
        partials = [run_block(i) for i in range(nblocks)]

    sum1 = np.zeros(reps.shape[0])
    sum2 = np.zeros(reps.shape[0])
    int1 = 0.0
    int2 = 0.0
    for s1, s2, i1, i2 in partials:
        sum1 += s1
        sum2 += s2
        int1 += i1
        int2 += i2

    m = float(mc_draws)
    mean_u = sum1 / m
    var_u = np.maximum(sum2 / m - mean_u**2, 0.0)
    # accumulated sums of M identical values carry O(M eps) rounding, which
    # shows up as spurious variance ~ M eps mean^2; clamp below that floor
    # so exact cases (n = 1) report zero error
    floor = 8.0 * m * np.finfo(np.float64).eps * mean_u**2
    var_u[var_u <= floor] = 0.0
    se_u = np.sqrt(var_u / m)
    integral = int1 / m
    integral_var = max(int2 / m - integral**2, 0.0)
    if integral_var <= 8.0 * m * np.finfo(np.float64).eps * integral**2:
        integral_var = 0.0
    return HsProfile(
        z_grid=z,
        values=mean_u[inverse],
        std_errors=se_u[inverse],
        n=n,
        mc_draws=mc_draws,
        measure_name=measure.name,
        integral_estimate=integral,
        integral_std_error=math.sqrt(integral_var / m),
        quad_weights=weights,
    )


def smoothed_expectation(
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    measure: BaseMeasure,
    mc_draws: int,
    quadrature_spec: Sequence[float] | None,
    rng: np.random.Generator,
    threads: int = 1,
    profile: HsProfile | None = None,
    with_error: bool = False,
):
    """Ratio estimator of E[f(smoothed statistic)].

    Numerator and denominator integrate f * psi_n and psi_n over the same
    grid with the same draws, so f = 1 returns exactly 1. quadrature_spec
    is the z grid (default grid when None); pass profile to reuse an
    existing evaluation.

    Returns the estimate, or (estimate, std_error) when with_error is set;
    the error combines pointwise profile errors conservatively.
    """
    if profile is None:
        grid = default_z_grid() if quadrature_spec is None else np.asarray(quadrature_spec)
        profile = smoothed_density_profile(n, measure, grid, mc_draws, rng, threads=threads)
    w = profile.quad_weights
    fz = np.asarray(f(profile.z_grid), dtype=np.float64)
    if fz.shape != profile.z_grid.shape:
        raise ValueError("f must map the grid to same-shape values")
    den = float(np.dot(w, profile.values))
    if not den > 0.0:
        raise ValueError("profile integral vanished; quadrature failed")
    num = float(np.dot(w * fz, profile.values))
    est = num / den
    if not with_error:
        return est
    werr = np.abs(w) * profile.std_errors
    se_num = float(np.dot(np.abs(fz), werr))
    se_den = float(werr.sum())
    return est, (se_num + abs(est) * se_den) / den


@dataclass(frozen=True)
class PartitionRatio:
    """Estimate of the scaled partition ratio Z_n sqrt(2 pi) / n^{1/4}."""

    estimate: float
    std_error: float
    limit_target: float
    n: int
    mc_draws: int
    measure_name: str


def partition_limit_target(measure: BaseMeasure) -> float:
    """n -> infinity value: (3 sigma^4 / (4 mu4))^{1/4} * Gamma(1/4)."""
    sigma4 = measure.variance() ** 2
    return (3.0 * sigma4 / (4.0 * measure.fourth_moment())) ** 0.25 * gamma_quarter()


def partition_ratio(
    n: int,
    measure: BaseMeasure,
    mc_draws: int,
    rng: np.random.Generator,
    threads: int = 1,
    z_grid: Sequence[float] | None = None,
) -> PartitionRatio:
    """Integral of the profile, converging to the limit target as n grows.

    n = 1 is exact (psi_1 = exp(g)) and integrated by adaptive quadrature
    with zero standard error; larger n use the Monte Carlo profile.
    """
    target = partition_limit_target(measure)
    if n == 1:
        est = adaptive_simpson(
            lambda zz: math.exp(g_scalar(zz)), -DEFAULT_Z_MAX, DEFAULT_Z_MAX, tol=1e-10
        )
        return PartitionRatio(
            estimate=est,
            std_error=0.0,
            limit_target=target,
            n=1,
            mc_draws=0,
            measure_name=measure.name,
        )
    grid = default_z_grid() if z_grid is None else np.asarray(z_grid)
    prof = smoothed_density_profile(n, measure, grid, mc_draws, rng, threads=threads)
    return PartitionRatio(
        estimate=prof.integral_estimate,
        std_error=prof.integral_std_error,
        limit_target=target,
        n=n,
        mc_draws=mc_draws,
        measure_name=measure.name,
    )


# -- finite-size error model --------------------------------------------


def remainder_exponent(z: np.ndarray, n: int, measure: BaseMeasure) -> np.ndarray:
    """Bound b(z) on |ln psi_n(z) - (-a z^4)| from the degree-5 Taylor remainder.

    Replacing g by its quartic Taylor term at the law-of-large-numbers
    point leaves a remainder of at most sup|g'''''|/120 per site; summing
    over sites with E sum|A_i|^5 ~ mu5 / (sigma^5 n^{3/2}) gives

        b(z) = (sup|g'''''| / 120) * (mu5 / sigma^5) * |z|^5 / n^{1/4}.

    This is the leading finite-size allowance used when a finite-n profile
    is compared against its n -> infinity limit; it shrinks like n^{-1/4},
    slower than the n^{-1/2} deviation observed empirically, so bands built
    from it stay conservative as n grows.
    """
    mu5 = measure.abs_fifth_moment()
    sigma5 = measure.variance() ** 2.5
    return (G5_SUP / 120.0) * (mu5 / sigma5) * np.abs(z) ** 5 / n**0.25


def _pdf_times_expm1_b(z: np.ndarray, n: int, measure: BaseMeasure, law) -> np.ndarray:
    # pdf(z) * (e^{b(z)} - 1) written as C (e^{b - a z^4} - e^{-a z^4}) so
    # the huge-b / tiny-pdf tail cannot overflow; exponents above 40 only
    # occur when the allowance is already past any usable size, so they are
    # clamped rather than left to overflow.
    z = np.asarray(z, dtype=np.float64)
    b = remainder_exponent(z, n, measure)
    expo = np.minimum(b - law.a * z**4, 40.0)
    return law.normalization * (np.exp(expo) - np.exp(-law.a * z**4))


def finite_size_allowance(
    z: np.ndarray, n: int, measure: BaseMeasure, law
) -> np.ndarray:
    """Pointwise allowance for |normalized psi_n - limit pdf|.

    With |psi_n/psi_inf - 1| <= e^{b(z)} - 1 pointwise, the normalized
    profile deviates from the limit pdf by at most

        pdf(z) * ((e^{b(z)} - 1) + Delta) / (1 - Delta),

    where Delta integrates pdf * (e^{b} - 1) (the normalization shift).
    Raises when Delta >= 1/2: the limit comparison is then meaningless at
    this n.
    """
    z = np.asarray(z, dtype=np.float64)
    grow = _pdf_times_expm1_b(z, n, measure, law)
    pdf = law.pdf(z)
    delta = _delta_mass(n, measure, law)
    if delta >= 0.5:
        raise ValueError("n too small for a meaningful limit comparison")
    return (grow + pdf * delta) / (1.0 - delta)


def partition_allowance(n: int, measure: BaseMeasure, law) -> float:
    """Allowance for |integral of psi_n - limit target|: target * Delta."""
    return partition_limit_target(measure) * _delta_mass(n, measure, law)


def _delta_mass(n: int, measure: BaseMeasure, law) -> float:
    # Fixed-grid Simpson, not adaptive: near the usability boundary the
    # clamped integrand is a plateau of magnitude e^40, and an absolute-
    # tolerance adaptive rule would subdivide to its depth cap everywhere.
    # The integrand is even, smooth, and vectorized, so 3201 points over
    # [0, z_max] give ~1e-10 accuracy at fixed cost.
    zz = np.linspace(0.0, DEFAULT_Z_MAX, 3201)
    vals = _pdf_times_expm1_b(zz, n, measure, law)
    return 2.0 * composite_simpson(vals, float(zz[1] - zz[0]))
