"""Scalar numerical routines: quadrature, special functions, 1-d optimization.

Everything here is deterministic and dependency-free (math + numpy only) so
the statistical modules can certify their closed forms against independent
numerics.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

_EPS = 2.220446049250313e-16


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 48,
) -> float:
    """Integrate f over [a, b] by adaptive Simpson bisection.

    Interval error is estimated from the two-panel vs one-panel difference
    and accepted when |S2 - S1| <= 15 * tol (the usual Richardson factor);
    the returned value includes the (S2 - S1)/15 extrapolation term.

    Args:
        f: integrand, evaluated at scalar points.
        a, b: integration limits, a < b.
        tol: absolute error target for the whole interval.
        max_depth: recursion cap; exceeded subintervals are accepted as-is.

    Returns:
        Approximation to the integral of f over [a, b].
    """
    if not a < b:
        raise ValueError("adaptive_simpson requires a < b")

    def simpson(x0: float, x2: float, f0: float, f1: float, f2: float) -> float:
        return (x2 - x0) * (f0 + 4.0 * f1 + f2) / 6.0

    def recurse(
        x0: float,
        x2: float,
        f0: float,
        f1: float,
        f2: float,
        whole: float,
        eps: float,
        depth: int,
    ) -> float:
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl = f(xl)
        fr = f(xr)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        half = 0.5 * eps
        return recurse(x0, xm, f0, fl, f1, left, half, depth + 1) + recurse(
            xm, x2, f1, fr, f2, right, half, depth + 1
        )

    fa = f(a)
    fb = f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def composite_simpson(values: Sequence[float], dx: float) -> float:
    """Composite Simpson rule on uniformly spaced samples.

    Requires at least 3 points. An odd number of intervals is handled by
    applying Simpson to the leading even block and the 3/8 rule would be
    overkill; the final interval is closed with a trapezoid instead.
    """
    y = np.asarray(values, dtype=np.float64)
    m = y.shape[0]
    if m < 3:
        raise ValueError("composite_simpson requires at least 3 points")
    intervals = m - 1
    if intervals % 2 == 1:
        core = _simpson_even(y[:-1], dx) if m - 1 >= 3 else 0.0
        return core + 0.5 * dx * (y[-2] + y[-1])
    return _simpson_even(y, dx)


def _simpson_even(y: np.ndarray, dx: float) -> float:
    w = simpson_weights(y.shape[0], dx)
    return float(np.dot(w, y))


def simpson_weights(m: int, dx: float) -> np.ndarray:
    """Simpson quadrature weights for m uniformly spaced points (m odd)."""
    if m < 3 or m % 2 == 0:
        raise ValueError("simpson_weights requires an odd point count >= 3")
    w = np.full(m, 2.0)
    w[1::2] = 4.0
    w[0] = 1.0
    w[-1] = 1.0
    return w * (dx / 3.0)


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).

    Series expansion for x < a + 1, continued fraction (modified Lentz) for
    the complementary function otherwise; both converge to near machine
    precision for the shape range used here (a >= 1/8).
    """
    if a <= 0.0:
        raise ValueError("shape must be positive")
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def _gamma_series(a: float, x: float) -> float:
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(500):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction for Q(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    frac = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        frac *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return frac * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gamma_quarter() -> float:
    """Gamma(1/4), certified against the reflection identity.

    math.gamma supplies the value; the certificate checks
    Gamma(1/4) * Gamma(3/4) = pi / sin(pi/4) to 1e-12 relative so a broken
    platform gamma cannot silently poison downstream constants.
    """
    value = math.gamma(0.25)
    reflected = math.pi / math.sin(math.pi / 4.0)
    if abs(value * math.gamma(0.75) - reflected) > 1e-12 * reflected:
        raise ArithmeticError("platform gamma failed the reflection identity")
    return value


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12
) -> tuple[float, float]:
    """Locate the maximum of a unimodal f on [lo, hi] by golden-section search.

    Returns:
        (argmax, max value).
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = f(c)
    fd = f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> float:
    """Root of f on a sign-changing bracket [lo, hi] by bisection."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError("bisect_root requires a sign change on the bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)
