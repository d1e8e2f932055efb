"""Hot loops for the Metropolis sweep and the smoothing-oracle profile.

Compiled with numba when available (the default); a pure-python fallback
with identical stream consumption exists for environments without a JIT,
selectable via CWSOC_DISABLE_NUMBA=1. The fallback is orders of magnitude
slower and only suitable for unit-scale runs.

g is evaluated in three branches chosen for relative accuracy ~1e-13
across the whole line:
    |y| < 0.1   Taylor series of ln cosh y - y^2/2 (no cancellation),
    |y| < 0.5   log1p(2 sinh^2(y/2)) - y^2/2,
    otherwise   |y| - ln 2 + log1p(e^{-2|y|}) - y^2/2 (overflow-free).
"""

from __future__ import annotations

import math
import os

import numpy as np

LN2 = 0.6931471805599453

# Series coefficients for ln cosh y - y^2/2 = -y^4/12 + y^6/45 - 17 y^8/2520
# + 62 y^10/28350 - 1382 y^12/1871100 + O(y^14); |rel err| < 3e-15 for |y| < 0.1.
_C4 = -1.0 / 12.0
_C6 = 1.0 / 45.0
_C8 = -17.0 / 2520.0
_C10 = 62.0 / 28350.0
_C12 = -1382.0 / 1871100.0


def _g_scalar_py(y: float) -> float:
    ay = abs(y)
    if ay < 0.1:
        y2 = y * y
        return y2 * y2 * (_C4 + y2 * (_C6 + y2 * (_C8 + y2 * (_C10 + y2 * _C12))))
    if ay < 0.5:
        sh = math.sinh(0.5 * y)
        return math.log1p(2.0 * sh * sh) - 0.5 * y * y
    return ay - LN2 + math.log1p(math.exp(-2.0 * ay)) - 0.5 * y * y


def g_array(y: np.ndarray) -> np.ndarray:
    """Vectorized g over an array, same branch structure as the scalar."""
    y = np.asarray(y, dtype=np.float64)
    ay = np.abs(y)
    out = np.empty_like(ay)

    small = ay < 0.1
    mid = (~small) & (ay < 0.5)
    large = ~(small | mid)

    y2 = ay[small] ** 2
    out[small] = y2 * y2 * (_C4 + y2 * (_C6 + y2 * (_C8 + y2 * (_C10 + y2 * _C12))))

    ym = ay[mid]
    sh = np.sinh(0.5 * ym)
    out[mid] = np.log1p(2.0 * sh * sh) - 0.5 * ym * ym

    yl = ay[large]
    out[large] = yl - LN2 + np.log1p(np.exp(-2.0 * yl)) - 0.5 * yl * yl
    return out


def _sweep_block_py(values, s, t, proposals, uniforms, out_s, out_t, recompute_every, upd_count):
    n = values.shape[0]
    accepts = 0
    for k in range(proposals.shape[0]):
        for i in range(n):
            v = proposals[k, i]
            xi = values[i]
            s2 = s - xi + v
            t2 = t - xi * xi + v * v
            if t2 > 0.0:
                new_lw = 0.5 * s2 * s2 / t2
                old_lw = 0.5 * s * s / t if t > 0.0 else -np.inf
                delta = new_lw - old_lw
                # exp only for delta < 0, so no overflow for large weights
                if delta >= 0.0 or uniforms[k, i] < math.exp(delta):
                    values[i] = v
                    s = s2
                    t = t2
                    accepts += 1
                    upd_count += 1
                    if upd_count >= recompute_every:
                        s = 0.0
                        t = 0.0
                        for j in range(n):
                            s += values[j]
                            t += values[j] * values[j]
                        upd_count = 0
        out_s[k] = s
        out_t[k] = t
    return s, t, accepts, upd_count


def _profile_block_py(draws, zcoefs, wsum, s1, s2, c1, c2):
    # Compensated accumulation: the mean of M near-identical values must not
    # drift by O(M*eps), or the exact n=1 contract (zero Monte Carlo error)
    # breaks. c1/c2 carry the Kahan compensation for s1/s2.
    nu = zcoefs.shape[0]
    i1 = 0.0
    i1c = 0.0
    i2 = 0.0
    i2c = 0.0
    for d in range(draws.shape[0]):
        row = draws[d]
        t = float(np.dot(row, row))
        sqrt_t = math.sqrt(t)
        integral = 0.0
        for u in range(nu):
            total = float(np.sum(g_array(row * (zcoefs[u] / sqrt_t))))
            val = math.exp(total)
            y = val - c1[u]
            acc = s1[u] + y
            c1[u] = (acc - s1[u]) - y
            s1[u] = acc
            vv = val * val
            y = vv - c2[u]
            acc = s2[u] + y
            c2[u] = (acc - s2[u]) - y
            s2[u] = acc
            integral += wsum[u] * val
        y = integral - i1c
        acc = i1 + y
        i1c = (acc - i1) - y
        i1 = acc
        y = integral * integral - i2c
        acc = i2 + y
        i2c = (acc - i2) - y
        i2 = acc
    return i1, i2


_DISABLED = os.environ.get("CWSOC_DISABLE_NUMBA", "") == "1"
NUMBA_ACTIVE = False

if not _DISABLED:
    try:
        from numba import njit

        @njit(cache=True, nogil=True)
        def _g_scalar_nb(y):
            ay = abs(y)
            if ay < 0.1:
                y2 = y * y
                return y2 * y2 * (_C4 + y2 * (_C6 + y2 * (_C8 + y2 * (_C10 + y2 * _C12))))
            if ay < 0.5:
                sh = math.sinh(0.5 * y)
                return math.log1p(2.0 * sh * sh) - 0.5 * y * y
            return ay - LN2 + math.log1p(math.exp(-2.0 * ay)) - 0.5 * y * y

        @njit(cache=True, nogil=True)
        def _sweep_block_nb(values, s, t, proposals, uniforms, out_s, out_t, recompute_every, upd_count):
            n = values.shape[0]
            accepts = 0
            for k in range(proposals.shape[0]):
                for i in range(n):
                    v = proposals[k, i]
                    xi = values[i]
                    s2 = s - xi + v
                    t2 = t - xi * xi + v * v
                    if t2 > 0.0:
                        new_lw = 0.5 * s2 * s2 / t2
                        old_lw = 0.5 * s * s / t if t > 0.0 else -np.inf
                        delta = new_lw - old_lw
                        if delta >= 0.0 or uniforms[k, i] < math.exp(delta):
                            values[i] = v
                            s = s2
                            t = t2
                            accepts += 1
                            upd_count += 1
                            if upd_count >= recompute_every:
                                s = 0.0
                                t = 0.0
                                for j in range(n):
                                    s += values[j]
                                    t += values[j] * values[j]
                                upd_count = 0
                out_s[k] = s
                out_t[k] = t
            return s, t, accepts, upd_count

        @njit(cache=True, nogil=True)
        def _profile_block_nb(draws, zcoefs, wsum, s1, s2, c1, c2):
            ndraws = draws.shape[0]
            n = draws.shape[1]
            nu = zcoefs.shape[0]
            i1 = 0.0
            i1c = 0.0
            i2 = 0.0
            i2c = 0.0
            for d in range(ndraws):
                t = 0.0
                for j in range(n):
                    t += draws[d, j] * draws[d, j]
                inv_sqrt_t = 1.0 / math.sqrt(t)
                integral = 0.0
                for u in range(nu):
                    coef = zcoefs[u] * inv_sqrt_t
                    total = 0.0
                    for j in range(n):
                        total += _g_scalar_nb(coef * draws[d, j])
                    val = math.exp(total)
                    y = val - c1[u]
                    acc = s1[u] + y
                    c1[u] = (acc - s1[u]) - y
                    s1[u] = acc
                    vv = val * val
                    y = vv - c2[u]
                    acc = s2[u] + y
                    c2[u] = (acc - s2[u]) - y
                    s2[u] = acc
                    integral += wsum[u] * val
                y = integral - i1c
                acc = i1 + y
                i1c = (acc - i1) - y
                i1 = acc
                y = integral * integral - i2c
                acc = i2 + y
                i2c = (acc - i2) - y
                i2 = acc
            return i1, i2

        sweep_block = _sweep_block_nb
        profile_block = _profile_block_nb
        NUMBA_ACTIVE = True
    except ImportError:
        sweep_block = _sweep_block_py
        profile_block = _profile_block_py
else:
    sweep_block = _sweep_block_py
    profile_block = _profile_block_py


def g_scalar(y: float) -> float:
    """Stable scalar g(y) = ln cosh y - y^2/2."""
    return _g_scalar_py(y)
