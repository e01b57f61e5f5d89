"""Compiled inner loops for the tridiagonal eigensolvers."""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure-Python fallback
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


EPS = np.finfo(float).eps


@njit(cache=True)
def tql_implicit(d, e, z, want_vectors, max_iter):
    """Implicit-shift QL on a symmetric tridiagonal matrix, in place.

    d : diagonal (n), overwritten with eigenvalues (unsorted).
    e : off-diagonal padded to length n, e[i] couples i and i+1; destroyed.
    z : (n, n) array, rotated in place when ``want_vectors``.
    Returns -1 on success, else the index whose iteration cap was hit.
    """
    n = d.shape[0]
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(n):
                        f = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f
                        z[k, i] = c * z[k, i] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


@njit(cache=True)
def sturm_count(d, e2, lam, pivmin):
    """Number of eigenvalues strictly below ``lam`` (LDL^T sign count)."""
    n = d.shape[0]
    count = 0
    q = d[0] - lam
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for i in range(1, n):
        q = d[i] - lam - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


@njit(cache=True)
def bisect_lowest(d, e2, k, lo0, hi0, atol, pivmin, max_iter):
    """Lowest ``k`` eigenvalues by Sturm-count bisection."""
    out = np.empty(k)
    lo_prev = lo0
    for idx in range(k):
        lo = lo_prev
        hi = hi0
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if hi - lo <= atol:
                break
            if sturm_count(d, e2, mid, pivmin) >= idx + 1:
                hi = mid
            else:
                lo = mid
        out[idx] = 0.5 * (lo + hi)
        lo_prev = lo
    return out
