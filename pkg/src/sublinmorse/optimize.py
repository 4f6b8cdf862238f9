"""Golden-section minimization of convex (unimodal) functions, scalar or batched."""

from __future__ import annotations

import numpy as np

INVPHI = (np.sqrt(5.0) - 1) / 2


def golden_min(f, lo, hi, tol=1e-12, max_iter=200):
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    ``lo`` and ``hi`` may be arrays, in which case ``f`` must be vectorized and
    every problem is solved in lockstep. Returns ``(argmin, min)``.
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    for _ in range(max_iter):
        if np.all(b - a <= tol * (1 + np.abs(a) + np.abs(b))):
            break
        left = fc < fd
        # shrink toward the smaller value
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - INVPHI * (b - a)
        new_d = a + INVPHI * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        probe = np.where(left, c_next, d_next)
        fp = f(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = c_next, d_next
    x = (a + b) / 2
    fx = f(x)
    # endpoints can win when the minimum sits on the boundary
    flo = f(np.asarray(lo, dtype=float))
    fhi = f(np.asarray(hi, dtype=float))
    best_x = np.where(flo < fx, lo, x)
    best_f = np.minimum(fx, flo)
    best_x = np.where(fhi < best_f, hi, best_x)
    best_f = np.minimum(best_f, fhi)
    if np.ndim(best_x) == 0:
        return float(best_x), float(best_f)
    return best_x, best_f


def convex_argmin(f, lo, hi, h=1e-4, tol=1e-11, max_iter=200):
    """Minimize a convex ``f`` on ``[lo, hi]`` by bisection on the sign of f(t+h) - f(t-h).

    Unlike comparing raw values, the slope sign stays informative next to a flat
    minimum, so the argmin is resolved well below sqrt(machine eps). The bias
    from a fixed ``h`` is O(h^2 f'''/f'').
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    for _ in range(max_iter):
        if np.all(b - a <= tol * (1 + np.abs(a) + np.abs(b))):
            break
        m = (a + b) / 2
        rising = f(m + h) - f(m - h) > 0
        b = np.where(rising, m, b)
        a = np.where(rising, a, m)
    x = (a + b) / 2
    if np.ndim(x) == 0:
        x = float(x)
    return x, f(x)
