"""Independent reference computations for the geometry checks.

None of these call the closed forms under test: distances go through the
Poincare disk, projections through a 1-D search, Busemann functions through a
truncated limit, and glued distances through a zooming grid over the crossing.
"""

import math

import numpy as np


def disk_distance(p, q):
    """Hyperbolic distance via the Poincare disk image of hyperboloid points."""
    z = complex(p[0], p[1]) / (1 + p[2])
    w = complex(q[0], q[1]) / (1 + q[2])
    r = abs(z - w) / abs(1 - z * w.conjugate())
    return 2 * math.atanh(min(r, 1 - 1e-17))


def zoom_min(f, lo, hi, n=2001, rounds=8):
    """Grid minimum, re-gridded around the best cell each round."""
    best = lo
    for _ in range(rounds):
        xs = np.linspace(lo, hi, n)
        ys = np.array([f(x) for x in xs])
        i = int(np.argmin(ys))
        best = xs[i]
        step = (hi - lo) / (n - 1)
        lo, hi = best - 2 * step, best + 2 * step
    return best, f(best)


def glued_cross_oracle(x, y, u, v):
    """Flat point (x, y), hyperbolic point in line-Fermi coordinates (u, v).

    Minimizes flat leg plus hyperbolic leg over the crossing point w on the line;
    cosh of the hyperbolic leg is cosh v cosh(u - w).
    """
    def total(w):
        return math.hypot(x - w, y) + math.acosh(max(1.0, math.cosh(v) * math.cosh(u - w)))

    lo, hi = min(x, u) - 1.0, max(x, u) + 1.0
    return zoom_min(total, lo, hi)[1]


def fermi_exp_mp(u0, v0, r, c, sign, dps=500):
    """Geodesic endpoint in Fermi coordinates, through the hyperboloid at high precision.

    The unit direction has e_u component ``c``; its e_v component, with the given
    sign, is completed at working precision (in floats it would round to +-1).
    """
    import mpmath as mp

    with mp.workdps(dps):
        u0, v0, r, c = (mp.mpf(x) for x in (u0, v0, r, c))
        s = sign * mp.sqrt(1 - c * c)
        P = [mp.cosh(v0) * mp.sinh(u0), mp.sinh(v0), mp.cosh(v0) * mp.cosh(u0)]
        eu = [mp.cosh(u0), 0, mp.sinh(u0)]
        ev = [mp.sinh(v0) * mp.sinh(u0), mp.cosh(v0), mp.sinh(v0) * mp.cosh(u0)]
        Q = [mp.cosh(r) * p + mp.sinh(r) * (c * a + s * b) for p, a, b in zip(P, eu, ev)]
        v = mp.asinh(Q[1])
        return float(mp.asinh(Q[0] / mp.cosh(v))), float(v)
