"""Log-domain hyperbolic trigonometry in Fermi coordinates.

A point of H^2 has Fermi coordinates ``(u, v)`` relative to a reference geodesic:
``u`` is the arclength parameter of its foot on the geodesic and ``v`` the signed
distance to it. On the hyperboloid this is
``(cosh v sinh u, sinh v, cosh v cosh u)``. Everything here is vectorized and
stays finite for distances in the thousands, where hyperboloid coordinates
overflow float64.
"""

from __future__ import annotations

import numpy as np

LOG2 = np.log(2.0)


def lsinh(x):
    """log(sinh x) for x >= 0 (``-inf`` at 0)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        small = x < 1e-8
        xs = np.where(small, 1.0, x)
        big = xs + np.log1p(-np.exp(-2 * xs)) - LOG2
        return np.where(small, np.log(np.where(x > 0, x, 0.0)), big)


def lcosh(x):
    """log(cosh x)."""
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2 * x)) - LOG2


def asinh_exp(l):
    """asinh(exp(l)) without overflow."""
    l = np.asarray(l, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        big = l + np.log1p(np.sqrt(1 + np.exp(-2 * np.maximum(l, 0.0))))
        small = np.arcsinh(np.exp(np.minimum(l, 0.0)))
    return np.where(l > 0, big, small)


def _signed_logsum(sa, la, sb, lb):
    """sign and log|.| of sa*e^la + sb*e^lb."""
    with np.errstate(invalid="ignore", divide="ignore"):
        hi = np.maximum(la, lb)
        lo = np.minimum(la, lb)
        s_hi = np.where(la >= lb, sa, sb)
        same = sa * sb > 0
        diff = np.where(np.isfinite(lo), lo - hi, -np.inf)
        log_same = hi + np.log1p(np.exp(diff))
        log_diff = hi + np.log1p(-np.exp(diff))
        out_l = np.where(same, log_same, log_diff)
        out_l = np.where(np.isneginf(hi), -np.inf, out_l)
        sign = np.where(np.isfinite(out_l), s_hi, 0.0)
    return sign, out_l


def exp_fermi(u0, v0, r, psi=None, direction=None):
    """Endpoint of the geodesic of length ``r`` leaving ``(u0, v0)`` at angle ``psi``.

    ``psi`` is measured from the unit vector along increasing ``u`` toward
    increasing ``v``. Alternatively pass ``direction=(cos, sin)``, which keeps
    angles within an ulp of the normal direction. Returns Fermi coordinates ``(u, v)``.
    """
    if direction is None:
        c, s = np.cos(psi), np.sin(psi)
    else:
        c, s = direction
    u0, v0, r, c, s = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (u0, v0, r, c, s)))
    sigma = np.where(s >= 0, 1.0, -1.0)
    # sinh v = sinh(v0 + sigma r) - sigma cosh v0 sinh r (1 - |sin psi|)
    arg = v0 + sigma * r
    with np.errstate(divide="ignore"):
        # log(1 - |sin psi|) = 2 log|cos psi| - log(1 + |sin psi|); c * c underflows for aimed shots
        l1 = lsinh(np.abs(arg))
        l2 = lcosh(v0) + lsinh(r) + 2 * np.log(np.abs(c)) - np.log1p(np.abs(s))
    sign, lmag = _signed_logsum(np.sign(arg), l1, -sigma, l2)
    v = sign * asinh_exp(lmag)
    v = np.where(np.isneginf(lmag), 0.0, v)
    with np.errstate(divide="ignore"):
        ldu = lsinh(r) + np.log(np.abs(c)) - lcosh(v)
    du = np.sign(c) * asinh_exp(ldu)
    du = np.where(np.isneginf(ldu), 0.0, du)
    return u0 + du, v


def fermi_distance(u1, v1, u2, v2):
    """Distance between Fermi points (stable, no cancellation)."""
    u1, v1, u2, v2 = (np.asarray(a, dtype=float) for a in (u1, v1, u2, v2))
    with np.errstate(divide="ignore"):
        a = 2 * lsinh(np.abs(v1 - v2) / 2)
        b = lcosh(v1) + lcosh(v2) + 2 * lsinh(np.abs(u1 - u2) / 2)
        ls = np.logaddexp(a, b)
    d = 2 * asinh_exp(0.5 * ls)
    return np.where(np.isneginf(ls), 0.0, d)


def initial_angle(u1, v1, u2, v2):
    """Fermi angle at (u1, v1) of the geodesic toward (u2, v2)."""
    c, s = initial_direction(u1, v1, u2, v2)
    return np.arctan2(s, c)


def initial_direction(u1, v1, u2, v2):
    """(cos, sin) of the Fermi angle at (u1, v1) toward (u2, v2), in the log domain.

    Components along e_u, e_v are cosh v2 sinh du and
    sinh(v2 - v1) - 2 cosh v2 sinh v1 sinh^2(du / 2).
    """
    u1, v1, u2, v2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u1, v1, u2, v2)))
    du = u2 - u1
    with np.errstate(divide="ignore"):
        lu = lcosh(v2) + lsinh(np.abs(du))
        dv = v2 - v1
        lb = lcosh(v2) + lsinh(np.abs(v1)) + 2 * lsinh(np.abs(du) / 2) + np.log(2.0)
    sv, lv = _signed_logsum(np.sign(dv), lsinh(np.abs(dv)), -np.sign(v1), lb)
    m = np.maximum(lu, lv)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore", under="ignore"):
        b, a = sv * np.exp(lv - m), np.sign(du) * np.exp(lu - m)
        h = np.hypot(a, b)
        return a / h, b / h


def fermi_to_hyperboloid(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.stack([np.cosh(v) * np.sinh(u), np.sinh(v), np.cosh(v) * np.cosh(u)], axis=-1)


def hyperboloid_to_fermi(p):
    p = np.asarray(p, dtype=float)
    v = np.arcsinh(p[..., 1])
    u = np.arcsinh(p[..., 0] / np.cosh(v))
    return u, v


def crossing_time(v0, psi):
    """Arclength at which the geodesic from ``(., v0)`` at angle ``psi`` reaches v = 0.

    ``inf`` if it never does. Solves tanh t = -tanh v0 / sin psi.
    """
    v0 = np.asarray(v0, dtype=float)
    s = np.sin(np.asarray(psi, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = -np.tanh(v0) / s
        t = np.where((ratio >= 0) & (ratio < 1), np.arctanh(np.clip(ratio, 0, 1 - 1e-300)), np.inf)
    return np.where(v0 == 0, 0.0, t)


def normal_speed_at(v0, psi, t):
    """d v / d t along the geodesic from ``(., v0)`` at angle ``psi``, evaluated where v = 0."""
    return np.sinh(v0) * np.sinh(t) + np.cosh(v0) * np.cosh(t) * np.sin(psi)
