"""The hyperbolic plane in the hyperboloid model.

Points satisfy <x, x> = -1, x3 > 0 for <x, y> = x1 y1 + x2 y2 - x3 y3.
Ideal points are the null directions (cos t, sin t, 1).
"""

from __future__ import annotations

import math

import numpy as np

from .base import BoundaryPoint, DomainError, Geodesic, ModelSpace, Point, Projection

J = np.diag([1.0, 1.0, -1.0])


def mink(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def hdist(p, q):
    # chord form near the diagonal, arccosh once the chord would cancel
    with np.errstate(over="ignore", invalid="ignore"):
        diff = p - q
        s = np.maximum(mink(diff, diff), 0.0)
        m = -mink(p, q)
    return np.where(m > 2.0, np.arccosh(np.maximum(m, 1.0)), 2 * np.arcsinh(np.sqrt(s) / 2))


def renormalize(p):
    return p / np.sqrt(-mink(p, p))


def mink_cross(a, b):
    return J @ np.cross(a, b)


def null_vector(theta):
    return np.array([math.cos(theta), math.sin(theta), 1.0])


class HyperbolicPlane(ModelSpace):
    tag = "h2"

    def point(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)) or float(x[2]) > 1e150:
            raise DomainError("point too far out for hyperboloid coordinates")
        if abs(mink(x, x) + 1) > 1e-8 * max(1.0, float(x[2]) ** 2) or x[2] <= 0:
            raise DomainError(f"{x} is not on the upper sheet of the hyperboloid")
        return Point(self.tag, x)

    def polar(self, r, theta):
        return Point(self.tag, np.array([math.sinh(r) * math.cos(theta), math.sinh(r) * math.sin(theta), math.cosh(r)]))

    def basepoint(self):
        return Point(self.tag, np.array([0.0, 0.0, 1.0]))

    def ideal(self, theta):
        return BoundaryPoint(self.tag, float(theta) % (2 * math.pi))

    def distance(self, p, q):
        self.check(p, q)
        return float(hdist(p.data, q.data))

    def _frame(self, a, w):
        w = w + mink(w, a) * a
        return a, w / math.sqrt(mink(w, w))

    def segment(self, p, q):
        self.check(p, q)
        d = self.distance(p, q)
        if d < 1e-12:
            w = mink_cross(p.data, np.array([0.0, 0.0, 1.0]) if abs(p.data[2] - 1) > 1e-9 else np.array([0.0, 1.0, 0.0]))
            if mink(w, w) < 1e-20:
                w = np.array([1.0, 0.0, 0.0])
            w = w + mink(w, p.data) * p.data
        else:
            w = (q.data - math.cosh(d) * p.data) / math.sinh(d)
        a, w = self._frame(p.data, w)
        return Geodesic(self.tag, "segment", 0.0, d, (a, w, q.data.copy()))

    def line(self, a, w):
        a, w = self._frame(np.asarray(a, float), np.asarray(w, float))
        return Geodesic(self.tag, "line", -math.inf, math.inf, (a, w))

    def ray(self, zeta, start=None):
        a = np.array([0.0, 0.0, 1.0]) if start is None else start.data
        if start is None:
            w = np.array([math.cos(zeta.coord), math.sin(zeta.coord), 0.0])
        else:
            xi = null_vector(zeta.coord)
            # direction at a toward xi
            w = xi / (-mink(a, xi)) - a
        a, w = self._frame(a, w)
        return Geodesic(self.tag, "ray", 0.0, math.inf, (a, w))

    def line_between(self, zeta, alpha):
        """Line from ``zeta`` (t -> -inf) to ``alpha`` (t -> +inf), t = 0 at the foot of o."""
        x1, x2 = null_vector(zeta.coord), null_vector(alpha.coord)
        s = -2 * mink(x1, x2)
        if s < 1e-24:
            raise DomainError("ideal points coincide")
        s = math.sqrt(s)
        return self.line((x1 + x2) / s, (x2 - x1) / s)

    def _eval(self, geo, t):
        a, w = geo.data[:2]
        if geo.kind == "segment" and geo.tmax > 1e-3:
            # endpoint interpolation stays well conditioned for long segments
            L = geo.tmax
            x = (math.sinh(L - t) * a + math.sinh(t) * geo.data[2]) / math.sinh(L)
            return Point(self.tag, x)
        return Point(self.tag, math.cosh(t) * a + math.sinh(t) * w)

    def normal(self, geo):
        a, w = geo.data[:2]
        n = mink_cross(a, w)
        return n / math.sqrt(mink(n, n))

    def project(self, p, geo):
        """Closed-form nearest point: drop the normal component, renormalize, clamp."""
        self.check(p, geo)
        a, w = geo.data[:2]
        n = self.normal(geo)
        f = p.data - mink(p.data, n) * n
        f = renormalize(f)
        t = geo.clamp(float(math.asinh(mink(f, w))))
        foot = self._eval(geo, t)
        return Projection(foot, self.distance(p, foot), t)

    def busemann(self, zeta, x, y):
        self.check(zeta, x, y)
        xi = null_vector(zeta.coord)
        return float(math.log(-mink(x.data, xi)) - math.log(-mink(y.data, xi)))

    def boundary_coord(self, p):
        return math.atan2(p.data[1], p.data[0]) % (2 * math.pi)

    def tangent_frame(self, c):
        e1 = np.array([1.0, 0.0, 0.0]) + mink(np.array([1.0, 0.0, 0.0]), c) * c
        e1 = e1 / math.sqrt(mink(e1, e1))
        e2 = np.array([0.0, 1.0, 0.0]) + mink(np.array([0.0, 1.0, 0.0]), c) * c
        e2 = e2 - mink(e2, e1) * e1
        e2 = e2 / math.sqrt(mink(e2, e2))
        return e1, e2

    def exp(self, c, r, phi):
        e1, e2 = self.tangent_frame(c.data)
        return Point(self.tag, math.cosh(r) * c.data + math.sinh(r) * (math.cos(phi) * e1 + math.sin(phi) * e2))

    def random_point_at(self, center, r, rng):
        return self.exp(center, r, rng.uniform(0, 2 * math.pi))
