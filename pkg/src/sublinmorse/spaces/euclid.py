"""The Euclidean plane."""

from __future__ import annotations

import math

import numpy as np

from .base import BoundaryPoint, DomainError, Geodesic, ModelSpace, Point, Projection


class EuclideanPlane(ModelSpace):
    tag = "e2"

    def point(self, x, y):
        return Point(self.tag, np.array([x, y], dtype=float))

    def basepoint(self):
        return self.point(0.0, 0.0)

    def ideal(self, theta):
        return BoundaryPoint(self.tag, float(theta) % (2 * math.pi))

    def distance(self, p, q):
        self.check(p, q)
        return float(np.hypot(*(p.data - q.data)))

    def segment(self, p, q):
        self.check(p, q)
        diff = q.data - p.data
        length = float(np.hypot(*diff))
        u = diff / length if length > 0 else np.array([1.0, 0.0])
        return Geodesic(self.tag, "segment", 0.0, length, (p.data.copy(), u))

    def line(self, a, u):
        u = np.asarray(u, dtype=float)
        return Geodesic(self.tag, "line", -math.inf, math.inf, (np.asarray(a, float), u / np.hypot(*u)))

    def ray(self, zeta, start=None):
        a = np.zeros(2) if start is None else start.data
        th = zeta.coord
        return Geodesic(self.tag, "ray", 0.0, math.inf, (a, np.array([math.cos(th), math.sin(th)])))

    def line_between(self, zeta, alpha):
        d = np.array([math.cos(alpha.coord) - math.cos(zeta.coord), math.sin(alpha.coord) - math.sin(zeta.coord)])
        if np.hypot(*d) < 1e-12:
            raise DomainError("ideal points coincide")
        u0 = np.array([math.cos(alpha.coord), math.sin(alpha.coord)])
        if abs(math.cos(alpha.coord - zeta.coord) + 1) > 1e-12:
            # only antipodal ideal points are joined by a geodesic line
            raise DomainError("non-antipodal ideal points are not joined in E2")
        return self.line(np.zeros(2), u0)

    def _eval(self, geo, t):
        a, u = geo.data
        return Point(self.tag, a + t * u)

    def project(self, p, geo):
        self.check(p, geo)
        a, u = geo.data
        t = geo.clamp(float(np.dot(p.data - a, u)))
        foot = self._eval(geo, t)
        return Projection(foot, self.distance(p, foot), t)

    def busemann(self, zeta, x, y):
        self.check(zeta, x, y)
        u = np.array([math.cos(zeta.coord), math.sin(zeta.coord)])
        return float(np.dot(y.data - x.data, u))

    def boundary_coord(self, p):
        x, y = p.data
        return math.atan2(y, x) % (2 * math.pi)

    def random_point_at(self, center, r, rng):
        th = rng.uniform(0, 2 * math.pi)
        return Point(self.tag, center.data + r * np.array([math.cos(th), math.sin(th)]))
