"""l2 product of two model spaces."""

from __future__ import annotations

import math

from .base import Geodesic, ModelSpace, Point, UnsupportedSpace


class ProductSpace(ModelSpace):
    has_boundary = False

    def __init__(self, first, second):
        self.factors = (first, second)
        self.tag = f"prod:{first.tag}*{second.tag}"

    def point(self, p1, p2):
        self.factors[0].check(p1)
        self.factors[1].check(p2)
        return Point(self.tag, (p1, p2))

    def basepoint(self):
        return Point(self.tag, (self.factors[0].basepoint(), self.factors[1].basepoint()))

    def distance(self, p, q):
        self.check(p, q)
        X, Y = self.factors
        return math.hypot(X.distance(p.data[0], q.data[0]), Y.distance(p.data[1], q.data[1]))

    def segment(self, p, q):
        self.check(p, q)
        X, Y = self.factors
        g1 = X.segment(p.data[0], q.data[0])
        g2 = Y.segment(p.data[1], q.data[1])
        L = math.hypot(g1.tmax, g2.tmax)
        c1, c2 = (g1.tmax / L, g2.tmax / L) if L > 0 else (1.0, 0.0)
        return Geodesic(self.tag, "segment", 0.0, L, (g1, g2, c1, c2))

    def combine(self, g1, g2, angle):
        """Geodesic t -> (g1(t cos a), g2(t sin a)); both factors must be rays or both lines."""
        c1, c2 = math.cos(angle), math.sin(angle)
        kinds = {g1.kind, g2.kind}
        if kinds == {"line"}:
            return Geodesic(self.tag, "line", -math.inf, math.inf, (g1, g2, c1, c2))
        return Geodesic(self.tag, "ray", 0.0, math.inf, (g1, g2, c1, c2))

    def _eval(self, geo, t):
        g1, g2, c1, c2 = geo.data
        X, Y = self.factors
        return Point(self.tag, (X._eval(g1, g1.clamp(c1 * t)), Y._eval(g2, g2.clamp(c2 * t))))

    def busemann(self, zeta, x, y):
        raise UnsupportedSpace("product boundaries are not modeled")

    def ray(self, zeta, start=None):
        raise UnsupportedSpace("product boundaries are not modeled; use combine()")

    def boundary_coord(self, p):
        raise UnsupportedSpace("product boundaries are not modeled")

    def random_point_at(self, center, r, rng):
        a = rng.uniform(0, math.pi / 2)
        X, Y = self.factors
        return Point(self.tag, (X.random_point_at(center.data[0], r * math.cos(a), rng),
                                Y.random_point_at(center.data[1], r * math.sin(a), rng)))
