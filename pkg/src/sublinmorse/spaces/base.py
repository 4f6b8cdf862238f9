"""Common types for the model spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class SpaceError(ValueError):
    """Point or geodesic used with the wrong space."""


class DomainError(ValueError):
    """Parameter outside the domain of a geodesic."""


class UnsupportedSpace(NotImplementedError):
    pass


class DivergenceError(ArithmeticError):
    """A truncated limit failed its Cauchy test."""


@dataclass(frozen=True)
class Point:
    tag: str
    data: Any

    def to_json(self):
        return {"space": self.tag, "coords": _jsonable(self.data)}


@dataclass(frozen=True)
class BoundaryPoint:
    tag: str
    coord: Any

    def to_json(self):
        return {"space": self.tag, "boundary": _jsonable(self.coord)}


@dataclass
class Geodesic:
    """Unit-speed geodesic ``gamma: [tmin, tmax] -> X``; either bound may be infinite."""

    tag: str
    kind: str  # "segment", "ray" or "line"
    tmin: float
    tmax: float
    data: Any = field(repr=False)

    def __post_init__(self):
        if self.tmin > self.tmax:
            raise DomainError(f"empty domain [{self.tmin}, {self.tmax}]")

    def clamp(self, t):
        return min(max(t, self.tmin), self.tmax)

    def in_domain(self, t, tol=1e-9):
        return self.tmin - tol <= t <= self.tmax + tol

    def finite_window(self, center, radius):
        lo = self.tmin if math.isfinite(self.tmin) else center - radius
        hi = self.tmax if math.isfinite(self.tmax) else center + radius
        return max(lo, center - radius), min(hi, center + radius)


@dataclass(frozen=True)
class Projection:
    foot: Point
    dist: float
    t: float


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [float(v) for v in x]
    if isinstance(x, Point):
        return x.to_json()
    if isinstance(x, (tuple, list)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


class ModelSpace:
    """Interface shared by all model spaces."""

    tag = "abstract"
    has_boundary = True

    def basepoint(self) -> Point:
        raise NotImplementedError

    def check(self, *objs):
        for o in objs:
            if getattr(o, "tag", None) != self.tag:
                raise SpaceError(f"object tagged {getattr(o, 'tag', None)!r} used in {self.tag!r}")

    def norm(self, p):
        return self.distance(self.basepoint(), p)

    def eval(self, geo, t):
        self.check(geo)
        if not geo.in_domain(t):
            raise DomainError(f"t={t} outside [{geo.tmin}, {geo.tmax}]")
        return self._eval(geo, geo.clamp(t))

    def project_search(self, p, geo, tol=1e-12):
        """Nearest point on ``geo`` by 1-D search (distance is convex in t)."""
        from ..optimize import convex_argmin

        self.check(p, geo)
        t0 = geo.clamp(0.0)
        d0 = self.distance(p, self._eval(geo, t0))
        lo, hi = geo.finite_window(t0, 2 * d0 + 2)
        t, d = convex_argmin(lambda s: self.distance(p, self._eval(geo, geo.clamp(float(s)))), lo, hi, tol=tol)
        return Projection(self._eval(geo, t), d, t)

    def project(self, p, geo):
        return self.project_search(p, geo)

    def busemann(self, zeta, x, y):
        return busemann_truncated(self, zeta, x, y)

    def random_direction_point(self, center, r, rng):
        raise NotImplementedError


def busemann_truncated(space, zeta, x, y, t0=8.0, t_max=2.0 ** 20, tol=1e-9):
    """lim d(x, z) - d(y, z) as z runs out the ray from the basepoint to ``zeta``."""
    if not space.has_boundary:
        raise UnsupportedSpace(f"{space.tag} has no Busemann functions here")
    ray = space.ray(zeta)
    t = t0 + space.norm(x) + space.norm(y)
    prev = None
    while t <= t_max:
        z = space.eval(ray, t)
        val = space.distance(x, z) - space.distance(y, z)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        t *= 2
    raise DivergenceError("Busemann limit did not settle")
