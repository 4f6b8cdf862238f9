"""Model spaces: E2, H2, regular trees, l2 products and the glued plane."""

from __future__ import annotations

import math

import numpy as np

from .base import (BoundaryPoint, DivergenceError, DomainError, Geodesic, ModelSpace, Point, Projection,
                   SpaceError, UnsupportedSpace)
from .euclid import EuclideanPlane
from .glued import GluedPlane
from .hyperbolic import HyperbolicPlane
from .product import ProductSpace
from .tree import RegularTree

__all__ = [
    "BoundaryPoint", "DivergenceError", "DomainError", "Geodesic", "ModelSpace", "Point", "Projection",
    "SpaceError", "UnsupportedSpace", "EuclideanPlane", "GluedPlane", "HyperbolicPlane", "ProductSpace",
    "RegularTree", "parse_space", "gromov_product", "comparison_check", "point_from_json",
]


def parse_space(text: str) -> ModelSpace:
    """``e2``, ``h2``, ``tree:k=<k>``, ``glued`` or ``prod:<a>*<b>``."""
    text = text.strip()
    if text.startswith("prod:"):
        body = text[5:]
        if "*" not in body:
            raise ValueError(f"product needs two factors: {text!r}")
        a, b = body.split("*", 1)
        return ProductSpace(parse_space(a), parse_space(b))
    if text == "e2":
        return EuclideanPlane()
    if text == "h2":
        return HyperbolicPlane()
    if text == "glued":
        return GluedPlane()
    if text.startswith("tree:k="):
        try:
            k = int(text[7:])
        except ValueError:
            raise ValueError(f"bad tree rank in {text!r}") from None
        return RegularTree(k)
    raise ValueError(f"unknown space {text!r}")


def point_from_json(space, obj):
    if obj.get("space") != space.tag:
        raise SpaceError(f"point for {obj.get('space')!r} read into {space.tag!r}")
    c = obj["coords"]
    if isinstance(space, EuclideanPlane):
        return space.point(*c)
    if isinstance(space, HyperbolicPlane):
        return space.point(c)
    if isinstance(space, RegularTree):
        return space.point(tuple(c[0]), c[1])
    if isinstance(space, GluedPlane):
        return space.point(*c)
    if isinstance(space, ProductSpace):
        return space.point(point_from_json(space.factors[0], c[0]), point_from_json(space.factors[1], c[1]))
    raise SpaceError(space.tag)


def gromov_product(space, x, zeta, alpha, t0=4.0, t_max=2.0 ** 23, tol=1e-7):
    """(zeta . alpha)_x as a truncated limit along the rays from the basepoint.

    Doubles the truncation until successive values agree within ``tol``;
    raises DivergenceError if they never do.
    """
    if not space.has_boundary:
        raise UnsupportedSpace(f"{space.tag} has no boundary here")
    r1, r2 = space.ray(zeta), space.ray(alpha)
    t_cap = t_max
    if isinstance(space, (HyperbolicPlane, GluedPlane)):
        t_cap = min(t_max, 320.0)  # hyperboloid coordinates overflow beyond this
    t = t0 + space.norm(x)
    prev = None
    while t <= t_cap:
        z, w = space.eval(r1, t), space.eval(r2, t)
        val = (space.distance(z, x) + space.distance(w, x) - space.distance(z, w)) / 2
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
        t *= 2
    raise DivergenceError(f"Gromov product did not converge (last value {prev})")


def comparison_check(space, p, q, r, samples=64, rng=None):
    """Largest excess of d(a, b) over its Euclidean comparison across the triangle pqr.

    Samples pairs on two sides at a time. A CAT(0) space gives a value <= 0 up
    to rounding.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    verts = (p, q, r)
    dpq, dqr, drp = space.distance(p, q), space.distance(q, r), space.distance(r, p)
    # comparison triangle
    P = np.array([0.0, 0.0])
    Q = np.array([dpq, 0.0])
    cx = (dpq ** 2 + drp ** 2 - dqr ** 2) / (2 * dpq) if dpq > 0 else 0.0
    R = np.array([cx, math.sqrt(max(drp ** 2 - cx ** 2, 0.0))])
    flat = (P, Q, R)
    worst = -math.inf
    for _ in range(samples):
        i, j = rng.choice(3, size=2, replace=False)
        sides = []
        for k in (i, j):
            a, b = verts[k], verts[(k + 1) % 3]
            A, B = flat[k], flat[(k + 1) % 3]
            seg = space.segment(a, b)
            s = rng.uniform()
            sides.append((space.eval(seg, s * seg.tmax), A + s * (B - A)))
        (x, X), (y, Y) = sides
        worst = max(worst, space.distance(x, y) - float(np.hypot(*(X - Y))))
    return worst
