"""Vectorized sampling frames: one per (space, target geodesic) family.

A frame draws points on spheres about a center, shoots geodesics from them,
and reports each point's foot parameter on the target and its distance to it.
Hyperbolic frames work in Fermi coordinates adapted to the target, which keeps
radii in the thousands finite; public ``Point`` objects are produced only for
witnesses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fermi import exp_fermi, fermi_distance, hyperboloid_to_fermi, initial_direction
from .optimize import convex_argmin
from .spaces import EuclideanPlane, GluedPlane, HyperbolicPlane, ProductSpace, RegularTree, UnsupportedSpace
from .spaces.glued import distance_arrays, exp_ell
from .spaces.hyperbolic import mink, renormalize

TWO_PI = 2 * math.pi


@dataclass
class Batch:
    """Frame-specific coordinates of n points (columns of ``coords``)."""

    coords: tuple

    def __len__(self):
        return len(self.coords[0])

    def take(self, idx):
        return Batch(tuple(c[idx] for c in self.coords))

    __getitem__ = take


class Frame:
    def __init__(self, space, target, center=None):
        self.space = space
        self.target = target
        self.center = space.basepoint() if center is None else center

    def sphere(self, R, n, rng) -> Batch:
        raise NotImplementedError

    def shoot(self, batch, r, rng) -> Batch:
        raise NotImplementedError

    def foot(self, batch):
        """(foot parameter, distance to target)."""
        raise NotImplementedError

    # frames that can aim define aim(batch, r, t): shoot distance r toward target(t)
    aim = None

    def to_point(self, batch, i):
        raise NotImplementedError


class EuclidFrame(Frame):
    def __init__(self, space, target, center=None):
        super().__init__(space, target, center)
        self.a, self.u = target.data

    def sphere(self, R, n, rng):
        th = rng.uniform(0, TWO_PI, n)
        c = self.center.data
        return Batch((c[0] + R * np.cos(th), c[1] + R * np.sin(th)))

    def shoot(self, batch, r, rng):
        th = rng.uniform(0, TWO_PI, len(batch))
        x, y = batch.coords
        return Batch((x + r * np.cos(th), y + r * np.sin(th)))

    def aim(self, batch, r, t):
        # closest point of the perpendicular at t lies straight along the target direction
        x, y = batch.coords
        t0, _ = self.foot(batch)
        sg = np.where(t >= t0, 1.0, -1.0)
        return Batch((x + sg * r * self.u[0], y + sg * r * self.u[1]))

    def foot(self, batch):
        x, y = batch.coords
        t = (x - self.a[0]) * self.u[0] + (y - self.a[1]) * self.u[1]
        t = np.clip(t, self.target.tmin, self.target.tmax)
        fx, fy = self.a[0] + t * self.u[0], self.a[1] + t * self.u[1]
        return t, np.hypot(x - fx, y - fy)

    def to_point(self, batch, i):
        return self.space.point(batch.coords[0][i], batch.coords[1][i])


class H2Frame(Frame):
    """Fermi coordinates (u, v) relative to the target's complete line."""

    def __init__(self, space, target, center=None):
        super().__init__(space, target, center)
        self.a, self.w = target.data[:2]
        self.n = space.normal(target)
        c = self.center.data
        self.v_c = math.asinh(mink(c, self.n))
        f = renormalize(c - mink(c, self.n) * self.n)
        self.u_c = math.asinh(mink(f, self.w))

    def sphere(self, R, n, rng):
        psi = rng.uniform(0, TWO_PI, n)
        return Batch(exp_fermi(self.u_c, self.v_c, R, psi))

    def shoot(self, batch, r, rng):
        psi = rng.uniform(0, TWO_PI, len(batch))
        return Batch(exp_fermi(batch.coords[0], batch.coords[1], r, psi))

    def aim(self, batch, r, t):
        # toward the closest point of the perpendicular at t: tanh h = tanh v / cosh(t - u)
        u, v = batch.coords
        du = np.where(np.abs(t - u) < 1e-9, 1e-9, t - u)
        h = np.arctanh(np.tanh(v) / np.cosh(du))
        return Batch(exp_fermi(u, v, r, direction=initial_direction(u, v, u + du, h)))

    def foot(self, batch):
        u, v = batch.coords
        t = np.clip(u, self.target.tmin, self.target.tmax)
        d = np.where(t == u, np.abs(v), fermi_distance(u, v, t, 0.0))
        return t, d

    def to_point(self, batch, i):
        u, v = batch.coords[0][i], batch.coords[1][i]
        try:
            x = math.cosh(v) * (math.cosh(u) * self.a + math.sinh(u) * self.w) + math.sinh(v) * self.n
            if not np.all(np.isfinite(x)):
                return None
            return self.space.point(x)
        except (ValueError, OverflowError):
            return None


class PointFrame(Frame):
    """Generic frame over public points, one projection per point (exact spaces)."""

    def sphere(self, R, n, rng):
        if isinstance(self.space, RegularTree) and self.center.data == ((), 0.0):
            pts = [self.space.sphere_point(R, rng) for _ in range(n)]
        else:
            pts = [self.space.random_point_at(self.center, R, rng) for _ in range(n)]
        return Batch((np.array(pts, dtype=object),))

    def shoot(self, batch, r, rng):
        r = np.broadcast_to(r, (len(batch),))
        pts = [self.space.random_point_at(p, float(ri), rng) for p, ri in zip(batch.coords[0], r)]
        return Batch((np.array(pts, dtype=object),))

    def foot(self, batch):
        pr = [self.space.project(p, self.target) for p in batch.coords[0]]
        return np.array([q.t for q in pr]), np.array([q.dist for q in pr])

    def to_point(self, batch, i):
        return batch.coords[0][i]


def _factor_profile(frame, batch):
    """Foot parameter and perpendicular distance on the factor's complete geodesic."""
    if isinstance(frame, EuclidFrame):
        x, y = batch.coords
        s = (x - frame.a[0]) * frame.u[0] + (y - frame.a[1]) * frame.u[1]
        fx, fy = frame.a[0] + s * frame.u[0], frame.a[1] + s * frame.u[1]
        return "e2", s, np.hypot(x - fx, y - fy)
    if isinstance(frame, H2Frame):
        return "h2", batch.coords[0], np.abs(batch.coords[1])
    t, d = frame.foot(batch)
    return "tree", t, d


def _factor_dist(kind, s_star, perp, s):
    if kind == "e2":
        return np.hypot(perp, s - s_star)
    if kind == "h2":
        return fermi_distance(s, 0.0, s_star, perp)
    return perp + np.abs(s - s_star)


class ProductFrame(Frame):
    """Product of factor frames; the target is ``combine(g1, g2, angle)`` of rays or lines."""

    def __init__(self, space, target, center=None):
        super().__init__(space, target, center)
        g1, g2, self.c1, self.c2 = target.data
        X, Y = space.factors
        c = self.center.data
        self.f1 = make_frame(X, g1, c[0])
        self.f2 = make_frame(Y, g2, c[1])

    def sphere(self, R, n, rng):
        a = rng.uniform(0, math.pi / 2, n)
        return self._pair(self.f1.sphere(0.0, n, rng), self.f2.sphere(0.0, n, rng), R * np.cos(a), R * np.sin(a), rng)

    def _pair(self, b1, b2, r1, r2, rng):
        return Batch((self.f1.shoot(b1, r1, rng), self.f2.shoot(b2, r2, rng)))

    def shoot(self, batch, r, rng):
        a = rng.uniform(0, math.pi / 2, len(batch))
        return self._pair(batch.coords[0], batch.coords[1], r * np.cos(a), r * np.sin(a), rng)

    def foot(self, batch):
        k1, s1, p1 = _factor_profile(self.f1, batch.coords[0])
        k2, s2, p2 = _factor_profile(self.f2, batch.coords[1])

        def dist(t):
            return np.hypot(_factor_dist(k1, s1, p1, self.c1 * t), _factor_dist(k2, s2, p2, self.c2 * t))

        lo = np.full(len(s1), self.target.tmin)
        scale = np.abs(s1) + np.abs(s2) + p1 + p2 + 1
        hi = np.full(len(s1), 0.0) + 2 * scale
        if not math.isfinite(self.target.tmin):
            lo = -2 * scale
        t, d = convex_argmin(dist, lo, hi)
        return t, d

    def to_point(self, batch, i):
        p1 = self.f1.to_point(batch.coords[0], i)
        p2 = self.f2.to_point(batch.coords[1], i)
        if p1 is None or p2 is None:
            return None
        return self.space.point(p1, p2)


def _glued_sphere(R, n, rng, psi_offset):
    """Uniform direction at the basepoint: total angle 2 pi, half per sheet."""
    th = rng.uniform(0, TWO_PI, n)
    hyp = th < math.pi
    sheet = hyp.astype(int)
    c1 = np.empty(n)
    c2 = np.empty(n)
    c1[hyp], c2[hyp] = exp_fermi(0.0, 0.0, R, th[hyp] + psi_offset)
    phi = th[~hyp] - math.pi
    c1[~hyp], c2[~hyp] = R * np.cos(phi), R * np.sin(phi)
    return Batch((sheet, c1, c2))


class GluedLineFrame(Frame):
    """Line chart (Fermi coordinates along the gluing line), exact feet.

    Targets: the gluing line, the ray along it, and the flat ray perpendicular to it.
    """

    def __init__(self, space, target, center=None, mode=None):
        super().__init__(space, target, center)
        self.mode = mode or glued_mode(target)

    def sphere(self, R, n, rng):
        return _glued_sphere(R, n, rng, 0.0)

    def shoot(self, batch, r, rng):
        sheet, a, b = batch.coords
        th = rng.uniform(0, TWO_PI, len(sheet))
        return Batch(exp_ell(sheet, a, b, r, th))

    def foot(self, batch):
        sheet, a, b = batch.coords
        flat = sheet == 0
        if self.mode == "line":
            return a.copy(), b.copy()
        if self.mode == "line_ray":
            t = np.maximum(a, 0.0)
            d = np.where(a >= 0, b, np.where(flat, np.hypot(a, b), fermi_distance(a, b, 0.0, 0.0)))
            return t, d
        # flat ray perpendicular to the line: hyperbolic points all project to the basepoint
        t = np.where(flat, b, 0.0)
        d = np.where(flat, np.abs(a), fermi_distance(a, b, 0.0, 0.0))
        return t, d

    def to_point(self, batch, i):
        return self.space.unpack(*batch.coords, i)


class GluedPerpFrame(Frame):
    """Chart adapted to the hyperbolic ray leaving the basepoint perpendicular to the line.

    Hyperbolic points carry Fermi coordinates (U, V) relative to that ray's line:
    the sheet is U >= 0 and the gluing line is U = 0 with parameter V. Flat points
    keep (a, b). Every flat point projects to the basepoint.
    """

    def sphere(self, R, n, rng):
        return _glued_sphere(R, n, rng, -math.pi / 2)

    def shoot(self, batch, r, rng):
        sheet, c1, c2 = batch.coords
        n = len(sheet)
        r = np.broadcast_to(np.asarray(r, dtype=float), (n,))
        th = rng.uniform(0, TWO_PI, n)
        out_s = sheet.copy()
        o1 = np.empty(n)
        o2 = np.empty(n)
        hyp = sheet == 1
        U, V = exp_fermi(c1[hyp], c2[hyp], r[hyp], th[hyp])
        left = U < 0
        # crossed into the flat sheet; its flat coordinates are not tracked
        o1[hyp] = np.where(left, np.nan, U)
        o2[hyp] = np.where(left, np.nan, V)
        out_s[np.flatnonzero(hyp)[left]] = 0
        fl = ~hyp
        dx, dy = np.cos(th[fl]), np.sin(th[fl])
        a, b, rr = c1[fl], c2[fl], r[fl]
        with np.errstate(divide="ignore", invalid="ignore"):
            hit = np.where(dy < 0, -b / dy, np.inf)
        stay = hit >= rr
        Ue, Ve = exp_fermi(0.0, a + np.where(stay, 0, hit) * dx, np.where(stay, 0, rr - hit), np.arctan2(dx, -dy))
        o1[fl] = np.where(stay, a + rr * dx, np.maximum(Ue, 0.0))
        o2[fl] = np.where(stay, np.maximum(b + rr * dy, 0.0), Ve)
        out_s[fl] = np.where(stay, 0, 1)
        return Batch((out_s, o1, o2))

    def foot(self, batch):
        sheet, c1, c2 = batch.coords
        hyp = sheet == 1
        t = np.where(hyp, np.maximum(c1, 0.0), 0.0)
        d = np.where(hyp, np.abs(c2), np.hypot(c1, c2))
        return t, d

    def to_point(self, batch, i):
        sheet, c1, c2 = batch.coords
        if not (np.isfinite(c1[i]) and np.isfinite(c2[i])):
            return None
        if sheet[i] == 0:
            return self.space.point("F", c1[i], c2[i]) if c2[i] > 0 else self.space.point("L", c1[i], 0.0)
        U, V = c1[i], c2[i]
        try:
            X = np.array([math.sinh(V), math.cosh(V) * math.sinh(U), math.cosh(V) * math.cosh(U)])
        except OverflowError:
            return None
        if not np.all(np.isfinite(X)):
            return None
        u, v = hyperboloid_to_fermi(X)
        return self.space.point("H", float(u), max(float(v), 0.0)) if v > 1e-13 else self.space.point("L", float(u), 0.0)


class GluedBatchFrame(Frame):
    """Any glued geodesic in the line chart, feet by vectorized 1-D search (moderate radii)."""

    def sphere(self, R, n, rng):
        s, a, b = self.space.pack([self.center] * n)
        return self.shoot(Batch((s, a, b)), np.full(n, float(R)), rng)

    def shoot(self, batch, r, rng):
        sheet, a, b = batch.coords
        th = rng.uniform(0, TWO_PI, len(sheet))
        return Batch(exp_ell(sheet, a, b, r, th))

    def foot(self, batch):
        sheet, a, b = batch.coords
        geo = self.target

        def dist(t):
            return distance_arrays(sheet, a, b, *self.space.eval_arrays(geo, geo_clip(geo, t)))

        t0 = np.full(len(sheet), geo.clamp(0.0))
        d0 = dist(t0)
        lo = np.maximum(t0 - 2 * d0 - 2, geo.tmin)
        hi = np.minimum(t0 + 2 * d0 + 2, geo.tmax)
        return convex_argmin(dist, lo, hi)

    def to_point(self, batch, i):
        return self.space.unpack(*batch.coords, i)


def geo_clip(geo, t):
    return np.clip(t, geo.tmin, geo.tmax)


def glued_mode(target):
    """Classify glued targets that have an exact chart; None otherwise."""
    pieces = target.data
    if len(pieces) != 1 or target.kind == "segment":
        return None
    sheet, g = pieces[0]
    base, direction = g.data[:2]
    if sheet == "F":
        if np.allclose(base, 0) and np.allclose(direction, [0.0, 1.0]) and target.kind == "ray":
            return "flat_perp_ray"
        return None
    if not np.allclose(base, [0.0, 0.0, 1.0]):
        return None
    if np.allclose(direction, [0.0, 1.0, 0.0]) and target.kind == "ray":
        return "perp_ray"
    if np.allclose(direction, [1.0, 0.0, 0.0]):
        return "line" if target.kind == "line" else "line_ray"
    return None


def make_frame(space, target, center=None) -> Frame:
    if isinstance(space, EuclideanPlane):
        return EuclidFrame(space, target, center)
    if isinstance(space, HyperbolicPlane):
        return H2Frame(space, target, center)
    if isinstance(space, RegularTree):
        return PointFrame(space, target, center)
    if isinstance(space, ProductSpace):
        if target.kind == "segment":
            return PointFrame(space, target, center)
        return ProductFrame(space, target, center)
    if isinstance(space, GluedPlane):
        mode = glued_mode(target)
        at_base = center is None or center.data == ("L", 0.0, 0.0)
        if mode == "perp_ray" and at_base:
            return GluedPerpFrame(space, target, center)
        if mode is not None and at_base:
            return GluedLineFrame(space, target, center, mode)
        return GluedBatchFrame(space, target, center)
    raise UnsupportedSpace(space.tag)
