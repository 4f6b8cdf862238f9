"""A flat half-plane and a hyperbolic half-plane glued isometrically along a line.

Points are ``(sheet, a, b)``:
  sheet "F": flat coordinates (x, y), y > 0;
  sheet "H": Fermi coordinates (u, v), v > 0, relative to the gluing line;
  sheet "L": the gluing line, b = 0, a its arclength parameter.
The basepoint is the line point at 0. A path between the two open sheets crosses
the line once, so their distance is a convex 1-D minimization over the crossing.
"""

from __future__ import annotations

import math

import numpy as np

from ..fermi import crossing_time, exp_fermi, fermi_distance, fermi_to_hyperboloid, hyperboloid_to_fermi
from ..optimize import golden_min
from .base import BoundaryPoint, DomainError, Geodesic, ModelSpace, Point
from .euclid import EuclideanPlane
from .hyperbolic import HyperbolicPlane


def cross_distance(x, y, u, v, tol=1e-13):
    """Vectorized distance from flat (x, y) to hyperbolic (u, v); returns (distance, crossing)."""
    x, y, u, v = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, u, v)))

    def f(w):
        return np.hypot(x - w, y) + fermi_distance(w, 0.0, u, v)

    lo = np.minimum(x, u)
    hi = np.maximum(x, u)
    w, d = golden_min(f, lo, hi, tol=tol)
    return d, w


class GluedPlane(ModelSpace):
    tag = "glued"

    def __init__(self):
        self.flat = EuclideanPlane()
        self.hyp = HyperbolicPlane()

    def point(self, sheet, a, b):
        a, b = float(a), float(b)
        if sheet not in ("F", "H", "L") or b < 0:
            raise DomainError(f"bad glued point {(sheet, a, b)}")
        if b == 0 or sheet == "L":
            if b != 0:
                raise DomainError("line points have b = 0")
            return Point(self.tag, ("L", a, 0.0))
        return Point(self.tag, (sheet, a, b))

    def basepoint(self):
        return Point(self.tag, ("L", 0.0, 0.0))

    def distance(self, p, q):
        self.check(p, q)
        s1, a1, b1 = p.data
        s2, a2, b2 = q.data
        if "H" not in (s1, s2):
            return float(math.hypot(a1 - a2, b1 - b2))
        if "F" not in (s1, s2):
            return float(fermi_distance(a1, b1, a2, b2))
        if s1 == "H":
            a1, b1, a2, b2 = a2, b2, a1, b1
        return float(cross_distance(a1, b1, a2, b2)[0])

    # sheet conversions

    def _to_sheet(self, p, sheet):
        s, a, b = p.data
        if sheet == "F":
            return self.flat.point(a, b)
        return Point(self.hyp.tag, fermi_to_hyperboloid(a, b))

    def _from_sheet(self, q, sheet):
        if sheet == "F":
            x, y = q.data
            return self.point("F", x, max(y, 0.0) if y > 1e-13 else 0.0)
        u, v = hyperboloid_to_fermi(q.data)
        return self.point("H", float(u), float(v) if v > 1e-13 else 0.0)

    def _piece(self, p, q, sheet):
        X = self.flat if sheet == "F" else self.hyp
        return sheet, X.segment(self._to_sheet(p, sheet), self._to_sheet(q, sheet))

    def segment(self, p, q):
        self.check(p, q)
        s1, s2 = p.data[0], q.data[0]
        if s1 == s2 or "L" in (s1, s2):
            sheet = "H" if "H" in (s1, s2) else "F"
            pieces = [self._piece(p, q, sheet)]
        else:
            fp, hp = (p, q) if s1 == "F" else (q, p)
            _, w = cross_distance(fp.data[1], fp.data[2], hp.data[1], hp.data[2])
            c = self.point("L", float(w), 0.0)
            pieces = [self._piece(p, c, s1), self._piece(c, q, s2)]
        total = sum(g.tmax for _, g in pieces)
        return Geodesic(self.tag, "segment", 0.0, total, pieces)

    def ray(self, zeta, start=None):
        """Ray from the basepoint; angles in [0, pi] enter the hyperbolic sheet."""
        if start is not None and start.data != ("L", 0.0, 0.0):
            raise DomainError("glued rays start at the basepoint")
        a = zeta.coord
        if a <= math.pi:
            g = self.hyp.line(np.array([0.0, 0.0, 1.0]), np.array([math.cos(a), math.sin(a), 0.0]))
            g = Geodesic(self.hyp.tag, "ray", 0.0, math.inf, g.data)
            return Geodesic(self.tag, "ray", 0.0, math.inf, [("H", g)])
        g = self.flat.ray(self.flat.ideal(-a))
        return Geodesic(self.tag, "ray", 0.0, math.inf, [("F", g)])

    def sheet_geodesic(self, h2geo):
        """Wrap a hyperbolic-plane geodesic lying in the hyperbolic sheet."""
        return Geodesic(self.tag, h2geo.kind, h2geo.tmin, h2geo.tmax, [("H", h2geo)])

    def ideal(self, angle):
        return BoundaryPoint(self.tag, float(angle) % (2 * math.pi))

    def _eval(self, geo, t):
        start = 0.0 if math.isfinite(geo.tmin) else -math.inf
        for i, (sheet, g) in enumerate(geo.data):
            last = i == len(geo.data) - 1
            length = g.tmax - g.tmin
            if last or t <= start + length:
                X = self.flat if sheet == "F" else self.hyp
                local = t - start if math.isfinite(start) else t
                return self._from_sheet(X._eval(g, g.clamp(local + g.tmin if math.isfinite(start) else local)), sheet)
            start += length
        raise DomainError(t)

    def boundary_coord(self, p):
        s, a, b = p.data
        if s == "F":
            return (-math.atan2(b, a)) % (2 * math.pi)
        X = fermi_to_hyperboloid(a, b)
        return math.atan2(X[1], X[0]) % (2 * math.pi)

    def random_point_at(self, center, r, rng):
        s, a, b = center.data
        th = rng.uniform(0, 2 * math.pi)
        sh, aa, bb = exp_ell(np.array([SHEET[s]]), np.array([a]), np.array([b]), np.array([float(r)]), np.array([th]))
        return self.point("H" if sh[0] == 1 and bb[0] > 0 else "F", aa[0], bb[0])

    def pack(self, points):
        """Arrays (sheet code, a, b) for a list of points; line points count as hyperbolic."""
        sheet = np.array([SHEET[p.data[0]] for p in points])
        return sheet, np.array([p.data[1] for p in points]), np.array([p.data[2] for p in points])

    def unpack(self, sheet, a, b, i):
        if not (np.isfinite(a[i]) and np.isfinite(b[i])):
            return None
        return self.point("H" if sheet[i] == 1 else "F", a[i], b[i] if b[i] > 1e-13 else 0.0)

    def eval_arrays(self, geo, t):
        """Vectorized evaluation; hyperbolic pieces must stay within hyperboloid range."""
        t = np.asarray(t, dtype=float)
        sheet = np.zeros(t.shape, dtype=int)
        a = np.zeros(t.shape)
        b = np.zeros(t.shape)
        start = 0.0
        for i, (sh, g) in enumerate(geo.data):
            length = g.tmax - g.tmin
            last = i == len(geo.data) - 1
            if math.isfinite(geo.tmin):
                local = t - start + g.tmin
                mask = (t <= start + length) if not last else np.ones(t.shape, bool)
                if i > 0:
                    mask &= t > start
            else:
                local = t
                mask = np.ones(t.shape, bool)
            local = np.clip(local, g.tmin, g.tmax)
            if sh == "F":
                base, u = g.data[:2]
                xy = base[None, :] + local.reshape(-1)[:, None] * u[None, :]
                a = np.where(mask, xy[:, 0].reshape(t.shape), a)
                b = np.where(mask, np.maximum(xy[:, 1].reshape(t.shape), 0.0), b)
                sheet = np.where(mask, 0, sheet)
            else:
                P = h2_eval_arrays(g, local)
                uu, vv = hyperboloid_to_fermi(P)
                a = np.where(mask, uu, a)
                b = np.where(mask, np.maximum(vv, 0.0), b)
                sheet = np.where(mask, 1, sheet)
            start += length
        return sheet, a, b


SHEET = {"F": 0, "H": 1, "L": 1}


def h2_eval_arrays(g, t):
    a, w = g.data[:2]
    t = np.asarray(t, dtype=float)[..., None]
    if g.kind == "segment" and g.tmax > 1e-3:
        L = g.tmax
        return (np.sinh(L - t) * a + np.sinh(t) * g.data[2]) / math.sinh(L)
    return np.cosh(t) * a + np.sinh(t) * w


def distance_arrays(s1, a1, b1, s2, a2, b2):
    """Vectorized glued distance; sheet code 0 is flat, 1 hyperbolic (line points may be either)."""
    s1, a1, b1, s2, a2, b2 = np.broadcast_arrays(s1, a1, b1, s2, a2, b2)
    out = np.empty(a1.shape)
    ff = (s1 == 0) & (s2 == 0)
    hh = (s1 == 1) & (s2 == 1)
    out[ff] = np.hypot(a1[ff] - a2[ff], b1[ff] - b2[ff])
    out[hh] = fermi_distance(a1[hh], b1[hh], a2[hh], b2[hh])
    fh = (s1 == 0) & (s2 == 1)
    hf = (s1 == 1) & (s2 == 0)
    if fh.any():
        out[fh] = cross_distance(a1[fh], b1[fh], a2[fh], b2[fh])[0]
    if hf.any():
        out[hf] = cross_distance(a2[hf], b2[hf], a1[hf], b1[hf])[0]
    return out


def exp_ell(sheet, a, b, r, theta):
    """Vectorized geodesic shooting in the line chart.

    ``theta`` is the direction angle: the flat polar angle on the flat sheet, the
    Fermi angle (from the line direction toward the hyperbolic side) on the
    hyperbolic sheet. Points exactly on the line use theta in [0, pi) for the
    hyperbolic side and theta - pi for the flat side. Crossing the line keeps the
    angle with it, via the conserved quantity cosh(v) cos(angle to the line).
    """
    sheet, a, b, r, theta = np.broadcast_arrays(*(np.asarray(x) for x in (sheet, a, b, r, theta)))
    sheet = sheet.astype(int)
    a, b, r, theta = (np.asarray(x, dtype=float) for x in (a, b, r, theta))
    on_line = b <= 0
    go_h = (sheet == 1) & ~(on_line & (theta >= math.pi))
    go_f = ~go_h
    phi = np.where(on_line & go_f & (sheet == 1), theta - math.pi, theta)
    phi = np.where(on_line & go_f, np.mod(phi, math.pi), phi)
    out_s = np.empty(a.shape, dtype=int)
    out_a = np.empty(a.shape)
    out_b = np.empty(a.shape)

    # flat start
    dx, dy = np.cos(phi), np.sin(phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        hit = np.where(dy < 0, -b / dy, np.inf)
    stay = go_f & (hit >= r)
    out_s[stay] = 0
    out_a[stay] = (a + r * dx)[stay]
    out_b[stay] = np.maximum((b + r * dy)[stay], 0.0)
    cross = go_f & ~stay
    if cross.any():
        w = (a + hit * dx)[cross]
        u, v = exp_fermi(w, 0.0, (r - hit)[cross], np.arctan2(-dy, dx)[cross])
        out_s[cross] = 1
        out_a[cross] = u
        out_b[cross] = np.maximum(v, 0.0)

    # hyperbolic start
    if go_h.any():
        psi = theta[go_h]
        v0 = b[go_h]
        rr = r[go_h]
        t1 = np.where(v0 > 0, crossing_time(v0, psi), np.where(np.sin(psi) < 0, 0.0, np.inf))
        inside = t1 >= rr
        u_end, v_end = exp_fermi(a[go_h], v0, rr, psi)
        u1, _ = exp_fermi(a[go_h], v0, np.where(inside, 0.0, t1), psi)
        with np.errstate(over="ignore", invalid="ignore"):
            along = np.clip(np.cosh(v0) * np.cos(psi), -1.0, 1.0)
        normal = np.sqrt(np.maximum(0.0, 1 - along * along))
        rest = rr - np.where(inside, 0.0, t1)
        sa = np.where(inside, 1, 0)
        aa = np.where(inside, u_end, u1 + along * rest)
        bb = np.where(inside, np.maximum(v_end, 0.0), normal * rest)
        out_s[go_h] = sa
        out_a[go_h] = aa
        out_b[go_h] = bb
    return out_s, out_a, out_b
