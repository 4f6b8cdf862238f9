"""Thick time, frequently contracting windows and projection growth along rays.

A ray is sampled on a grid of step ``dt``. A window ``tau[s - L, s + L]`` is
*thick* when every sample in it lies within ``C`` of one member of a reference
library of certified contracting geodesics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kappa as K
from .contraction import PreconditionError, _seg_dist, contraction_search
from .fermi import asinh_exp, exp_fermi, fermi_distance, lcosh, lsinh
from .frames import glued_mode
from .optimize import convex_argmin
from .spaces import EuclideanPlane, GluedPlane, HyperbolicPlane, ProductSpace, RegularTree

DEFAULT_RADII = (50, 100, 200, 400, 800)


def default_step(L):
    return min(0.1, L / 10)


class _Fermi:
    """Minimal chart object for ``_seg_dist``."""

    hyp = True
    dist = staticmethod(fermi_distance)


FERMI = _Fermi()


# ray samples in a chart


def _glued_tau_chart(space, ray, ts):
    """Sheet code and coordinates of glued ray samples; hyperbolic points in the chart of
    the line through the perpendicular sheet ray (U along it, gluing line at U = 0)."""
    ts = np.asarray(ts, dtype=float)
    mode = glued_mode(ray)
    n = len(ts)
    if mode == "perp_ray":
        return np.ones(n, int), ts.copy(), np.zeros(n)
    if mode in ("line", "line_ray"):
        return np.ones(n, int), np.zeros(n), ts.copy()
    if mode == "flat_perp_ray":
        return np.zeros(n, int), np.zeros(n), ts.copy()
    sheet, a, b = space.eval_arrays(ray, ts)
    # line chart (u, v) to tau chart: sinh V = cosh v sinh u, sinh U = sinh v / cosh V
    with np.errstate(divide="ignore"):
        lV = lcosh(b) + lsinh(np.abs(a))
        V = np.sign(a) * asinh_exp(lV)
        U = asinh_exp(lsinh(np.abs(b)) - lcosh(V))
    hyp = sheet == 1
    return sheet, np.where(hyp, U, a), np.where(hyp, V, b)


@dataclass
class ReferenceLibrary:
    """Certified N-contracting reference geodesics for one space.

    ``kind`` is "closest_fit" (every geodesic of the space qualifies, so a window
    is tested against the geodesic through its endpoints), "members" (an explicit
    list, given by endpoints in a chart) or "empty".
    """

    space: object
    kind: str
    N: float
    members: list = field(default_factory=list)
    note: str = ""

    @property
    def size(self):
        """Member count; None for closest fit (unbounded family)."""
        return len(self.members) if self.kind == "members" else (0 if self.kind == "empty" else None)

    @property
    def empty(self):
        return self.kind == "empty" or (self.kind == "members" and not self.members)


def _endpoint_gaps(lib, ray, a, b):
    """d(tau(a), tau(b)) for arrays of parameters, in a chart when one exists."""
    space = lib.space
    if isinstance(space, HyperbolicPlane):
        # the ray is u -> (u, 0) in the Fermi chart of its own line
        return fermi_distance(a, 0.0, b, 0.0)
    return np.array([space.distance(space.eval(ray, x), space.eval(ray, y)) for x, y in zip(a, b)])


def _fit_samples(lib, ray, s, L, dt):
    """Max distance from the window samples to the geodesic through its endpoints."""
    space = lib.space
    seg = space.segment(space.eval(ray, s - L), space.eval(ray, s + L))
    ts = np.arange(s - L, s + L + dt / 2, dt)
    return max(space.project(space.eval(ray, t), seg).dist for t in ts)


def _member_distances(lib, ray, ts, C):
    """Distances from ray samples to each designated member, shape (members, samples).

    Members live in the hyperbolic sheet and are stored by endpoints in the
    perpendicular-ray chart; that sheet is convex, so hyperbolic points use the
    hyperbolic segment distance. Flat points farther than C from the gluing line
    are reported as inf (any path to the sheet is longer than C).
    """
    sheet, a, b = _glued_tau_chart(lib.space, ray, ts)
    out = np.full((len(lib.members), len(ts)), np.inf)
    hyp = sheet == 1
    near = (sheet == 0) & (b <= C)
    for m, (U1, V1, U2, V2) in enumerate(lib.members):
        if hyp.any():
            out[m, hyp] = _seg_dist(FERMI, a[hyp], b[hyp], U1, V1, U2, V2)
        if near.any():
            x, y = a[near], b[near]

            def f(w):
                return np.hypot(x - w, y) + _seg_dist(FERMI, np.zeros_like(w), w, U1, V1, U2, V2)

            _, d = convex_argmin(f, x - C, x + C, h=1e-6, tol=1e-10)
            out[m, near] = d
    return out


def thick_windows(lib, ray, T, L, C, dt=None):
    """Grid of window centers in [L, T - L] and whether each window is C-close to one member."""
    dt = default_step(L) if dt is None else dt
    w = int(round(L / dt))
    M = int(math.floor(T / dt + 1e-9))
    centers = np.arange(w, M - w + 1) * dt
    if len(centers) == 0 or lib.empty:
        return centers, np.zeros(len(centers), bool)
    if lib.kind == "closest_fit":
        gaps = _endpoint_gaps(lib, ray, centers - L, centers + L)
        # unique geodesics: a window of length 2L spanning 2L is the fitted geodesic itself
        ok = gaps >= 2 * L - 1e-9
        for i in np.flatnonzero(~ok):
            ok[i] = _fit_samples(lib, ray, centers[i], L, dt) <= C
        return centers, ok
    ts = np.arange(M + 1) * dt
    close = _member_distances(lib, ray, ts, C) <= C
    cs = np.concatenate([np.zeros((close.shape[0], 1), int), np.cumsum(close, axis=1)], axis=1)
    k = np.arange(w, M - w + 1)
    counts = cs[:, k + w + 1] - cs[:, k - w]
    return centers, np.any(counts == 2 * w + 1, axis=0)


@dataclass
class ThickProfile:
    L: float
    C: float
    dt: float
    T: list
    thick: list

    @property
    def fraction(self):
        return [h / t for h, t in zip(self.thick, self.T)]

    def rows(self):
        return [(t, h, h / t) for t, h in zip(self.T, self.thick)]


def thick_time(lib, ray, T, L, C, dt=None):
    """Measure of centers t in [0, T] whose window tau[t - L, t + L] is thick (0 for an empty library)."""
    if not 2 * L < T:
        raise ValueError("need 2L < T")
    return thick_profile(lib, ray, [T], L, C, dt).thick[0]


def thick_profile(lib, ray, Ts, L, C, dt=None):
    dt = default_step(L) if dt is None else dt
    Ts = sorted(float(t) for t in Ts)
    centers, ok = thick_windows(lib, ray, Ts[-1], L, C, dt)
    cum = np.concatenate([[0], np.cumsum(ok)])
    thick = []
    for T in Ts:
        n = int(np.searchsorted(centers, T - L + dt / 2))
        thick.append(float(cum[n] * dt))
    return ThickProfile(float(L), float(C), float(dt), Ts, thick)


def thick_fraction_limit(profile, tol=0.02):
    """Last fraction if it oscillates by less than ``tol`` over the top octave, else None."""
    T = np.asarray(profile.T, dtype=float)
    fr = np.asarray(profile.fraction)
    if len(T) < 10 or T[-1] < 8 * T[0]:
        raise ValueError("need at least 10 values of T spanning a factor of 8")
    top = fr[T >= T[-1] / 2]
    if np.ptp(top) < tol:
        return float(fr[-1])
    return None


@dataclass
class WindowResult:
    R: float
    passed: bool
    witness: tuple | None = None  # failing window [t, t + theta R]

    def to_json(self):
        return {"R": self.R, "passed": self.passed, "witness": None if self.witness is None else list(self.witness)}


def frequent_window_check(lib, ray, N, C, L, theta, radii=DEFAULT_RADII, dt=None):
    """For each R: every t in [0, (1 - theta) R] admits s with [s - L, s + L] in [t, t + theta R] thick."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if lib.N > N:
        raise PreconditionError(f"library certified at {lib.N:.4g} > N = {N}")
    dt = default_step(L) if dt is None else dt
    centers, ok = thick_windows(lib, ray, max(radii), L, C, dt)
    cum = np.concatenate([[0], np.cumsum(ok)])
    out = []
    for R in radii:
        ts = np.arange(0, (1 - theta) * R + dt / 2, dt)
        lo = np.searchsorted(centers, ts + L - dt / 2)
        hi = np.searchsorted(centers, ts + theta * R - L + dt / 2)
        found = cum[np.maximum(hi, lo)] - cum[lo] > 0
        if found.all():
            out.append(WindowResult(float(R), True))
        else:
            t = float(ts[np.argmin(found)])
            out.append(WindowResult(float(R), False, (t, t + theta * R)))
    return out


# libraries


def _tau_to_glued(space, U, V):
    """Point of the hyperbolic sheet from perpendicular-ray chart coordinates (moderate range)."""
    from .fermi import hyperboloid_to_fermi

    X = np.array([math.sinh(V), math.cosh(V) * math.sinh(U), math.cosh(V) * math.cosh(U)])
    u, v = hyperboloid_to_fermi(X)
    return space.point("H", float(u), float(v)) if v > 1e-13 else space.point("L", float(u), 0.0)


def certify(space, geo, center=None, radii=(2, 4, 8), trials=400, seed=0):
    """Contraction constant of a reference geodesic from a moderate-radius sweep."""
    from .contraction import AdmissiblePairSampler

    sampler = AdmissiblePairSampler(space, geo, radii, trials, seed, center=center)
    return contraction_search(space, geo, sampler=sampler).N_estimate


def _back_to_line(s0, v0, r_max):
    """Arclength (backward from the foot) where a member reaches the gluing line U = 0."""
    U, _ = exp_fermi(s0, v0, r_max, math.pi)
    if U >= 0:
        return r_max
    lo, hi = 0.0, r_max
    for _ in range(80):
        mid = (lo + hi) / 2
        if exp_fermi(s0, v0, mid, math.pi)[0] >= 0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class AlternatingDesign:
    m0: float
    period: float
    L: float
    C: float
    hug: float  # length of the stretch each member keeps within C
    v0: float  # member's distance to the ray at its closest point


def alternating_library(space, m0=0.5, period=20.0, L=5.0, C=2.0, horizon=1000.0, margin=2.0, seed=0):
    """The perpendicular hyperbolic-sheet ray with a designated library that is close to it
    during a fraction ``m0`` of every period.

    Member j is a hyperbolic segment ultraparallel to the ray, with common
    perpendicular of length v0 at s0 = j p + h / 2, where h = m0 p + 2L. Its distance
    to tau(s) is asinh(sinh v0 cosh(s - s0)), so it stays within C exactly on
    [s0 - h/2, s0 + h/2]; windows of half-length L fit in that stretch during m0 p
    of each period. Members extend ``margin`` past the stretch and stop at the
    gluing line.
    """
    if not isinstance(space, GluedPlane):
        raise TypeError("alternating construction lives in the glued plane")
    h = m0 * period + 2 * L
    if h > period:
        raise ValueError("m0 p + 2L must not exceed the period")
    v0 = math.asinh(math.sinh(C * (1 - 1e-6)) / math.cosh(h / 2))
    members = []
    for j in range(int(math.ceil(horizon / period)) + 1):
        s0 = j * period + h / 2
        back = _back_to_line(s0, v0, h / 2 + margin)
        U1, V1 = exp_fermi(s0, v0, back, math.pi)
        U2, V2 = exp_fermi(s0, v0, h / 2 + margin, 0.0)
        members.append((float(max(U1, 0.0)), float(V1), float(U2), float(V2)))
    # certify the clipped first member and one interior member; later members are
    # congruent to the interior one and farther from the flat sheet
    N = 0.0
    for U1, V1, U2, V2 in members[:2]:
        p, q = _tau_to_glued(space, U1, V1), _tau_to_glued(space, U2, V2)
        geo = space.segment(p, q)
        N = max(N, certify(space, geo, center=_tau_to_glued(space, (U1 + U2) / 2, (V1 + V2) / 2), seed=seed))
    ray = space.ray(space.ideal(math.pi / 2))
    lib = ReferenceLibrary(space, "members", N, members, note="alternating designated members")
    return ray, lib, AlternatingDesign(m0, period, L, C, h, v0)


def reference_library(space, seed=0, **design):
    """Default library: closest fit in H2 and trees, designated members in the glued plane,
    empty where no geodesic is contracting (flat plane, products)."""
    if isinstance(space, HyperbolicPlane):
        line = space.line(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
        N = contraction_search(space, line, radii=(5, 10, 20), trials=1000, seed=seed).N_estimate
        return ReferenceLibrary(space, "closest_fit", N, note="every geodesic")
    if isinstance(space, RegularTree):
        N = contraction_search(space, space.axis((1,)), radii=(5, 10), trials=200, seed=seed).N_estimate
        return ReferenceLibrary(space, "closest_fit", N, note="every geodesic")
    if isinstance(space, GluedPlane):
        return alternating_library(space, seed=seed, **design)[1]
    if isinstance(space, (EuclideanPlane, ProductSpace)):
        return ReferenceLibrary(space, "empty", 0.0, note="no contracting geodesics")
    raise TypeError(space.tag)


# projection growth


@dataclass
class ProjectionGrowthProfile:
    radii: list
    kappa_hat: list
    theta_hat: list
    selection: object

    @property
    def verdict(self):
        return "sublinear" if self.selection.index is not None else "not sublinear"

    def to_json(self):
        sel = self.selection
        return {
            "radii": self.radii,
            "kappa_hat": self.kappa_hat,
            "theta_hat": self.theta_hat,
            "verdict": self.verdict,
            "fit": sel.label,
            "c": sel.constant,
            "tail_exponent": sel.exponent,
        }


def projection_growth(space, ray, radii=DEFAULT_RADII, trials=1000, seed=0, workers=1, sampler=None, family=None):
    """Running max of sampled projection diameters about the basepoint, and its sublinear fit."""
    rep = contraction_search(space, ray, sampler=sampler, radii=radii, trials=trials, seed=seed, workers=workers)
    kap = np.maximum.accumulate(np.asarray(rep.per_radius, dtype=float)).tolist()
    theta = [k / R for k, R in zip(kap, rep.radii)]
    return ProjectionGrowthProfile(list(rep.radii), kap, theta, K.select_dominating(rep.radii, kap, family))


# example rays


@dataclass
class CorpusRay:
    name: str
    space: object
    ray: object


def ray_corpus():
    """Rays from the basepoint spanning every model space."""
    E, H, G = EuclideanPlane(), HyperbolicPlane(), GluedPlane()
    T2, T3 = RegularTree(2), RegularTree(3)
    out = [
        CorpusRay("e2:axis", E, E.ray(E.ideal(0.0))),
        CorpusRay("e2:diagonal", E, E.ray(E.ideal(math.pi / 4))),
        CorpusRay("h2:0.3", H, H.ray(H.ideal(0.3))),
        CorpusRay("h2:2.0", H, H.ray(H.ideal(2.0))),
        CorpusRay("tree2:a", T2, T2.ray(T2.ideal((), (1,)))),
        CorpusRay("tree2:ab", T2, T2.ray(T2.ideal((), (1, 2)))),
        CorpusRay("tree3:cB", T3, T3.ray(T3.ideal((3,), (1, -2)))),
    ]
    for a, b in ((T2, E), (E, E), (H, E)):
        P = ProductSpace(a, b)
        g1 = a.ray(a.ideal((), (1,))) if isinstance(a, RegularTree) else a.ray(a.ideal(0.0))
        out.append(CorpusRay(f"{P.tag}:diag", P, P.combine(g1, b.ray(b.ideal(0.0)), math.pi / 4)))
    out += [
        CorpusRay("glued:alternating", G, G.ray(G.ideal(math.pi / 2))),
        CorpusRay("glued:flat", G, G.ray(G.ideal(3 * math.pi / 2))),
        CorpusRay("glued:line", G, G.ray(G.ideal(0.0))),
    ]
    return out
