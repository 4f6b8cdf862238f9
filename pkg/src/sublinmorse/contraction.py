"""Contraction constants, kappa-contraction profiles, kappa-neighborhoods and Morse gauges.

All estimates are running maxima over sampled configurations, so they are
monotone lower bounds on the sup-style quantities they track.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kappa as K
from .frames import Batch, make_frame
from .fermi import asinh_exp, exp_fermi, fermi_distance, initial_angle, lsinh
from .optimize import convex_argmin
from .spaces import EuclideanPlane, HyperbolicPlane, Point

EPS_ADM = 1e-3
CHUNK = 250
AIM_SPREAD = 1.5


class PreconditionError(ValueError):
    pass


def trial_rng(seed, *keys):
    """Per-task generator; depends only on (seed, keys), never on scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


@dataclass
class PairChunk:
    radius: float
    chunk: int
    best: float
    x: Point | None
    y: Point | None
    count: int
    admissible: int


class AdmissiblePairSampler:
    """Pairs (x, y) with x on the sphere of radius R about the center and d(x, y) <= (1 - eps) d(x, Z).

    Half of the y's sit on the boundary of the admissible ball, half are uniform
    (by radius) inside it; sup-type estimates need the boundary.
    """

    def __init__(self, space, target, radii, trials=1000, seed=0, eps=EPS_ADM, center=None, workers=1):
        self.space = space
        self.target = target
        self.radii = [float(r) for r in radii]
        self.trials = int(trials)
        self.seed = int(seed)
        self.eps = float(eps)
        self.workers = max(1, int(workers))
        self.frame = make_frame(space, target, center)

    def tasks(self):
        out = []
        for i, R in enumerate(self.radii):
            for c in range(0, self.trials, CHUNK):
                out.append((i, R, c // CHUNK, min(CHUNK, self.trials - c)))
        return out

    def draw(self, r_index, R, chunk, n):
        """Return (x batch, y batch, foot_x, foot_y, d(x, Z), d(x, y))."""
        rng = trial_rng(self.seed, r_index, chunk)
        f = self.frame
        x = f.sphere(R, n, rng)
        tx, dx = f.foot(x)
        u = rng.uniform(size=n)
        frac = np.where(np.arange(n) % 2 == 0, 1.0, np.sqrt(u))
        r = (1 - self.eps) * dx * frac
        y = f.shoot(x, r, rng)
        if f.aim is not None:
            # every fourth pair aims a boundary shot at a perpendicular near x's foot;
            # uniform directions almost never find the extreme point at large R
            k = np.arange(n) % 4 == 2
            off = rng.uniform(-AIM_SPREAD, AIM_SPREAD, n)
            aimed = f.aim(x, r, tx + off)
            y = Batch(tuple(np.where(k, a, b) for a, b in zip(aimed.coords, y.coords)))
        ty, _ = f.foot(y)
        return x, y, tx, ty, dx, r

    def run_chunk(self, task):
        i, R, c, n = task
        x, y, tx, ty, dx, r = self.draw(i, R, c, n)
        gap = np.abs(tx - ty)
        ok = (r < dx) & (dx > 0)
        gap = np.where(ok, gap, -np.inf)
        gap = np.where(np.isnan(gap), -np.inf, gap)
        j = int(np.argmax(gap))
        best = float(gap[j]) if np.isfinite(gap[j]) else 0.0
        return PairChunk(R, c, best, self.frame.to_point(x, j), self.frame.to_point(y, j), n, int(ok.sum()))

    def run(self):
        tasks = self.tasks()
        if not tasks:
            raise ValueError("empty radius schedule")
        if self.workers == 1:
            return [self.run_chunk(t) for t in tasks]
        with ThreadPoolExecutor(self.workers) as ex:
            return list(ex.map(self.run_chunk, tasks))


@dataclass
class ContractionReport:
    N_estimate: float
    witness: tuple
    witness_radius: float
    trials: int
    radii: list
    per_radius: list
    N_query: float = math.inf
    admissible_fraction: float = 1.0

    @property
    def passed(self):
        return self.N_estimate <= self.N_query

    def to_json(self):
        x, y = self.witness
        return {
            "N_estimate": self.N_estimate,
            "N_query": None if math.isinf(self.N_query) else self.N_query,
            "passed": self.passed,
            "trials": self.trials,
            "radii": self.radii,
            "per_radius": self.per_radius,
            "witness_radius": self.witness_radius,
            "witness": [None if x is None else x.to_json(), None if y is None else y.to_json()],
            "admissible_fraction": self.admissible_fraction,
        }


def _per_radius(chunks, radii):
    best = {}
    for ch in chunks:
        cur = best.get(ch.radius)
        if cur is None or ch.best > cur.best:
            best[ch.radius] = ch
    return [best[R] for R in radii]


def contraction_search(space, Z, N=math.inf, sampler=None, radii=(5, 10, 20, 50), trials=1000, seed=0, workers=1):
    """Largest sampled d(x_Z, y_Z) over admissible pairs; fails if it exceeds ``N``."""
    if sampler is None:
        sampler = AdmissiblePairSampler(space, Z, radii, trials, seed, workers=workers)
    chunks = sampler.run()
    per = _per_radius(chunks, sampler.radii)
    top = max(per, key=lambda c: c.best)  # ties keep the smaller radius
    total = sum(c.count for c in chunks)
    return ContractionReport(
        N_estimate=top.best,
        witness=(top.x, top.y),
        witness_radius=top.radius,
        trials=sampler.trials,
        radii=sampler.radii,
        per_radius=[c.best for c in per],
        N_query=float(N),
        admissible_fraction=sum(c.admissible for c in chunks) / total,
    )


@dataclass
class KappaProfile:
    radii: list
    P: list
    raw: list
    selection: K.Selection | None = None

    @property
    def sublinear(self):
        return self.selection is not None and self.selection.index is not None

    def to_json(self):
        sel = self.selection
        return {
            "radii": self.radii,
            "P": self.P,
            "fit": {"index": sel.index, "label": sel.label, "c_Z": sel.constant} if self.sublinear else None,
        }


def kappa_profile(space, Z, sampler=None, radii=(10, 20, 40, 80, 160), trials=1000, seed=0, workers=1, family=None):
    """Running maxima P(R) over pairs with ||x|| <= R, fitted by the dominating family."""
    if sampler is None:
        sampler = AdmissiblePairSampler(space, Z, radii, trials, seed, workers=workers)
    per = _per_radius(sampler.run(), sampler.radii)
    raw = [c.best for c in per]
    P = list(np.maximum.accumulate(raw))
    sel = K.select_dominating(np.array(sampler.radii), np.array(P), family)
    return KappaProfile(sampler.radii, [float(p) for p in P], raw, sel)


def in_kappa_neighborhood(space, x, Z, kap, n):
    """d(x, Z) <= n * kappa(||x||)."""
    d = space.project(x, Z).dist
    return bool(d <= n * K.evaluate(kap, space.norm(x)) + 1e-12)


# Morse gauges


class _Chart:
    """Coordinates (u, v) adapted to a complete geodesic Z: u along Z, v signed distance.

    Flat for E2, Fermi for H2; the latter stays accurate far from the basepoint.
    """

    def __init__(self, space, Z):
        self.hyp = isinstance(space, HyperbolicPlane)
        if self.hyp:
            from .frames import H2Frame

            f = H2Frame(space, Z)
            self.origin = (f.u_c, f.v_c)
        elif isinstance(space, EuclideanPlane):
            a, u = Z.data
            self.origin = (-float(np.dot(a, u)), -float(np.dot(a, [-u[1], u[0]])))
        else:
            raise PreconditionError("detours need a plane (E2 or H2)")

    def dist(self, u1, v1, u2, v2):
        if self.hyp:
            return fermi_distance(u1, v1, u2, v2)
        return np.hypot(u1 - u2, v1 - v2)

    def path(self, P, Q, ts):
        """Points at arclength ``ts`` along the geodesic from P to Q."""
        (u1, v1), (u2, v2) = P, Q
        L = float(self.dist(u1, v1, u2, v2))
        if L == 0:
            return np.full(len(ts), u1), np.full(len(ts), v1)
        if not self.hyp:
            f = ts / L
            return u1 + f * (u2 - u1), v1 + f * (v2 - v1)
        psi = float(initial_angle(u1, v1, u2, v2))
        return exp_fermi(u1, v1, ts, psi)


def _detour_vertices(origin, R, k, width, height):
    u0 = origin[0]
    verts = [(u0 - R, 0.0)]
    cell = 2 * R / k
    for i in range(k):
        s = u0 - R + i * cell + (cell - width) / 2
        verts += [(s, 0.0), (s, height), (s + width, height), (s + width, 0.0)]
    verts.append((u0 + R, 0.0))
    return verts


def _sample_path(chart, verts, m):
    lengths = np.array([float(chart.dist(*a, *b)) for a, b in zip(verts, verts[1:])])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    ts = np.linspace(0, cum[-1], m)
    us, vs = np.empty(m), np.empty(m)
    seg = np.clip(np.searchsorted(cum, ts, side="right") - 1, 0, len(lengths) - 1)
    for i in range(len(lengths)):
        sel = seg == i
        if sel.any():
            us[sel], vs[sel] = chart.path(verts[i], verts[i + 1], np.minimum(ts[sel] - cum[i], lengths[i]))
    return ts, us, vs


def is_quasi_geodesic(chart, ts, us, vs, q, Q, tol=1e-9):
    """Exhaustive check of (1/q)|s-t| - Q <= d <= q|s-t| + Q over all sampled parameter pairs."""
    d = chart.dist(us[:, None], vs[:, None], us[None, :], vs[None, :])
    dt = np.abs(ts[:, None] - ts[None, :])
    return bool(np.all(d <= q * dt + Q + tol) and np.all(d >= dt / q - Q - tol))


@dataclass
class GaugeReport:
    radii: list
    m_hat: list
    accepted: list
    rejected: list
    unbounded: bool

    @property
    def value(self):
        return max(self.m_hat) if self.m_hat else 0.0


def morse_gauge_probe(space, Z, q, Q, kap, radii=(10, 20, 40), trials=40, seed=0, detours=1, grid=64,
                      growth_tol=0.25, steps=32):
    """Sup of d(beta, Z) / kappa(||beta||) over verified (q, Q)-quasi-geodesics with endpoints on Z.

    Each trial draws a detour width and side, then takes the tallest height among
    R 2^(-j/2), j = 0, 1, ..., then 0, whose path passes the exhaustive (q, Q) check. Flags
    "unbounded" when the estimate grows by more than ``growth_tol`` over the
    last radius doubling.
    """
    if Z.kind != "line":
        raise PreconditionError("Morse gauge probe needs a complete geodesic")
    chart = _Chart(space, Z)
    m_hat, acc, rej = [], [], []
    for i, R in enumerate(radii):
        rng = trial_rng(seed, i)
        best, a, b = 0.0, 0, 0
        for _ in range(trials):
            width = rng.uniform(0.1, 0.9) * 2 * R / detours
            side = 1.0 if rng.random() < 0.5 else -1.0
            found = None
            for j in range(steps + 1):
                h = side * R * 2 ** (-j / 2) if j < steps else 0.0
                ts, us, vs = _sample_path(chart, _detour_vertices(chart.origin, R, detours, width, h), grid)
                if is_quasi_geodesic(chart, ts, us, vs, q, Q):
                    found = (us, vs)
                    break
                b += 1
            if found is None:
                continue
            a += 1
            us, vs = found
            norms = chart.dist(us, vs, *chart.origin)
            ratio = np.abs(vs) / K.evaluate(kap, norms)
            best = max(best, float(np.max(ratio)))
        m_hat.append(best)
        acc.append(a)
        rej.append(b)
    unbounded = len(m_hat) > 1 and m_hat[-1] > (1 + growth_tol) * m_hat[-2] + 1e-9
    return GaugeReport(list(radii), m_hat, acc, rej, bool(unbounded))


# Projection lemmas


@dataclass
class ProjectionLemmaReport:
    radii: list
    C1: float
    D1: list
    D2: list
    C2: list
    rejected: list
    diverged: bool

    @property
    def estimates(self):
        return self.C1, self.D1[-1], self.C2[-1], self.D2[-1]

    def to_json(self):
        return {"radii": self.radii, "C1": self.C1, "D1": self.D1, "C2": self.C2, "D2": self.D2,
                "rejected": self.rejected, "diverged": self.diverged}


def _lsh(chart, x):
    """log of sinh x (hyperbolic) or of x (flat), for x >= 0."""
    with np.errstate(divide="ignore"):
        return lsinh(x) if chart.hyp else np.log(x)


def _seg_dist(chart, pu, pv, u1, v1, u2, v2):
    """Distance from p to the segment [x, y], using only the three side lengths.

    The angle at x comes from the half-angle formulas, which stay accurate for
    thin triangles: sin^2(X/2) = sh(s-c) sh(s-a) / (sh c sh a) and
    cos^2(X/2) = sh(s) sh(s-b) / (sh c sh a), with sh = sinh (or identity when flat).
    """
    a = chart.dist(u1, v1, u2, v2)
    b = chart.dist(pu, pv, u2, v2)
    c = chart.dist(pu, pv, u1, v1)
    s = (a + b + c) / 2
    ls = lambda x: _lsh(chart, np.maximum(x, 0.0))
    with np.errstate(invalid="ignore"):
        den = ls(c) + ls(a)
        half_sin = 0.5 * (ls(s - c) + ls(s - a) - den)
        half_cos = 0.5 * (ls(s) + ls(s - b) - den)
        # sin X = 2 sin(X/2) cos(X/2); X >= pi/2 iff sin(X/2) >= cos(X/2)
        lsin = np.log(2.0) + half_sin + half_cos
        lperp = ls(c) + lsin
        perp = asinh_exp(lperp) if chart.hyp else np.exp(lperp)
    # angle at y: roles of b and c swap
    with np.errstate(invalid="ignore"):
        den_y = ls(b) + ls(a)
        obtuse_y = ls(s - b) + ls(s - a) - den_y >= ls(s) + ls(s - c) - den_y
    obtuse_x = half_sin >= half_cos
    d = np.where(obtuse_x, c, np.where(obtuse_y, b, perp))
    return np.where(np.isfinite(d), d, np.minimum(b, c))


def _gap_to_line(chart, u1, v1, u2, v2):
    """Distance from the segment [x, y] to the reference geodesic (v = 0)."""
    lo, hi = np.minimum(u1, u2), np.maximum(u1, u2)
    _, d = convex_argmin(lambda u: _seg_dist(chart, u, np.zeros_like(u), u1, v1, u2, v2),
                         lo, hi, h=1e-6, tol=1e-10)
    return np.where(v1 * v2 > 0, d, 0.0)


def projection_lemma_estimate(space, gamma, radii=(10, 20, 40, 80), trials=2000, seed=0, C1=1.0, D2=None,
                              N=None, growth_tol=0.15):
    """Empirical constants for the two projection lemmas of a contracting geodesic.

    Points are drawn uniformly in the chart box |u - u_o| <= R, |v| <= R.
    D1 is the largest projection diameter of a segment staying outside the
    C1-neighborhood; segments meeting it are rejected and counted. For pairs
    whose projections are at least D2 apart (default D1 + 2 C1), C2 is the largest
    distance from the subsegment of gamma between the feet to [x, y]. By convexity
    it is attained at one of the two feet. ``diverged`` is set when D1 or C2 grows
    by more than ``growth_tol`` over the last radius doubling.
    """
    if N is not None:
        rep = contraction_search(space, gamma, N, radii=radii[:2], trials=200, seed=seed)
        if not rep.passed:
            raise PreconditionError(f"target not {N}-contracting on the schedule (estimate {rep.N_estimate:.4g})")
    if gamma.kind != "line":
        raise PreconditionError("projection lemmas need a complete geodesic")
    chart = _Chart(space, gamma)
    u_o = chart.origin[0]
    D1s, D2s, C2s, rej = [], [], [], []
    d1 = c2 = 0.0
    for i, R in enumerate(radii):
        rng = trial_rng(seed, 1000 + i)
        u1, u2 = u_o + rng.uniform(-R, R, (2, trials))
        v1, v2 = rng.uniform(-R, R, (2, trials))
        # distance to gamma is convex along a segment and its minimizer projects between the feet
        ok = _gap_to_line(chart, u1, v1, u2, v2) > C1
        rej.append(int(np.count_nonzero(~ok)))
        gap = np.abs(u1 - u2)
        if ok.any():
            d1 = max(d1, float(gap[ok].max()))
        d2 = d1 + 2 * C1 if D2 is None else float(D2)
        far = gap >= d2
        if far.any():
            a, b, c, d = u1[far], v1[far], u2[far], v2[far]
            e1 = _seg_dist(chart, a, np.zeros_like(a), a, b, c, d)
            e2 = _seg_dist(chart, c, np.zeros_like(c), a, b, c, d)
            c2 = max(c2, float(np.max(np.maximum(e1, e2))))
        D1s.append(d1)
        D2s.append(d2)
        C2s.append(c2)
    diverged = False
    if len(radii) > 1:
        for seq in (D1s, C2s):
            if seq[-1] > (1 + growth_tol) * seq[-2] + 1e-9:
                diverged = True
    return ProjectionLemmaReport(list(radii), float(C1), D1s, D2s, C2s, rej, diverged)
