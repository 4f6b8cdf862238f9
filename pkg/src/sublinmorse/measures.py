"""Empirical boundary measures: ball averages, hitting measures and their residuals.

Boundary coordinates are directions at the basepoint: a polar angle in the
planes, a leading reduced word in the tree. Angles use B equal bins, trees
use the cylinders of a fixed word depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import groups as G
from .freqcontract import frequent_window_check, projection_growth, reference_library
from .spaces import EuclideanPlane, HyperbolicPlane, RegularTree
from .spaces.base import UnsupportedSpace
from .spaces.tree import reduce_word

TWO_PI = 2 * math.pi


class InstabilityError(G.GroupError):
    def __init__(self, msg, failing=None):
        super().__init__(msg)
        self.failing = failing


# binning


def cylinder_words(k, depth):
    """Reduced words of length ``depth`` over letters +-1..+-k, in a fixed order."""
    letters = [s * i for i in range(1, k + 1) for s in (1, -1)]
    out = [()]
    for _ in range(depth):
        out = [w + (a,) for w in out for a in letters if not w or a != -w[-1]]
    return out


@dataclass
class Binning:
    kind: str  # "angle" or "cylinder"
    B: int = 64
    k: int = 2
    depth: int = 3
    _index: dict = field(default=None, repr=False, compare=False)

    @property
    def size(self):
        if self.kind == "angle":
            return self.B
        return 2 * self.k * (2 * self.k - 1) ** (self.depth - 1)

    @property
    def words(self):
        return cylinder_words(self.k, self.depth)

    def index(self):
        if self._index is None:
            self._index = {w: i for i, w in enumerate(self.words)}
        return self._index

    def of_angles(self, theta):
        t = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        return np.minimum((t / TWO_PI * self.B).astype(int), self.B - 1)

    def of_word(self, w):
        """Cylinder of a word with at least ``depth`` letters, else None."""
        return self.index().get(tuple(w[: self.depth])) if len(w) >= self.depth else None

    def centers(self):
        return (np.arange(self.B) + 0.5) * TWO_PI / self.B

    def to_json(self):
        if self.kind == "angle":
            return {"kind": "angle", "B": self.B}
        return {"kind": "cylinder", "k": self.k, "depth": self.depth}

    @classmethod
    def from_json(cls, d):
        if d["kind"] == "angle":
            return cls("angle", B=int(d["B"]))
        return cls("cylinder", k=int(d["k"]), depth=int(d["depth"]))


def binning_for(tag, bins=None):
    """Default binning for a space tag: 64 angles, or depth-3 cylinders in a tree."""
    if isinstance(bins, Binning):
        return bins
    if tag.startswith("tree"):
        k = int(tag.split("=")[1])
        return Binning("cylinder", k=k, depth=3 if bins is None else int(bins))
    return Binning("angle", B=64 if bins is None else int(bins))


@dataclass
class EmpiricalBoundaryMeasure:
    space: str
    binning: Binning
    weights: np.ndarray
    provenance: dict
    # raw boundary coordinates behind the histogram (angles), when kept
    samples: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.binning.size,):
            raise ValueError(f"expected {self.binning.size} bins, got {w.shape}")
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        self.weights = w

    def to_json(self):
        return {"space": self.space, "binning": self.binning.to_json(),
                "weights": self.weights.tolist(), "provenance": self.provenance}

    @classmethod
    def from_json(cls, d):
        return cls(d["space"], Binning.from_json(d["binning"]), np.asarray(d["weights"]), dict(d["provenance"]))


def _normalized(counts):
    c = np.asarray(counts, dtype=float)
    tot = c.sum()
    if tot <= 0:
        raise ValueError("no mass to normalize")
    return c / tot


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# ball averages


def _orbit_directions(S, R, x=None):
    """Boundary coordinates of the orbit points g.o != o within R of x, plus the ball size at o.

    Angles for matrix groups, reduced words for free groups acting on the tree.
    """
    g0 = S.elements[0]
    space = G.space_for(g0)
    o = space.basepoint()
    x = o if x is None else x
    reach = R + space.distance(o, x)
    items, dists = G.orbit_ball(S, reach)
    n_o = int(np.sum(np.asarray(dists) <= R + 1e-9))
    out = []
    for g, d in zip(items, dists):
        if d == 0:
            continue
        if isinstance(g, tuple):
            p = space.point(g)
            coord = g
        else:
            p = g.apply(o)
            coord = math.atan2(p.data[1], p.data[0]) % TWO_PI
        if x is not o and space.distance(x, p) > R + 1e-9:
            continue
        out.append(coord)
    return space, out, n_o


def ball_average_measure(S: G.GeneratorSet, R, bins=None, basepoint=None):
    """Uniform mass on orbit points of B_R(basepoint), binned by direction from o.

    The orbit point o itself has no direction and is dropped; so are tree
    points shorter than the cylinder depth. ``provenance`` keeps the raw count
    and the ball size at o so densities from two basepoints can be compared
    without renormalization.
    """
    space, coords, n_o = _orbit_directions(S, R, basepoint)
    b = binning_for(space.tag, bins)
    counts = np.zeros(b.size)
    unbinned = 0
    if b.kind == "angle":
        np.add.at(counts, b.of_angles(np.asarray(coords, dtype=float)), 1.0)
    else:
        for w in coords:
            i = b.of_word(w)
            if i is None:
                unbinned += 1
            else:
                counts[i] += 1
    prov = {"kind": "ball_average", "R": float(R), "count": int(counts.sum()), "ball_o": n_o,
            "unbinned": unbinned}
    if basepoint is not None:
        prov["basepoint"] = basepoint.to_json()
    return EmpiricalBoundaryMeasure(space.tag, b, _normalized(counts), prov)


# hitting measures

CHUNK = 8192


def _letters(mu):
    """Single-letter form of a free-group walk (0 for the identity), or None."""
    out = []
    for g in mu.elements:
        if not isinstance(g, G.WordElement) or len(g.word) > 1:
            return None
        out.append(g.word[0] if g.word else 0)
    return np.array(out, dtype=np.int64)


def _tree_chunk(letters, inc, depth):
    """Leading ``depth`` letters of omega_{n/2} and omega_n, with their lengths."""
    m, n = inc.shape
    W = np.zeros((m, n + 1), dtype=np.int64)
    L = np.zeros(m, dtype=np.int64)
    rows = np.arange(m)
    half = None
    for i in range(n):
        x = letters[inc[:, i]]
        top = W[rows, np.maximum(L - 1, 0)]
        cancel = (L > 0) & (top == -x) & (x != 0)
        push = (x != 0) & ~cancel
        W[rows[push], L[push]] = x[push]
        L = L + push - cancel
        if i + 1 == n // 2:
            half = (W[:, :depth].copy(), L.copy())
    return half, (W[:, :depth].copy(), L)


def _matrix_chunk(mats, inc):
    """Polar angles of omega_{n/2} o and omega_n o, multiplying right to left.

    Only the direction is kept: each step renormalizes by the time coordinate,
    which stays accurate long after the matrix products themselves overflow.
    """
    m, n = inc.shape
    out = []
    for stop in (n // 2, n):
        v = np.tile([0.0, 0.0, 1.0], (m, 1))
        for i in range(stop - 1, -1, -1):
            v = np.einsum("mij,mj->mi", mats[inc[:, i]], v)
            v /= v[:, 2:3]
        out.append(np.mod(np.arctan2(v[:, 1], v[:, 0]), TWO_PI))
    return out


def _circ(a, b):
    d = np.abs(a - b) % TWO_PI
    return np.minimum(d, TWO_PI - d)


def hitting_measure(mu: G.WalkMeasure, n, trials, bins=None, seed=0, workers=1, keep_samples=True,
                    stable=0.95):
    """Binned law of the direction of omega_n o.

    A trial is stable when omega_{n/2} o already points the same way: the same
    cylinder in the tree, within half a bin in angle. Fewer than ``stable``
    stable trials raises InstabilityError. Trials run in fixed chunks with their
    own generator, so the result does not depend on ``workers``.
    """
    g0 = mu.elements[0]
    space = G.space_for(g0)
    b = binning_for(space.tag, bins)
    letters = _letters(mu)
    if letters is None and not isinstance(g0, G.MatrixElement):
        raise UnsupportedSpace(f"hitting measures for {type(g0).__name__} walks")
    mats = None if letters is not None else np.stack([g.M for g in mu.elements])
    starts = list(range(0, trials, CHUNK))

    def one(c):
        m = min(CHUNK, trials - starts[c])
        inc = G.trial_rng(seed, 7, c).choice(len(mu.probs), size=(m, n), p=mu.probs)
        if letters is not None:
            (wh, lh), (wn, ln) = _tree_chunk(letters, inc, b.depth)
            ok = (lh >= b.depth) & (ln >= b.depth) & np.all(wh == wn, axis=1)
            return ok, wn, ln >= b.depth
        th, tn = _matrix_chunk(mats, inc)
        return _circ(th, tn) < math.pi / b.B, tn, np.ones(m, dtype=bool)

    parts = G._map(one, range(len(starts)), workers)
    ok = np.concatenate([p[0] for p in parts])
    coords = np.concatenate([p[1] for p in parts])
    valid = np.concatenate([p[2] for p in parts])
    frac = float(ok.mean())
    if frac < stable:
        raise InstabilityError(f"only {frac:.3f} of trials stabilized by n = {n}", failing=1 - frac)
    counts = np.zeros(b.size)
    if b.kind == "angle":
        np.add.at(counts, b.of_angles(coords), 1.0)
    else:
        idx = b.index()
        for row in coords[valid]:
            counts[idx[tuple(int(a) for a in row)]] += 1
    prov = {"kind": "hitting", "n": int(n), "trials": int(trials), "seed": int(seed), "stable": frac}
    samples = coords if (keep_samples and b.kind == "angle") else None
    return EmpiricalBoundaryMeasure(space.tag, b, _normalized(counts), prov, samples)


# stationarity


def _angle_action(M, theta):
    """Boundary action of a Lorentz matrix on polar angles (via null vectors)."""
    theta = np.asarray(theta, dtype=float)
    xi = np.stack([np.cos(theta), np.sin(theta), np.ones_like(theta)])
    y = M @ xi
    return np.mod(np.arctan2(y[1], y[0]), TWO_PI)


def _word_pushforward(b: Binning, word, weights):
    """g_* of a cylinder histogram; a cylinder whose image is shorter than the
    depth spreads its mass evenly over the cylinders inside the image."""
    out = np.zeros(b.size)
    idx = b.index()
    words = b.words
    for w, m in zip(words, weights):
        if m == 0:
            continue
        u = reduce_word(tuple(word) + w)
        if len(u) >= b.depth:
            out[idx[u[: b.depth]]] += m
            continue
        inside = [i for i, v in enumerate(words) if v[: len(u)] == u]
        out[inside] += m / len(inside)
    return out


def pushforward(nu: EmpiricalBoundaryMeasure, g, method="auto"):
    """Histogram of g_* nu, i.e. A -> nu(g^-1 A).

    Angles: "samples" maps the kept raw directions, "centers" maps bin centers
    and moves each bin's mass whole. "auto" uses samples when kept.
    """
    b = nu.binning
    if isinstance(g, G.WordElement):
        return _word_pushforward(b, g.word, nu.weights)
    if not isinstance(g, G.MatrixElement) or b.kind != "angle":
        raise UnsupportedSpace(f"boundary action of {type(g).__name__}")
    if method == "auto":
        method = "samples" if nu.samples is not None else "centers"
    out = np.zeros(b.size)
    if method == "samples":
        np.add.at(out, b.of_angles(_angle_action(g.M, nu.samples)), 1.0 / len(nu.samples))
    else:
        np.add.at(out, b.of_angles(_angle_action(g.M, b.centers())), nu.weights)
    return out


def stationarity_residual(nu: EmpiricalBoundaryMeasure, mu: G.WalkMeasure, method="auto"):
    """TV distance between nu and sum_g mu(g) g_* nu."""
    mix = np.zeros(nu.binning.size)
    for g, p in zip(mu.elements, mu.probs):
        if g.is_identity():
            mix += p * nu.weights
        else:
            mix += p * pushforward(nu, g, method)
    return tv(nu.weights, mix)


# conformal density


@dataclass
class ConformalResidual:
    centers: list
    residual: list  # per bin, None where either measure is empty
    summary: float
    empty_bins: int

    def to_json(self):
        return {"residual": self.residual, "summary": self.summary, "empty_bins": self.empty_bins}


def conformal_density_residual(nu_x, nu_y, delta, space=None):
    """Per-bin log(dnu_x/dnu_y) - delta * beta_zeta(y, x) at bin centers.

    The measures are ball averages at the same R from basepoints x and y (see
    ``ball_average_measure``). They are compared as unnormalized densities,
    weights times orbit count, which is what the conformal relation constrains.
    The summary is the mean absolute residual weighted by the average mass.
    """
    b = nu_x.binning
    if b.kind != "angle" or nu_y.binning != b:
        raise UnsupportedSpace("conformal residuals need matching angle bins")
    space = HyperbolicPlane() if space is None else space
    x = _point(space, nu_x.provenance.get("basepoint"))
    y = _point(space, nu_y.provenance.get("basepoint"))
    dx = nu_x.weights * nu_x.provenance["count"]
    dy = nu_y.weights * nu_y.provenance["count"]
    centers = b.centers()
    res, wts = [], []
    for c, a, e in zip(centers, dx, dy):
        if a <= 0 or e <= 0:
            res.append(None)
            continue
        beta = space.busemann(space.ideal(c), y, x)
        res.append(float(math.log(a / e) - delta * beta))
        wts.append(0.5 * (a / dx.sum() + e / dy.sum()))
    vals = np.array([r for r in res if r is not None])
    summary = float(np.average(np.abs(vals), weights=wts)) if len(vals) else float("nan")
    return ConformalResidual(centers.tolist(), res, summary, sum(r is None for r in res))


def _point(space, data):
    if data is None:
        return space.basepoint()
    return space.point(np.asarray(data["coords"] if isinstance(data, dict) else data, dtype=float))


# genericity survey


@dataclass
class SurveyConfig:
    L: float = 5.0
    C: float = 2.0
    theta: float = 0.25
    window_radii: tuple = (50, 100, 200)
    growth_radii: tuple = (25, 50, 100, 200)
    trials: int = 100
    extra_letters: int = 4  # random tree letters past the sampled cylinder


@dataclass
class SurveyResult:
    passed: int
    tested: int
    excluded: int
    fraction: float
    ci: tuple
    errors: list = field(default_factory=list)

    def to_json(self):
        return {"passed": self.passed, "tested": self.tested, "excluded": self.excluded,
                "fraction": self.fraction, "ci95": list(self.ci), "errors": self.errors}


def wilson(k, n, z=1.96):
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, mid - half), min(1.0, mid + half))


def space_from_tag(tag):
    if tag == "h2":
        return HyperbolicPlane()
    if tag == "e2":
        return EuclideanPlane()
    if tag.startswith("tree"):
        return RegularTree(int(tag.split("=")[1]))
    raise UnsupportedSpace(f"no boundary rays for {tag}")


def sample_boundary(space, nu: EmpiricalBoundaryMeasure, rng, extra=4):
    """A bin drawn from nu, then a point inside it: uniform angle, or the cylinder
    word continued by random letters and a random periodic tail."""
    b = nu.binning
    i = int(rng.choice(b.size, p=nu.weights))
    if b.kind == "angle":
        return space.ideal((i + rng.random()) * TWO_PI / b.B)
    w = b.words[i]
    for _ in range(extra + 1):
        w = w + (space.random_letter(rng, -w[-1]),)
    return space.ideal(w[:-1], w[-1:])


def generic_morse_survey(nu: EmpiricalBoundaryMeasure, samples, config=None, seed=0):
    """Fraction of nu-sampled directions whose ray passes the frequent-window check
    at every window radius and gets a sublinear projection-growth verdict."""
    cfg = SurveyConfig() if config is None else config
    space = space_from_tag(nu.space)
    lib = reference_library(space, seed=seed)
    passed = tested = 0
    errors = []
    for j in range(samples):
        rng = G.trial_rng(seed, 11, j)
        try:
            ray = space.ray(sample_boundary(space, nu, rng, cfg.extra_letters))
            win = frequent_window_check(lib, ray, lib.N, cfg.C, cfg.L, cfg.theta, cfg.window_radii)
            ok = all(r.passed for r in win)
            if ok:
                # growth is only informative once the window check passed
                prof = projection_growth(space, ray, cfg.growth_radii, cfg.trials, seed=seed + j)
                ok = prof.verdict == "sublinear"
        except (ArithmeticError, ValueError) as err:
            errors.append(f"sample {j}: {err}")
            continue
        tested += 1
        passed += ok
    frac = passed / tested if tested else float("nan")
    return SurveyResult(passed, tested, len(errors), frac, wilson(passed, tested), errors)
