"""Isometry groups acting on the model spaces, and random walks on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spaces import EuclideanPlane, GluedPlane, HyperbolicPlane, Point, RegularTree
from .spaces.base import SpaceError
from .spaces.hyperbolic import mink
from .spaces.tree import inverse, reduce_word

J = np.diag([1.0, 1.0, -1.0])


class GroupError(SpaceError):
    pass


class BudgetError(GroupError):
    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


# elements


class IsometryElement:
    space_tag = ""

    def __mul__(self, other):
        if type(other) is not type(self):
            raise GroupError("cannot compose elements of different groups")
        return self.compose(other)

    def apply(self, p: Point) -> Point:
        if p.tag != self.space_tag:
            raise GroupError(f"{self.space_tag} element applied to a {p.tag} point")
        return self._apply(p)


class WordElement(IsometryElement):
    """Free group element acting on its Cayley tree by left multiplication."""

    def __init__(self, k, word=()):
        self.k = k
        self.word = reduce_word(tuple(word))
        self.space_tag = f"tree:k={k}"

    def compose(self, other):
        return WordElement(self.k, self.word + other.word)

    def inverse(self):
        return WordElement(self.k, inverse(self.word))

    def is_identity(self):
        return not self.word

    def key(self):
        return self.word

    def _apply(self, p):
        w, s = p.data
        top = reduce_word(self.word + w)
        if s == 0:
            return Point(p.tag, (top, 0.0))
        other = reduce_word(self.word + w[:-1])
        # the point sits s from g.w on the edge toward g.w[:-1]; orient that edge toward the root
        if len(top) > len(other):
            return Point(p.tag, (top, s))
        return Point(p.tag, (other, 1.0 - s))

    def __eq__(self, other):
        return isinstance(other, WordElement) and self.word == other.word

    def __hash__(self):
        return hash(self.word)

    def __repr__(self):
        return f"WordElement({self.word})"


def boost(length, angle=0.0):
    """Hyperbolic translation by ``length`` along the line through o at polar ``angle``."""
    c, s = math.cosh(length), math.sinh(length)
    B = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    R = rotation(angle)
    return R @ B @ R.T


def rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def lorentz_fix(M):
    """Re-orthonormalize the columns of M against the Minkowski form (Gram-Schmidt from the last)."""
    M = np.array(M, dtype=float)
    t = M[:, 2] / math.sqrt(-mink(M[:, 2], M[:, 2]))
    x = M[:, 0] + mink(M[:, 0], t) * t
    x /= math.sqrt(mink(x, x))
    y = M[:, 1] + mink(M[:, 1], t) * t - mink(M[:, 1], x) * x
    y /= math.sqrt(mink(y, y))
    return np.column_stack([x, y, t])


class MatrixElement(IsometryElement):
    """Orientation- and sheet-preserving Lorentz matrix acting on the hyperboloid."""

    space_tag = "h2"

    def __init__(self, M, check=True):
        self.M = np.asarray(M, dtype=float)
        if check:
            err = np.max(np.abs(self.M.T @ J @ self.M - J)) / max(1.0, np.max(np.abs(self.M)) ** 2)
            if err > 1e-9 or self.M[2, 2] < 0 or np.linalg.det(self.M) < 0:
                raise GroupError("not an orientation-preserving Lorentz matrix")

    def compose(self, other):
        return MatrixElement(self.M @ other.M, check=False)

    def inverse(self):
        return MatrixElement(J @ self.M.T @ J, check=False)

    def is_identity(self):
        return np.allclose(self.M, np.eye(3), atol=1e-9)

    def translation(self):
        """Translation length from the trace: 2 cosh(l) = tr - 1 for hyperbolic elements."""
        return math.acosh(max(1.0, (np.trace(self.M) - 1) / 2))

    def _apply(self, p):
        return Point(p.tag, self.M @ p.data)

    def __repr__(self):
        return f"MatrixElement(d(o,go)={math.acosh(max(1.0, self.M[2, 2])):.4g})"


class EuclidElement(IsometryElement):
    """x -> R(angle) x + shift."""

    space_tag = "e2"

    def __init__(self, angle=0.0, shift=(0.0, 0.0)):
        self.angle = float(angle) % (2 * math.pi)
        self.shift = np.asarray(shift, dtype=float)

    def _R(self):
        return rotation(self.angle)[:2, :2]

    def compose(self, other):
        return EuclidElement(self.angle + other.angle, self._R() @ other.shift + self.shift)

    def inverse(self):
        return EuclidElement(-self.angle, -(self._R().T @ self.shift))

    def is_identity(self):
        return abs(math.remainder(self.angle, 2 * math.pi)) < 1e-12 and np.allclose(self.shift, 0)

    def _apply(self, p):
        return Point(p.tag, self._R() @ p.data + self.shift)


class GluedShift(IsometryElement):
    """Translation along the gluing line."""

    space_tag = "glued"

    def __init__(self, length):
        self.length = float(length)

    def compose(self, other):
        return GluedShift(self.length + other.length)

    def inverse(self):
        return GluedShift(-self.length)

    def is_identity(self):
        return self.length == 0

    def _apply(self, p):
        s, a, b = p.data
        return Point(p.tag, (s, a + self.length, b))


def identity_like(g):
    if isinstance(g, WordElement):
        return WordElement(g.k)
    if isinstance(g, MatrixElement):
        return MatrixElement(np.eye(3), check=False)
    if isinstance(g, EuclidElement):
        return EuclidElement()
    return GluedShift(0.0)


def space_for(g):
    if isinstance(g, WordElement):
        return RegularTree(g.k)
    if isinstance(g, MatrixElement):
        return HyperbolicPlane()
    if isinstance(g, EuclidElement):
        return EuclideanPlane()
    return GluedPlane()


def same_element(g, h, tol=1e-9):
    if isinstance(g, WordElement):
        return g.word == h.word
    if isinstance(g, MatrixElement):
        return np.allclose(g.M, h.M, atol=tol * max(1.0, np.max(np.abs(g.M))))
    if isinstance(g, EuclidElement):
        return abs(math.remainder(g.angle - h.angle, 2 * math.pi)) < tol and np.allclose(g.shift, h.shift, atol=tol)
    return abs(g.length - h.length) < tol


# generator sets and measures


@dataclass
class GeneratorSet:
    names: list
    elements: list

    def __post_init__(self):
        if len(self.names) != len(self.elements):
            raise GroupError("names and elements differ in length")
        for g in self.elements:
            if g.is_identity():
                raise GroupError("generating sets exclude the identity")
            if not any(same_element(g.inverse(), h) for h in self.elements):
                raise GroupError("generating set is not closed under inversion")

    def __len__(self):
        return len(self.elements)


@dataclass
class WalkMeasure:
    names: list
    elements: list
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1) > 1e-12:
            raise GroupError("probabilities must be nonnegative and sum to 1")
        for g, p in zip(self.elements, self.probs):
            mates = [q for h, q in zip(self.elements, self.probs) if same_element(g.inverse(), h)]
            if not mates or abs(sum(mates) - p) > 1e-12:
                raise GroupError("measure is not symmetric")

    @property
    def identity(self):
        return identity_like(self.elements[0])

    def reflected(self):
        """The measure g -> mu(g^-1)."""
        return WalkMeasure([f"({n})^-1" for n in self.names], [g.inverse() for g in self.elements], self.probs)

    def inverse_index(self):
        """Index of each support point's inverse."""
        out = []
        for g in self.elements:
            out.append(next(j for j, h in enumerate(self.elements) if same_element(g.inverse(), h)))
        return np.array(out)


def free_generators(k=2):
    names = "abcdefghij"[:k]
    gens, labels = [], []
    for i in range(1, k + 1):
        gens += [WordElement(k, (i,)), WordElement(k, (-i,))]
        labels += [names[i - 1], names[i - 1].upper()]
    return GeneratorSet(labels, gens)


def schottky_generators(length=4.0):
    """Translations of length ``length`` along the two coordinate axes through o."""
    a, b = MatrixElement(boost(length, 0.0)), MatrixElement(boost(length, math.pi / 2))
    return GeneratorSet(["a", "A", "b", "B"], [a, a.inverse(), b, b.inverse()])


def uniform_measure(S: GeneratorSet, lazy=0.0):
    """Uniform on S, with an extra atom ``lazy`` at the identity."""
    p = np.full(len(S), (1 - lazy) / len(S))
    names, elements = list(S.names), list(S.elements)
    if lazy > 0:
        names.append("e")
        elements.append(identity_like(S.elements[0]))
        p = np.append(p, lazy)
    return WalkMeasure(names, elements, p)


def named_measure(name):
    """Walk measures addressable by name: srw4, lazy4, schottky, srw<2k>."""
    if name == "srw4":
        return uniform_measure(free_generators(2))
    if name == "lazy4":
        return uniform_measure(free_generators(2), lazy=0.5)
    if name == "schottky":
        return uniform_measure(schottky_generators())
    if name.startswith("srw") and name[3:].isdigit() and int(name[3:]) % 2 == 0:
        return uniform_measure(free_generators(int(name[3:]) // 2))
    raise GroupError(f"unknown walk measure {name!r}")


# orbit census


@dataclass
class Census:
    R: float
    shells: list  # counts of orbit points with d(o, g o) in (n - 1, n], shell 0 is {o}
    ball: list  # cumulative counts
    delta_hat: float
    poincare: dict  # s -> partial sums over balls of radius 0..R

    def to_json(self):
        return {"R": self.R, "shells": self.shells, "ball": self.ball, "delta_hat": self.delta_hat,
                "poincare": {f"{s:.6g}": v for s, v in self.poincare.items()}}


def _slope_top_half(R, ball):
    n = np.arange(len(ball), dtype=float)
    top = n >= R / 2
    x, y = n[top], np.log(np.asarray(ball, dtype=float)[top])
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def orbit_census(S: GeneratorSet, R, o=None, s_values=(), budget=5_000_000, resolution=1e-6):
    """Breadth-first enumeration of the orbit ball B_R(o) with orbit-point dedup.

    Words are deduplicated exactly; matrix orbit points by hashing coordinates at
    ``resolution``. A word is expanded only while its orbit point stays within R;
    that is complete for the tree and for the Schottky default, whose orbit
    distances grow along reduced words (ping-pong).
    """
    try:
        _, dists = orbit_ball(S, R, o, budget, resolution)
    except BudgetError as err:
        raise BudgetError(str(err), partial=_census(R, err.partial, s_values)) from None
    return _census(R, dists, s_values)


def orbit_ball(S: GeneratorSet, R, o=None, budget=5_000_000, resolution=1e-6):
    """Orbit points of B_R(o) as ``(items, dists)``.

    Items are reduced words (tuples) when the basepoint is the identity vertex of
    a tree, group elements otherwise. On overflow a BudgetError carries the
    distances found so far.
    """
    g0 = S.elements[0]
    space = space_for(g0)
    o = space.basepoint() if o is None else o
    if isinstance(g0, WordElement) and o.data == ((), 0.0):
        return _word_ball(S, R, budget)
    e = identity_like(g0)

    def key(g):
        if isinstance(g, WordElement):
            return g.word
        q = g.apply(o).data
        return tuple(np.round(np.asarray(q, dtype=float) / resolution).astype(np.int64).tolist()) \
            if not isinstance(q, tuple) else q

    # never step straight back along the generator just used: a*A is recomputed
    # with rounding error far out and can slip past the coordinate key
    back = [next(j for j, h in enumerate(S.elements) if same_element(g.inverse(), h)) for g in S.elements]
    seen = {key(e)}
    items = [e]
    dists = [0.0]
    frontier = [(e, -1)]
    while frontier:
        nxt = []
        for g, last in frontier:
            for j, h in enumerate(S.elements):
                if last >= 0 and j == back[last]:
                    continue
                gh = g * h
                k = key(gh)
                if k in seen:
                    continue
                d = space.distance(o, gh.apply(o))
                if d > R + 1e-9:
                    continue
                seen.add(k)
                items.append(gh)
                dists.append(d)
                nxt.append((gh, j))
                if len(seen) > budget:
                    raise BudgetError(f"census exceeded {budget} orbit points", partial=dists)
        frontier = nxt
    return items, dists


def _word_ball(S, R, budget):
    """Ball about the identity vertex, where the orbit distance is the reduced word length."""
    gens = [g.word for g in S.elements]
    seen = {()}
    items = [()]
    dists = [0]
    frontier = [()]
    while frontier:
        nxt = []
        for w in frontier:
            for x in gens:
                # cancel against the tail of w, then append the rest
                i = 0
                while i < len(x) and i < len(w) and w[-1 - i] == -x[i]:
                    i += 1
                v = w[:len(w) - i] + x[i:]
                if len(v) > R + 1e-9 or v in seen:
                    continue
                seen.add(v)
                items.append(v)
                dists.append(len(v))
                nxt.append(v)
            if len(seen) > budget:
                raise BudgetError(f"census exceeded {budget} orbit points", partial=dists)
        frontier = nxt
    return items, dists


def _census(R, dists, s_values):
    d = np.asarray(dists)
    n = int(math.floor(R + 1e-9))
    idx = np.ceil(d - 1e-9).astype(int)
    shells = np.bincount(np.clip(idx, 0, n), minlength=n + 1).tolist()
    ball = np.cumsum(shells).tolist()
    poincare = {}
    for s in s_values:
        terms = np.exp(-s * d)
        poincare[float(s)] = [float(terms[d <= r + 1e-9].sum()) for r in range(n + 1)]
    return Census(float(R), shells, ball, _slope_top_half(n, ball), poincare)


# sample paths


def trial_rng(seed, *keys):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


@dataclass
class SamplePath:
    """Increments as indices into ``mu``'s support.

    ``inc[j]`` holds h_{j - back + 1}, so positive times are h_1..h_n and the
    bilateral part h_0, h_-1, ... sits before them.
    """

    mu: WalkMeasure
    inc: np.ndarray
    back: int
    seed: int

    @property
    def n(self):
        return len(self.inc) - self.back

    def h(self, i):
        return self.mu.elements[self.inc[i + self.back - 1]]

    def omega(self, k):
        """omega_k; for k < 0 this is h_0^-1 h_-1^-1 ... h_{k+1}^-1."""
        if not -self.back <= k <= self.n:
            raise IndexError(f"omega_{k} outside the stored range")
        g = self.mu.identity
        if k >= 0:
            for i in range(1, k + 1):
                g = g * self.h(i)
        else:
            for i in range(0, k, -1):
                g = g * self.h(i).inverse()
        return g

    def orbit(self, ks, o=None):
        """Orbit points omega_k o for sorted nonnegative ks (one pass)."""
        return _orbit_points(self, ks, o)


def sample_path(mu: WalkMeasure, n, seed=0, back=0, trial=0):
    """i.i.d. increments from mu; ``back`` extra increments for the bilateral part."""
    if n < 0 or back < 0:
        raise ValueError("path lengths are nonnegative")
    rng = trial_rng(seed, trial)
    inc = rng.choice(len(mu.probs), size=back + n, p=mu.probs)
    return SamplePath(mu, inc, back, int(seed))


def shift(path: SamplePath, k):
    """U^k: (U^k omega)_n = omega_k^-1 omega_{n+k}, i.e. the increments move k places."""
    if not -path.back + 1 <= k + 1 and k <= path.n:
        raise IndexError("shift outside the stored range")
    if k < -path.back or k > path.n:
        raise IndexError("shift outside the stored range")
    return SamplePath(path.mu, path.inc, path.back + k, path.seed)


def _orbit_points(path, ks, o=None):
    """Points omega_k o at the requested times, keeping products accurate.

    Words use a stack; matrices are re-orthonormalized every 32 steps.
    """
    g0 = path.mu.elements[0]
    space = space_for(g0)
    o = space.basepoint() if o is None else o
    ks = sorted(ks)
    out = {}
    if isinstance(g0, WordElement):
        stack = []
        letters = [g.word for g in path.mu.elements]
        j = 0
        for i in range(0, ks[-1] + 1):
            if i > 0:
                for a in letters[path.inc[i + path.back - 1]]:
                    if stack and stack[-1] == -a:
                        stack.pop()
                    else:
                        stack.append(a)
            while j < len(ks) and ks[j] == i:
                out[i] = Point(o.tag, (tuple(stack), 0.0)) if o.data == ((), 0.0) else WordElement(g0.k, stack).apply(o)
                j += 1
        return [out[k] for k in ks]
    g = path.mu.identity
    j = 0
    for i in range(0, ks[-1] + 1):
        if i > 0:
            g = g * path.h(i)
            if isinstance(g, MatrixElement) and i % 32 == 0:
                g = MatrixElement(lorentz_fix(g.M), check=False)
        while j < len(ks) and ks[j] == i:
            out[i] = g.apply(o)
            j += 1
    return [out[k] for k in ks]


def word_lengths(path, ks):
    """|omega_k| for the free group, from the stack pass."""
    return [len(p.data[0]) for p in _orbit_points(path, ks)]


def drift_estimate(mu: WalkMeasure, n, trials, seed=0, o=None, workers=1):
    """Mean and standard error of d(omega_n o, o) / n over independent paths."""
    if n < 100:
        raise ValueError("drift needs n >= 100")
    space = space_for(mu.elements[0])
    o = space.basepoint() if o is None else o

    def one(t):
        p = sample_path(mu, n, seed, trial=t)
        if isinstance(mu.elements[0], MatrixElement):
            return _matrix_log_distance(p, n) / n
        return space.distance(o, p.orbit([n], o)[0]) / n

    vals = np.array(_map(one, range(trials), workers))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0


def _matrix_log_distance(path, n):
    """d(omega_n o, o) for long matrix products: rescale and track log of the scale."""
    M = np.eye(3)
    logscale = 0.0
    for i in range(1, n + 1):
        M = M @ path.h(i).M
        m = np.max(np.abs(M))
        if m > 1e100:
            M /= m
            logscale += math.log(m)
    c = M[2, 2]
    return logscale + math.log(c + math.sqrt(max(c * c - math.exp(-2 * logscale), 0.0))) if logscale else math.acosh(max(c, 1.0))


def _map(f, items, workers):
    items = list(items)
    if workers <= 1:
        return [f(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(workers) as ex:
        return list(ex.map(f, items))


@dataclass
class TrackingSeries:
    checkpoints: list
    deficit: list

    @property
    def sublinear(self):
        """Deficit decreasing over the last octave of checkpoints."""
        n = np.asarray(self.checkpoints, dtype=float)
        d = np.asarray(self.deficit)
        top = d[n >= n[-1] / 2]
        return bool(len(top) >= 2 and top[-1] <= top[0])


def limit_end_ray(path, horizon=None):
    """Tree ray toward the path's end, read off the word at ``horizon`` (default: the path's end)."""
    horizon = path.n if horizon is None else horizon
    g0 = path.mu.elements[0]
    word = _orbit_points(path, [horizon])[0].data[0]
    if not word:
        raise GroupError("path returned to the identity at the horizon")
    return RegularTree(g0.k).ray(RegularTree(g0.k).ideal(word[:-1], (word[-1],)))


def tracking_deficit(path, ray, l, checkpoints, o=None):
    """Series d(tau(l n), omega_n o) / n at the checkpoints."""
    g0 = path.mu.elements[0]
    space = space_for(g0)
    o = space.basepoint() if o is None else o
    ks = sorted(int(k) for k in checkpoints)
    pts = _orbit_points(path, ks, o)
    out = [space.distance(space.eval(ray, l * k), p) / k for k, p in zip(ks, pts)]
    return TrackingSeries(ks, out)


# Omega events


class HorizonError(GroupError):
    pass


@dataclass
class OmegaConfig:
    """Parameters of the event Omega(L, C, R) for a matrix walk.

    ``axis_gens`` are indices of the support elements that translate along the
    designated axis gamma0 (the x-axis); ``horizon`` is n in [omega_-n o, omega_n o]
    (default R + 10).
    """

    L: float
    C: float
    R: float
    axis_gens: tuple = (0, 1)
    horizon: int | None = None
    dt: float = 0.1
    reach: float = 12.0  # frame k is trusted within this distance of omega_k o along gamma
    stable: float = 0.1
    far: float = 20.0  # frames whose orbit point is farther than this from gamma are skipped

    @property
    def n(self):
        return int(self.horizon) if self.horizon is not None else int(self.R) + 10


def _normalize(v):
    return v / v[2]


def _unit(v, timelike):
    q = mink(v, v)
    return v / math.sqrt(-q if timelike else q)


def _cross(p, q):
    # Minkowski-orthogonal to p and q
    return np.array([p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], -(p[0] * q[1] - p[1] * q[0])])


@dataclass
class OmegaWitness:
    event: bool
    dist_o: float
    window: tuple | None  # (center s, first frame index) of a C-close window
    angles: tuple  # boundary angles of the endpoints in the frame of o


def omega_event(path: SamplePath, cfg: OmegaConfig, detail=False):
    """Whether the bilateral path lies in Omega(L, C, R).

    The geodesic through omega_-n o and omega_n o is handled in the frames of
    omega_k^-1 (|k| <= n), where the axis translate omega_k gamma0 is the x-axis
    and the two endpoints are products of increments only. Frames are stitched
    along gamma by the offsets between consecutive feet; frame k is used within
    ``reach`` of its own foot, and frames related by axis generators are merged
    (they share the translate).
    """
    n = cfg.n
    if path.back < 2 * n or path.n < 2 * n:
        raise HorizonError(f"path must extend to +-{2 * n}")
    mats = [g.M for g in path.mu.elements]
    imats = [J @ M.T @ J for M in mats]
    o = np.array([0.0, 0.0, 1.0])

    def idx(i):
        return path.inc[i + path.back - 1]

    # endpoints in frame 0 at horizons n and 2n
    def forward(N, stop):
        P = {N: o.copy()}
        for k in range(N - 1, stop - 1, -1):
            P[k] = _normalize(mats[idx(k + 1)] @ P[k + 1])
        return P

    def backward(N, stop):
        Q = {-N: o.copy()}
        for k in range(-N + 1, stop + 1):
            Q[k] = _normalize(imats[idx(k)] @ Q[k - 1])
        return Q

    P, Q = forward(n, -n), backward(n, n)
    P2, Q2 = forward(2 * n, 0), backward(2 * n, 0)
    ang = lambda v: math.atan2(v[1], v[0])
    for a, b in ((P[0], P2[0]), (Q[0], Q2[0])):
        if abs(math.remainder(ang(a) - ang(b), 2 * math.pi)) >= cfg.stable:
            raise HorizonError("endpoints not stable under doubling the horizon")

    # frames far from gamma (or with numerically coincident endpoints) are skipped
    frames = {}
    for k in range(-n, n + 1):
        c = _cross(P[k], Q[k])
        if not mink(c, c) > 1e-24:
            continue
        nk = _unit(c, False)
        if abs(math.asinh(mink(o, nk))) > cfg.far:
            continue
        f = _unit(o - mink(o, nk) * nk, True)
        # tangent toward the forward end; at k = n the forward end is o itself
        wp = P[k] + mink(P[k], f) * f
        wq = Q[k] + mink(Q[k], f) * f
        w = _unit(wp, False) if mink(wp, wp) > mink(wq, wq) else -_unit(wq, False)
        frames[k] = (nk, f, w)
    if 0 not in frames:
        if cfg.R / 10 > cfg.far:
            raise HorizonError("basepoint frame unusable at this R")
        result = OmegaWitness(False, math.inf, None, (ang(P[0]), ang(Q[0])))
        return result if detail else False

    def foot_param(k, x):
        nk, f, w = frames[k]
        v = math.asinh(mink(x, nk))
        return math.asinh(mink(x, w) / math.cosh(v))

    # offsets along gamma, stitched between consecutive usable frames
    off = {0: 0.0}
    for step in (1, -1):
        last, M = 0, np.eye(3)
        for k in range(step, step * (n + 1), step):
            M = M @ (mats[idx(k)] if step > 0 else imats[idx(k + 1)])
            if k in frames:
                off[k] = off[last] + foot_param(last, M @ o)
                last, M = k, np.eye(3)
    d0 = abs(math.asinh(mink(o, frames[0][0])))
    half = cfg.R / 2
    if max(off.values()) < half or min(off.values()) > -half:
        raise HorizonError("horizon too small to cover the window range")
    result = OmegaWitness(False, d0, None, (ang(P[0]), ang(Q[0])))
    if not d0 < cfg.R / 10:
        return result if detail else False

    s = np.arange(-half, half + cfg.dt / 2, cfg.dt)
    w_len = int(round(cfg.L / cfg.dt))
    axis = set(cfg.axis_gens)
    group_close = None
    group_start = -n
    for k in range(-n, n + 1):
        if k > -n and idx(k) not in axis:
            if group_close is not None:
                hit = _window_hit(group_close, w_len)
                if hit is not None:
                    result.event, result.window = True, (float(s[hit]), group_start)
                    return result if detail else True
            group_close, group_start = None, k
        if k not in frames:
            continue
        nk, f, w = frames[k]
        sig = s - off[k]
        near = np.abs(sig) <= cfg.reach
        y = np.cosh(np.where(near, sig, 0.0)) * f[1] + np.sinh(np.where(near, sig, 0.0)) * w[1]
        close = near & (np.abs(np.arcsinh(y)) <= cfg.C)
        group_close = close if group_close is None else group_close | close
    hit = _window_hit(group_close, w_len)
    if hit is not None:
        result.event, result.window = True, (float(s[hit]), group_start)
    return result if detail else result.event


def _window_hit(close, w):
    """First center index with all 2w + 1 samples close (centers keep the window inside the grid)."""
    cs = np.concatenate([[0], np.cumsum(close)])
    k = np.arange(w, len(close) - w)
    if len(k) == 0:
        return None
    full = cs[k + w + 1] - cs[k - w] == 2 * w + 1
    return int(k[np.argmax(full)]) if full.any() else None


def omega_probability(mu, cfg: OmegaConfig, paths, seed=0, workers=1):
    """Monte Carlo P(Omega) over independent bilateral paths; returns (p, stderr, horizon failures)."""
    n = cfg.n

    def one(t):
        p = sample_path(mu, 2 * n, seed, back=2 * n, trial=t)
        try:
            return 1 if omega_event(p, cfg) else 0
        except HorizonError:
            return -1

    vals = np.array(_map(one, range(paths), workers))
    fails = int(np.sum(vals < 0))
    ok = vals[vals >= 0]
    p = float(ok.mean()) if len(ok) else float("nan")
    return p, float(math.sqrt(p * (1 - p) / max(len(ok), 1))), fails


def birkhoff_fraction(path: SamplePath, cfg: OmegaConfig, N, event=None):
    """Exact fraction of i in [0, N) with the event holding for U^i omega."""
    event = omega_event if event is None else event
    need = 2 * cfg.n
    if path.back < need or path.n < N + need:
        raise HorizonError(f"path too short for {N} shifts")
    hits = sum(1 for i in range(N) if event(shift(path, i), cfg))
    return hits / N
