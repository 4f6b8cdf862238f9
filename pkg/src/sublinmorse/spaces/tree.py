"""The (2k)-regular tree, realized as the Cayley graph of the free group F_k.

Letters are the nonzero integers -k..k, with -a the inverse of a. A vertex is a
reduced word (tuple). A point ``(w, s)`` with 0 <= s < 1 sits at distance ``s``
from vertex ``w`` on the edge toward its parent ``w[:-1]``.

Boundary points are infinite reduced words stored as ``(prefix, tail)``: the
prefix followed by the tail repeated forever.

Every geodesic has a point nearest the identity and runs monotonically away
from it on both sides, so it is stored as two letter sequences ``W1, W2``
sharing their first ``m`` letters and a turning time ``t0``: for t <= t0 the
point sits at depth m + (t0 - t) along W1, for t >= t0 at depth m + (t - t0)
along W2.
"""

from __future__ import annotations

import math

from .base import BoundaryPoint, DomainError, Geodesic, ModelSpace, Point, Projection


def reduce_word(letters):
    out = []
    for a in letters:
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(a)
    return tuple(out)


def common_prefix(u, v):
    n = 0
    for a, b in zip(u, v):
        if a != b:
            break
        n += 1
    return n


def inverse(word):
    return tuple(-a for a in reversed(word))


class Letters:
    """An eventually periodic (or finite, if ``tail`` is empty) letter sequence."""

    def __init__(self, prefix=(), tail=()):
        self.prefix = tuple(prefix)
        self.tail = tuple(tail)

    def take(self, n):
        if n <= len(self.prefix):
            return self.prefix[:n]
        if not self.tail:
            raise DomainError("letter sequence exhausted")
        extra = n - len(self.prefix)
        reps = extra // len(self.tail) + 1
        return self.prefix + (self.tail * reps)[:extra]

    def shifted(self, n):
        if n <= len(self.prefix):
            return Letters(self.prefix[n:], self.tail)
        k = (n - len(self.prefix)) % len(self.tail)
        return Letters((), self.tail[k:] + self.tail[:k])


def point_on(letters, depth):
    """The point at ``depth`` along the path from the identity spelled by ``letters``."""
    c = max(0, math.ceil(depth - 1e-12))
    s = c - depth
    if s < 1e-12:
        s = 0.0
    return letters.take(c), s


class RegularTree(ModelSpace):
    def __init__(self, k=2):
        if k < 1:
            raise ValueError("rank must be positive")
        self.k = int(k)
        self.tag = f"tree:k={self.k}"
        self.letters = tuple(list(range(1, k + 1)) + [-a for a in range(1, k + 1)])

    def point(self, word=(), s=0.0):
        word = tuple(int(a) for a in word)
        if reduce_word(word) != word or any(a == 0 or abs(a) > self.k for a in word):
            raise DomainError(f"{word} is not a reduced word over F_{self.k}")
        if not 0 <= s < 1 or (s > 0 and not word):
            raise DomainError(f"bad edge offset {s} for {word}")
        return Point(self.tag, (word, float(s)))

    def vertex(self, word):
        return self.point(word, 0.0)

    def basepoint(self):
        return Point(self.tag, ((), 0.0))

    @staticmethod
    def depth(p):
        w, s = p.data
        return len(w) - s

    def distance(self, p, q):
        self.check(p, q)
        (w1, _), (w2, _) = p.data, q.data
        d1, d2 = self.depth(p), self.depth(q)
        m = min(common_prefix(w1, w2), d1, d2)
        return d1 + d2 - 2 * m

    # geodesics

    def segment(self, p, q):
        self.check(p, q)
        (w1, _), (w2, _) = p.data, q.data
        d1, d2 = self.depth(p), self.depth(q)
        m = min(common_prefix(w1, w2), d1, d2)
        t0 = d1 - m
        data = (Letters(w1), Letters(w2), m, t0)
        return Geodesic(self.tag, "segment", 0.0, t0 + d2 - m, data)

    def ray(self, zeta, start=None):
        if start is not None and start.data != ((), 0.0):
            raise DomainError("tree rays start at the identity")
        W = Letters(*zeta.coord)
        return Geodesic(self.tag, "ray", 0.0, math.inf, (W, W, 0, 0.0))

    def line_between(self, zeta, alpha):
        """Line from ``zeta`` (t -> -inf) to ``alpha`` (t -> +inf), t = 0 nearest the identity."""
        z, a = Letters(*zeta.coord), Letters(*alpha.coord)
        bound = 2 * (len(zeta.coord[0]) + len(alpha.coord[0])) + 4 * len(zeta.coord[1]) * len(alpha.coord[1]) + 4
        n = 0
        while n <= bound and z.take(n + 1)[-1] == a.take(n + 1)[-1]:
            n += 1
        if n > bound:
            raise DomainError("ideal points coincide")
        return Geodesic(self.tag, "line", -math.inf, math.inf, (z, a, n, 0.0))

    def axis(self, word):
        """Axis of a cyclically reduced word, through the identity, oriented along the word."""
        word = tuple(word)
        if not word or word[0] == -word[-1] or reduce_word(word) != word:
            raise DomainError("axis needs a nonempty cyclically reduced word")
        return Geodesic(self.tag, "line", -math.inf, math.inf, (Letters((), inverse(word)), Letters((), word), 0, 0.0))

    def _eval(self, geo, t):
        W1, W2, m, t0 = geo.data
        if t <= t0:
            return Point(self.tag, point_on(W1, m + (t0 - t)))
        return Point(self.tag, point_on(W2, m + (t - t0)))

    def project(self, p, geo):
        """Exact nearest point via the tripod formula on a window containing the foot."""
        self.check(p, geo)
        t0 = geo.clamp(0.0)
        d0 = self.distance(p, self._eval(geo, t0))
        lo, hi = geo.finite_window(t0, 2 * d0 + 2)
        da = self.distance(p, self._eval(geo, lo))
        db = self.distance(p, self._eval(geo, hi))
        dist = max(0.0, (da + db - (hi - lo)) / 2)
        t = min(max(lo + da - dist, lo), hi)
        return Projection(self._eval(geo, t), dist, t)

    # boundary

    def ideal(self, prefix, tail):
        prefix, tail = tuple(prefix), tuple(tail)
        word = prefix + tail * 2
        if not tail or reduce_word(word) != word:
            raise DomainError("ideal points need a reduced eventually periodic word")
        return BoundaryPoint(self.tag, (prefix, tail))

    def boundary_coord(self, p, depth=6):
        w, _ = p.data
        return w[:depth] if len(w) >= depth else None

    def busemann(self, zeta, x, y):
        """Exact: the limit is attained once z is past both branch points."""
        self.check(zeta, x, y)
        T = self.depth(x) + self.depth(y) + len(zeta.coord[0]) + len(zeta.coord[1]) + 2
        z = self._eval(self.ray(zeta), T)
        return self.distance(x, z) - self.distance(y, z)

    def random_letter(self, rng, forbidden=None):
        while True:
            a = self.letters[rng.integers(len(self.letters))]
            if a != forbidden:
                return a

    def random_point_at(self, center, r, rng):
        """A point at distance ``r``, leaving ``center`` in a uniformly random direction."""
        w, s = center.data
        if s > 0:
            if rng.random() < 0.5:
                first, forbid = w, -w[-1]
            else:
                first, forbid = w[:-1], w[-1]
        else:
            first, forbid = w, None
        word = list(first)
        for _ in range(int(math.ceil(r)) + 1):
            a = self.random_letter(rng, forbid)
            # word stays reduced, so one cancellation check per letter
            if word and word[-1] == -a:
                word.pop()
            else:
                word.append(a)
            forbid = -a
        seg = self.segment(center, Point(self.tag, (tuple(word), 0.0)))
        return self._eval(seg, min(r, seg.tmax))

    def sphere_point(self, R, rng):
        """Uniform point at distance R from the identity."""
        letters = []
        forbid = None
        for _ in range(max(1, math.ceil(R))):
            a = self.random_letter(rng, forbid)
            letters.append(a)
            forbid = -a
        return Point(self.tag, point_on(Letters(tuple(letters)), R))
