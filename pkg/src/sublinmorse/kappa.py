"""Sublinear functions, their concave regularization, and dominating-family selection."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ABS_TOL = 1e-9
REL_TOL = 1e-3

# Knot grid used when a parametric function must be replaced by its concave majorant.
_REG_GRID = np.concatenate([[0.0], np.geomspace(1e-3, 1e16, 1200)])
# Grid for the midpoint concavity test of parametric functions.
_CONCAVITY_GRID = np.concatenate([[0.0], np.geomspace(1e-3, 1e12, 600)])


class KappaError(ValueError):
    """Raised for domain violations and rejected inputs."""


@dataclass(frozen=True)
class SublinearFn:
    """A function kappa: [0, inf) -> [1, inf), monotone, concave and sublinear.

    ``kind`` is ``"parametric"`` (closed form ``max(1, c (1+t)^alpha log(2+t)^beta)``)
    or ``"tabulated"`` (piecewise linear through ``knots``). Parametric members whose
    closed form fails the concavity test are stored tabulated, but keep ``c``,
    ``alpha`` and ``beta`` so their asymptotic exponent stays known.
    """

    kind: str
    c: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    knots_t: tuple[float, ...] = ()
    knots_v: tuple[float, ...] = ()
    regularized: bool = False

    def __post_init__(self):
        if self.kind not in ("parametric", "tabulated"):
            raise KappaError(f"unknown kind {self.kind!r}")
        if self.kind == "parametric":
            if not (self.c > 0 and 0 <= self.alpha < 1 and self.beta >= 0):
                raise KappaError(f"parameters out of range: c={self.c}, alpha={self.alpha}, beta={self.beta}")
        else:
            if len(self.knots_t) < 2 or len(self.knots_t) != len(self.knots_v):
                raise KappaError("tabulated kappa needs >= 2 matching knots")
            if np.any(np.diff(self.knots_t) <= 0):
                raise KappaError("knots must be strictly increasing")

    def __call__(self, t):
        return evaluate(self, t)

    @property
    def label(self) -> str:
        return f"kappa:pow={self.alpha:g},log={self.beta:g},c={self.c:g}"


def _raw_parametric(c: float, alpha: float, beta: float, t: np.ndarray) -> np.ndarray:
    return np.maximum(1.0, c * (1.0 + t) ** alpha * np.log(2.0 + t) ** beta)


def evaluate(kappa: SublinearFn, t):
    """Evaluate kappa at ``t >= 0`` (scalar or array)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise KappaError("kappa is only defined for t >= 0")
    if kappa.kind == "parametric":
        out = _raw_parametric(kappa.c, kappa.alpha, kappa.beta, arr)
    else:
        kt = np.asarray(kappa.knots_t)
        kv = np.asarray(kappa.knots_v)
        out = np.interp(arr, kt, kv)
        # slope-capped linear extension past the last knot
        slope = max(0.0, (kv[-1] - kv[-2]) / (kt[-1] - kt[-2]))
        beyond = arr > kt[-1]
        if np.any(beyond):
            out = np.where(beyond, kv[-1] + slope * (arr - kt[-1]), out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def is_concave_on(values_t: np.ndarray, values: np.ndarray, tol: float = ABS_TOL) -> bool:
    """Discrete concavity: every interior knot lies on or above its neighbours' chord."""
    t = np.asarray(values_t, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < 3:
        return True
    lam = (t[1:-1] - t[:-2]) / (t[2:] - t[:-2])
    chord = (1 - lam) * v[:-2] + lam * v[2:]
    scale = np.maximum(1.0, np.abs(v[1:-1]))
    return bool(np.all(v[1:-1] >= chord - tol * scale))


def midpoint_concave(kappa: SublinearFn, grid: np.ndarray | None = None, tol: float = ABS_TOL) -> bool:
    """kappa((s+t)/2) >= (kappa(s)+kappa(t))/2 - tol for consecutive and spread grid pairs."""
    g = _CONCAVITY_GRID if grid is None else np.asarray(grid, dtype=float)
    for step in (1, 3, 17):
        s, t = g[:-step], g[step:]
        lhs = evaluate(kappa, 0.5 * (s + t))
        rhs = 0.5 * (evaluate(kappa, s) + evaluate(kappa, t))
        if np.any(lhs < rhs - tol * np.maximum(1.0, rhs)):
            return False
    return True


def parametric(alpha: float = 0.0, beta: float = 0.0, c: float = 1.0) -> SublinearFn:
    """Build ``max(1, c (1+t)^alpha log(2+t)^beta)``, regularized if not concave."""
    kappa = SublinearFn("parametric", c=float(c), alpha=float(alpha), beta=float(beta))
    if midpoint_concave(kappa):
        return kappa
    values = _raw_parametric(kappa.c, kappa.alpha, kappa.beta, _REG_GRID)
    # alpha < 1 already makes it sublinear; the finite grid cannot say otherwise
    reg, _ = regularize(_REG_GRID, values, ratio_threshold=np.inf)
    return SublinearFn(
        "tabulated", c=kappa.c, alpha=kappa.alpha, beta=kappa.beta,
        knots_t=reg.knots_t, knots_v=reg.knots_v, regularized=True,
    )


def tabulated(t: Sequence[float], values: Sequence[float]) -> SublinearFn:
    return SublinearFn("tabulated", knots_t=tuple(map(float, t)), knots_v=tuple(map(float, values)))


def scaling_check(kappa: SublinearFn, a: float, t: float, tol: float = ABS_TOL) -> tuple[bool, float]:
    """Check kappa(a t) <= a kappa(t); returns (passed, margin) with margin = a kappa(t) - kappa(a t)."""
    if a < 1:
        raise KappaError("scaling factor must be >= 1")
    if t < 0:
        raise KappaError("kappa is only defined for t >= 0")
    margin = a * evaluate(kappa, t) - evaluate(kappa, a * t)
    return margin >= -tol * max(1.0, a * evaluate(kappa, t)), float(margin)


def _upper_hull(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Indices of the upper concave hull vertices (monotone chain)."""
    hull: list[int] = []
    for i in range(len(t)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (t[i1] - t[i0]) * (v[i] - v[i0]) - (v[i1] - v[i0]) * (t[i] - t[i0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull)


def regularize(t: Sequence[float], values: Sequence[float],
               ratio_threshold: float = 0.5) -> tuple[SublinearFn, float]:
    """Least concave monotone majorant of ``max(f, 1)`` on the knot grid.

    Returns the regularized function and the constant ``C = max(out / max(f, 1))``.
    Rejects ``f`` with ``f(t_max)/t_max >= ratio_threshold`` as not sublinear on its grid.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < 2 or len(t) != len(v):
        raise KappaError("need at least two knots with matching values")
    if np.any(np.diff(t) <= 0) or t[0] < 0:
        raise KappaError("knots must be nonnegative and strictly increasing")
    if np.any(v < 0):
        raise KappaError("function must be nonnegative")
    if t[-1] > 0 and v[-1] / t[-1] >= ratio_threshold:
        raise KappaError(f"f(t_max)/t_max = {v[-1] / t[-1]:.3g} >= {ratio_threshold}: not sublinear on grid")
    floor = np.maximum(v, 1.0)
    idx = _upper_hull(t, floor)
    out = np.interp(t, t[idx], floor[idx])
    peak = int(np.argmax(out))
    out[peak:] = out[peak]
    out = np.maximum(out, floor)
    const = float(np.max(out / floor))
    return tabulated(t, out), const


@dataclass(frozen=True)
class KappaFamily:
    """Finite truncation of a countable family of sublinear functions, ordered by (alpha, beta)."""

    members: tuple[SublinearFn, ...]
    c_max: float = 20.0
    slope_tol: float = 0.1

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> SublinearFn:
        return self.members[i]


def default_family(c_max: float = 20.0) -> KappaFamily:
    members = [parametric(a, b) for a in (0.0, 0.25, 0.5, 0.75) for b in (0.0, 1.0, 2.0)]
    return KappaFamily(tuple(members), c_max=c_max)


_DEFAULT_FAMILY: KappaFamily | None = None


def cached_default_family() -> KappaFamily:
    global _DEFAULT_FAMILY
    if _DEFAULT_FAMILY is None:
        _DEFAULT_FAMILY = default_family()
    return _DEFAULT_FAMILY


def tail_exponent(r: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log max(value, 1) vs log R over the upper half (in log R) of the grid."""
    r = np.asarray(r, dtype=float)
    v = np.maximum(np.asarray(values, dtype=float), 1.0)
    keep = r > 0
    r, v = r[keep], v[keep]
    if len(r) < 2:
        return 0.0
    lr = np.log(r)
    top = lr >= 0.5 * (lr.min() + lr.max())
    if top.sum() < 2:
        top = np.ones_like(lr, dtype=bool)
    x, y = lr[top], np.log(v[top])
    if np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class Selection:
    index: int | None
    constant: float | None
    exponent: float
    label: str | None = None
    constants: list[float] = field(default_factory=list)

    @property
    def sublinear(self) -> bool:
        return self.index is not None


def select_dominating(r: Sequence[float], values: Sequence[float],
                      family: KappaFamily | None = None) -> Selection:
    """Smallest family index dominating the profile up to a constant ``C <= c_max``.

    A member qualifies when ``values <= C kappa_i`` on the grid with ``C <= c_max`` and its
    power ``alpha_i`` is at least the profile's tail exponent minus ``slope_tol``; the second
    condition keeps a log-power member from "dominating" a power profile only because the
    grid is finite.
    """
    family = cached_default_family() if family is None else family
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if r.size == 0 or r.size != v.size:
        raise KappaError("empty or mismatched profile")
    if np.any(v < 0) or np.any(r < 0):
        raise KappaError("profile must be nonnegative")
    s_hat = tail_exponent(r, v)
    constants = []
    chosen = None
    for i, kappa in enumerate(family.members):
        c_i = float(np.max(v / evaluate(kappa, r)))
        constants.append(c_i)
        if chosen is None and c_i <= family.c_max and kappa.alpha >= s_hat - family.slope_tol:
            chosen = i
    if chosen is None:
        return Selection(None, None, s_hat, None, constants)
    return Selection(chosen, constants[chosen], s_hat, family.members[chosen].label, constants)


_KAPPA_RE = re.compile(r"^kappa:(.*)$")


def parse_kappa(text: str) -> SublinearFn:
    """Parse ``kappa:pow=<alpha>,log=<beta>,c=<c>`` (any subset of keys, any order)."""
    m = _KAPPA_RE.match(text.strip())
    if not m:
        raise KappaError(f"bad kappa string {text!r}")
    params = {"pow": 0.0, "log": 0.0, "c": 1.0}
    body = m.group(1).strip()
    if body:
        for part in body.split(","):
            key, _, val = part.partition("=")
            key = key.strip()
            if key not in params or not val:
                raise KappaError(f"bad kappa field {part!r}")
            params[key] = float(val)
    return parametric(params["pow"], params["log"], params["c"])


def read_profile(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``R,value`` CSV (header optional)."""
    rs, vs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rs.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError:
                continue
    return np.asarray(rs), np.asarray(vs)


def write_profile(path: str | Path, r: Sequence[float], values: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["R", "value"])
        for a, b in zip(r, values):
            w.writerow([repr(float(a)), repr(float(b))])

