"""Experiment configs, the ``sublinmorse`` command line, and report emission.

Every experiment is a pure function of its config and master seed. Worker
counts only change how independent trials are scheduled, so the verdict file
is byte-identical across them; wall-clock facts go to a separate run file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import groups as G
from . import kappa as K
from . import measures as M
from .contraction import contraction_search
from .freqcontract import (
    DEFAULT_RADII,
    frequent_window_check,
    projection_growth,
    ray_corpus,
    reference_library,
    thick_fraction_limit,
    thick_profile,
)
from .spaces import EuclideanPlane, HyperbolicPlane, ProductSpace, RegularTree, parse_space


class ConfigError(ValueError):
    pass


# per-experiment parameters and their defaults
PARAMS = {
    "contract": {"target": "x-axis", "radii": [5, 10, 20, 50], "trials": 1000, "N": None},
    "projgrowth": {"target": "ray:0", "radii": list(DEFAULT_RADII), "trials": 1000},
    "thick": {"target": "ray:1.5707963267948966", "T": [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000], "L": 5.0, "C": 2.0, "dt": None},
    "freqcheck": {"target": "ray:1.5707963267948966", "L": 5.0, "C": 2.0, "theta": 0.25,
                  "radii": [200, 400, 800], "dt": None},
    "census": {"gens": "free2", "R": 5, "s": []},
    "walk": {"mu": "srw4", "n": 2000, "trials": 200, "track_n": 0, "track_trials": 0},
    "omega": {"mu": "schottky", "L": 5.0, "C": 2.0, "R": [20, 40, 80], "paths": 1000,
              "birkhoff_R": None, "birkhoff_N": 0},
    "psmeasure": {"gens": "free2", "R": 5, "bins": None, "basepoint": None},
    "hitmeasure": {"mu": "srw4", "n": 1000, "trials": 100000, "bins": None},
    "survey": {"measure": None, "samples": 50, "trials": 100},
    "kappa-fit": {"profile": None, "R": None, "values": None},
}

# experiments whose native space is fixed by their group or measure
NO_SPACE = {"census", "walk", "omega", "psmeasure", "hitmeasure", "survey", "kappa-fit"}


@dataclass
class ExperimentConfig:
    experiment: str
    space: str | None = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in PARAMS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        extra = set(self.params) - set(PARAMS[self.experiment])
        if extra:
            raise ConfigError(f"unknown parameters for {self.experiment}: {sorted(extra)}")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.params = {**PARAMS[self.experiment], **self.params}

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {"experiment", "space", "params", "seed", "workers", "out"}
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        if "experiment" not in obj:
            raise ConfigError("config needs an experiment name")
        return cls(**obj)


def clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps(obj):
    return json.dumps(clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# targets


def parse_letters(text):
    """``aB`` -> (1, -2): lowercase letters are generators, uppercase their inverses."""
    out = []
    for ch in text:
        if not ch.isalpha():
            raise ConfigError(f"bad letter {ch!r}")
        i = ord(ch.lower()) - ord("a") + 1
        out.append(i if ch.islower() else -i)
    return tuple(out)


def parse_target(space, text):
    """Geodesic from a short description.

    ``x-axis`` and ``line:<angle>`` are lines through o (planes; the tree axis of
    ``a``); ``ray:<angle>`` leaves o toward an ideal point; trees take
    ``axis:<letters>`` and ``ray:<prefix>/<tail>``; products take ``diag``;
    ``corpus:<name>`` picks a named example ray.
    """
    kind, _, arg = text.partition(":")
    if kind == "corpus":
        for c in ray_corpus():
            if c.name == arg:
                return c.space, c.ray
        raise ConfigError(f"no corpus ray {arg!r}")
    if isinstance(space, ProductSpace):
        if text != "diag":
            raise ConfigError("product targets: diag")
        X, Y = space.factors
        rays = [F.ray(F.ideal((), (1,))) if isinstance(F, RegularTree) else F.ray(F.ideal(0.0)) for F in (X, Y)]
        return space, space.combine(rays[0], rays[1], math.pi / 4)
    if isinstance(space, RegularTree):
        if text == "x-axis":
            return space, space.axis((1,))
        if kind == "axis":
            return space, space.axis(parse_letters(arg))
        if kind == "ray":
            prefix, _, tail = arg.partition("/")
            return space, space.ray(space.ideal(parse_letters(prefix), parse_letters(tail)))
        raise ConfigError(f"bad tree target {text!r}")
    try:
        angle = 0.0 if text == "x-axis" else float(arg)
    except ValueError:
        raise ConfigError(f"bad angle in {text!r}") from None
    if kind == "ray":
        return space, space.ray(space.ideal(angle))
    if text == "x-axis" or kind == "line":
        c, s = math.cos(angle), math.sin(angle)
        if isinstance(space, EuclideanPlane):
            return space, space.line(np.zeros(2), np.array([c, s]))
        if isinstance(space, HyperbolicPlane):
            return space, space.line(np.array([0.0, 0.0, 1.0]), np.array([c, s, 0.0]))
    raise ConfigError(f"bad target {text!r} for {space.tag}")


def generators(name):
    if name == "schottky":
        return G.schottky_generators()
    if name.startswith("free"):
        return G.free_generators(int(name[4:]))
    raise ConfigError(f"unknown generating set {name!r}")


def walk(name):
    if name.endswith("-srw"):
        name = name[:-4]
    try:
        return G.named_measure(name)
    except (G.GroupError, ValueError, KeyError) as err:
        raise ConfigError(f"unknown walk {name!r}") from err


# experiments; each returns (verdict dict, {series name: (header, rows)})


def _space(cfg, default):
    try:
        return parse_space(cfg.space or default)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def run_contract(cfg):
    p = cfg.params
    space, Z = parse_target(_space(cfg, "e2"), p["target"])
    N = math.inf if p["N"] is None else float(p["N"])
    rep = contraction_search(space, Z, N, radii=tuple(p["radii"]), trials=p["trials"], seed=cfg.seed,
                             workers=cfg.workers)
    return rep.to_json(), {"per_radius": (["R", "N"], list(zip(rep.radii, rep.per_radius)))}


def run_projgrowth(cfg):
    p = cfg.params
    space, ray = parse_target(_space(cfg, "h2"), p["target"])
    prof = projection_growth(space, ray, tuple(p["radii"]), p["trials"], seed=cfg.seed, workers=cfg.workers)
    rows = list(zip(prof.radii, prof.kappa_hat, prof.theta_hat))
    return prof.to_json(), {"growth": (["R", "kappa_hat", "theta_hat"], rows)}


def _library_and_ray(cfg):
    space, ray = parse_target(_space(cfg, "glued"), cfg.params["target"])
    return space, ray, reference_library(space, seed=cfg.seed)


def run_thick(cfg):
    p = cfg.params
    space, ray, lib = _library_and_ray(cfg)
    prof = thick_profile(lib, ray, p["T"], p["L"], p["C"], p["dt"])
    rows = prof.rows()
    try:
        limit = thick_fraction_limit(prof)
    except ValueError:
        limit = None  # too few horizons to call a limit
    verdict = {"L": p["L"], "C": p["C"], "T": list(p["T"]), "fraction": [r[2] for r in rows],
               "limit": limit, "library": lib.kind, "N": lib.N}
    return verdict, {"thick": (["T", "thick", "fraction"], rows)}


def run_freqcheck(cfg):
    p = cfg.params
    space, ray, lib = _library_and_ray(cfg)
    res = frequent_window_check(lib, ray, lib.N, p["C"], p["L"], p["theta"], tuple(p["radii"]), p["dt"])
    return {"passed": all(r.passed for r in res), "windows": [r.to_json() for r in res],
            "library": lib.kind, "N": lib.N}, {}


def run_census(cfg):
    p = cfg.params
    c = G.orbit_census(generators(p["gens"]), p["R"], s_values=tuple(p["s"]))
    rows = [(r, s, b) for r, (s, b) in enumerate(zip(c.shells, c.ball))]
    return c.to_json(), {"census": (["r", "shell", "ball"], rows)}


def run_walk(cfg):
    p = cfg.params
    mu = walk(p["mu"])
    mean, se = G.drift_estimate(mu, p["n"], p["trials"], seed=cfg.seed, workers=cfg.workers)
    verdict = {"drift": mean, "stderr": se, "n": p["n"], "trials": p["trials"]}
    series = {}
    if p["track_trials"]:
        n = p["track_n"] or p["n"]
        ks = [n // 8, n // 4, n // 2, n]

        def one(t):
            # the ray is read off four times further out, standing in for the limit end
            path = G.sample_path(mu, 4 * n, cfg.seed, trial=t)
            return G.tracking_deficit(path, G.limit_end_ray(path), mean, ks).deficit

        rows = G._map(one, range(p["track_trials"]), cfg.workers)
        last = np.array([r[-1] for r in rows])
        verdict["tracking"] = {"n": n, "checkpoints": ks, "fraction_below_0.1": float(np.mean(last < 0.1)),
                               "max_deficit": float(last.max())}
        series["tracking"] = (["trial"] + [f"k{k}" for k in ks], [[t] + list(r) for t, r in enumerate(rows)])
    return verdict, series


def run_omega(cfg):
    p = cfg.params
    mu = walk(p["mu"])
    rows = []
    for R in p["R"]:
        oc = G.OmegaConfig(L=p["L"], C=p["C"], R=float(R))
        pr, se, fails = G.omega_probability(mu, oc, p["paths"], seed=cfg.seed, workers=cfg.workers)
        rows.append((R, pr, se, fails))
    ps = [r[1] for r in rows]
    verdict = {"R": list(p["R"]), "p": ps, "stderr": [r[2] for r in rows], "horizon_failures": [r[3] for r in rows],
               "nondecreasing": bool(all(a <= b for a, b in zip(ps, ps[1:]))), "paths": p["paths"]}
    if p["birkhoff_N"]:
        R = float(p["birkhoff_R"] or p["R"][0])
        oc = G.OmegaConfig(L=p["L"], C=p["C"], R=R)
        N, m = int(p["birkhoff_N"]), 2 * oc.n
        path = G.sample_path(mu, N + m, cfg.seed, back=m, trial=2 ** 31)
        verdict["birkhoff"] = {"R": R, "N": N, "fraction": G.birkhoff_fraction(path, oc, N)}
    return verdict, {"omega": (["R", "p", "stderr", "horizon_failures"], rows)}


def _measure_rows(nu):
    if nu.binning.kind == "angle":
        return (["bin", "center", "weight"], [(i, c, w) for i, (c, w) in enumerate(zip(nu.binning.centers(), nu.weights))])
    letters = "abcdefghij"
    names = ["".join(letters[abs(a) - 1] if a > 0 else letters[abs(a) - 1].upper() for a in w) for w in nu.binning.words]
    return (["bin", "cylinder", "weight"], [(i, n, w) for i, (n, w) in enumerate(zip(names, nu.weights))])


def run_psmeasure(cfg):
    p = cfg.params
    S = generators(p["gens"])
    base = None
    if p["basepoint"] is not None:
        base = HyperbolicPlane().polar(*p["basepoint"])
    nu = M.ball_average_measure(S, p["R"], p["bins"], base)
    return nu.to_json(), {"measure": _measure_rows(nu)}


def run_hitmeasure(cfg):
    p = cfg.params
    mu = walk(p["mu"])
    nu = M.hitting_measure(mu, p["n"], p["trials"], p["bins"], seed=cfg.seed, workers=cfg.workers)
    out = nu.to_json()
    try:
        out["stationarity_residual"] = M.stationarity_residual(nu, mu)
        if nu.samples is not None:
            out["stationarity_residual_centers"] = M.stationarity_residual(nu, mu, "centers")
    except M.UnsupportedSpace as err:
        out["stationarity_residual"] = None
        out["stationarity_note"] = str(err)
    return out, {"measure": _measure_rows(nu)}


def run_survey(cfg):
    p = cfg.params
    src = p["measure"]
    if src is None:
        raise ConfigError("survey needs a measure (file path or uniform:<space>)")
    if isinstance(src, str) and src.startswith("uniform:"):
        tag = src[8:]
        b = M.binning_for(tag)
        nu = M.EmpiricalBoundaryMeasure(tag, b, np.full(b.size, 1.0 / b.size), {"kind": "uniform"})
    else:
        obj = json.loads(Path(src).read_text()) if isinstance(src, str) else src
        nu = M.EmpiricalBoundaryMeasure.from_json(obj.get("verdict", obj))
    res = M.generic_morse_survey(nu, p["samples"], M.SurveyConfig(trials=p["trials"]), seed=cfg.seed)
    return res.to_json(), {}


def run_kappa_fit(cfg):
    p = cfg.params
    if p["profile"] is not None:
        r, v = K.read_profile(p["profile"])
    elif p["R"] is not None and p["values"] is not None:
        r, v = np.asarray(p["R"], float), np.asarray(p["values"], float)
    else:
        raise ConfigError("kappa-fit needs a profile file or R and values")
    sel = K.select_dominating(r, v)
    return {"sublinear": sel.sublinear, "fit": sel.label, "c": sel.constant, "tail_exponent": sel.exponent}, {}


RUNNERS = {
    "contract": run_contract, "projgrowth": run_projgrowth, "thick": run_thick, "freqcheck": run_freqcheck,
    "census": run_census, "walk": run_walk, "omega": run_omega, "psmeasure": run_psmeasure,
    "hitmeasure": run_hitmeasure, "survey": run_survey, "kappa-fit": run_kappa_fit,
}


# reports


@dataclass
class ReportBundle:
    config: ExperimentConfig
    verdict: dict | None
    series: dict
    runtime: float
    version: str = __version__
    error: dict | None = None

    @property
    def ok(self):
        return self.error is None

    def verdict_json(self):
        """Deterministic part: no timings, no worker count, no paths."""
        c = self.config
        return dumps({"experiment": c.experiment, "space": c.space, "params": c.params, "seed": c.seed,
                      "version": self.version, "verdict": self.verdict, "error": self.error})

    def run_json(self):
        return dumps({"workers": self.config.workers, "runtime_s": self.runtime,
                      "series": {k: len(rows) for k, (_, rows) in self.series.items()}})


def run(config: ExperimentConfig) -> ReportBundle:
    """Run one experiment; module errors come back as a structured ``error`` entry."""
    t0 = time.perf_counter()
    try:
        verdict, series = RUNNERS[config.experiment](config)
        error = None
    except (ValueError, ArithmeticError, NotImplementedError) as err:
        verdict, series = None, {}
        error = {"type": type(err).__name__, "message": str(err)}
        partial = getattr(err, "partial", None)
        if partial is not None and hasattr(partial, "to_json"):
            error["partial"] = partial.to_json()
    return ReportBundle(config, verdict, series, time.perf_counter() - t0, error=error)


def emit(report: ReportBundle, out, force=False):
    """Write verdict.json, run.json and one CSV per series; refuses to overwrite without ``force``."""
    out = Path(out)
    files = {"verdict.json": report.verdict_json(), "run.json": report.run_json()}
    targets = [out / n for n in files] + [out / f"{k}.csv" for k in report.series]
    clash = [str(p) for p in targets if p.exists()]
    if clash and not force:
        raise FileExistsError(f"refusing to overwrite {clash} (use --force)")
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    for name, (header, rows) in report.series.items():
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([clean(v) for v in row])
    return targets


# command line


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


LISTY = {"values", "R", "basepoint", "s"}


def build_parser():
    glob = _Parser(add_help=False)
    glob.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    glob.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    glob.add_argument("--out", default=argparse.SUPPRESS)
    glob.add_argument("--force", action="store_true", default=argparse.SUPPRESS)
    p = _Parser(prog="sublinmorse", parents=[glob], description="Sublinear-contraction experiments.")
    p.add_argument("--config", help="JSON ExperimentConfig; command-line values override it")
    sub = p.add_subparsers(dest="experiment")
    for name, params in PARAMS.items():
        sp = sub.add_parser(name, parents=[glob])
        if name not in NO_SPACE:
            sp.add_argument("--space", default=argparse.SUPPRESS)
        for key, default in params.items():
            flag = "--" + key
            if isinstance(default, list) or (default is None and key in LISTY):
                sp.add_argument(flag, nargs="+", type=_value, default=argparse.SUPPRESS)
            elif isinstance(default, bool):
                sp.add_argument(flag, type=lambda t: t.lower() in ("1", "true", "yes"), default=argparse.SUPPRESS)
            else:
                sp.add_argument(flag, type=_value, default=argparse.SUPPRESS)
    return p


def config_from_args(argv):
    ns = vars(build_parser().parse_args(argv))
    base = {}
    if ns.get("config"):
        base = json.loads(Path(ns["config"]).read_text())
    exp = ns.get("experiment") or base.get("experiment")
    if exp is None:
        raise UsageError("no experiment given")
    if base and base.get("experiment", exp) != exp:
        raise UsageError("config file names a different experiment")
    params = dict(base.get("params", {}))
    for key in PARAMS[exp]:
        if key in ns:
            params[key] = ns[key]
    obj = {**base, "experiment": exp, "params": params}
    for key in ("space", "seed", "workers", "out"):
        if key in ns:
            obj[key] = ns[key]
    return ExperimentConfig.from_json(obj), bool(ns.get("force", False))


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, force = config_from_args(argv)
    except (UsageError, ConfigError, json.JSONDecodeError, OSError, TypeError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    report = run(cfg)
    if cfg.out:
        try:
            emit(report, cfg.out, force)
        except OSError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(report.verdict_json())
    if not report.ok:
        print(f"{report.error['type']}: {report.error['message']}", file=sys.stderr)
        return 2
    return 0
