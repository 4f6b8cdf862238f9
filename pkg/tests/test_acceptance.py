"""Acceptance criteria at full size, one pass/fail line each.

Experiments go through the harness at 8 workers; the last criterion reruns
every one of them at 1 worker and compares verdict JSON byte for byte.
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import disk_distance, glued_cross_oracle
from sublinmorse import measures as M
from sublinmorse.freqcontract import ray_corpus
from sublinmorse.harness import ExperimentConfig, run
from sublinmorse.spaces import GluedPlane, HyperbolicPlane
from sublinmorse.spaces.base import busemann_truncated

FAST = 8
_runs = {}  # config key -> (config kwargs, verdict json at FAST workers, runtime)


def _key(kw):
    return json.dumps(kw, sort_keys=True)


def experiment(name, space=None, seed=0, **params):
    """Verdict dict of a harness run, cached; the runtime is charged to the caller."""
    kw = {"experiment": name, "space": space, "params": params, "seed": seed}
    k = _key(kw)
    if k not in _runs:
        rep = run(ExperimentConfig(name, space, params, seed, workers=FAST))
        assert rep.ok, rep.error
        _runs[k] = (kw, rep.verdict_json(), rep.runtime)
    return json.loads(_runs[k][1])["verdict"], _runs[k][2]


def record(n, ok, runtime, limit, detail):
    ok = ok and runtime < limit
    ACCEPTANCE[n] = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {detail} ({runtime:.1f}s, limit {limit:g}s)"
    print(ACCEPTANCE[n])
    return ok


class Clock:
    def __init__(self):
        self.t0 = time.perf_counter()
        self.charged = 0.0

    def add(self, pair):
        v, rt = pair
        self.charged += rt
        return v

    @property
    def elapsed(self):
        return self.charged + time.perf_counter() - self.t0


# 1


def test_geometry_oracles():
    clk = Clock()
    H, Gl = HyperbolicPlane(), GluedPlane()
    rng = np.random.default_rng(2024)
    worst = {}

    errs = []
    for _ in range(100):
        a, b = rng.uniform(0, 2 * math.pi, 2)
        line = H.line_between(H.ideal(a), H.ideal(b))
        p = H.polar(rng.uniform(0, 6), rng.uniform(0, 2 * math.pi))
        cf, srch = H.project(p, line), H.project_search(p, line)
        errs.append(max(abs(cf.t - srch.t), abs(cf.dist - srch.dist)))
    worst["projection"] = max(errs)

    errs = []
    for _ in range(100):
        z = H.ideal(rng.uniform(0, 2 * math.pi))
        x = H.polar(rng.uniform(0, 6), rng.uniform(0, 2 * math.pi))
        y = H.polar(rng.uniform(0, 6), rng.uniform(0, 2 * math.pi))
        errs.append(abs(H.busemann(z, x, y) - busemann_truncated(H, z, x, y)))
    worst["busemann"] = max(errs)

    errs = []
    for _ in range(100):
        p = H.polar(rng.uniform(0, 6), rng.uniform(0, 2 * math.pi))
        q = H.polar(rng.uniform(0, 6), rng.uniform(0, 2 * math.pi))
        errs.append(abs(H.distance(p, q) - disk_distance(p.data, q.data)))
    worst["distance"] = max(errs)

    errs = []
    for _ in range(50):
        x, u = rng.uniform(-5, 5, 2)
        y, v = rng.uniform(0.01, 5, 2)
        d = Gl.distance(Gl.point("F", x, y), Gl.point("H", u, v))
        errs.append(abs(d - glued_cross_oracle(x, y, u, v)))
    worst["glued"] = max(errs)

    ok = all(e < 1e-6 for e in worst.values())
    detail = "max errors " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert record(1, ok, clk.elapsed, 10, detail)


# 2


def test_contraction_dichotomy():
    clk = Clock()
    e2 = clk.add(experiment("contract", "e2", target="x-axis", radii=[10, 100]))
    tree = clk.add(experiment("contract", "tree:k=2", target="x-axis", radii=[5, 10, 20, 50]))
    h2 = clk.add(experiment("contract", "h2", target="x-axis", radii=[5, 10, 20, 50]))
    flat = all(n >= 0.9 * R for n, R in zip(e2["per_radius"], e2["radii"]))
    # the tree sampler works on vertices and their edges, and projections land exactly
    thin = max(tree["per_radius"]) <= 0.0
    h = h2["per_radius"]
    stable = max(h) - min(h) <= 0.1 * max(h)
    detail = (f"E2 {[round(n, 2) for n in e2['per_radius']]}, tree max {max(tree['per_radius'])}, "
              f"H2 {[round(n, 3) for n in h]}")
    assert record(2, flat and thin and stable, clk.elapsed, 60, detail)


# 3

UP, DOWN = "ray:1.5707963267948966", "ray:4.71238898038469"


def test_alternating_glued_ray():
    clk = Clock()
    thick = clk.add(experiment("thick", "glued", target=UP))
    check = clk.add(experiment("freqcheck", "glued", target=UP))
    growth = clk.add(experiment("projgrowth", "glued", target=UP))
    flat_check = clk.add(experiment("freqcheck", "glued", target=DOWN))
    flat_growth = clk.add(experiment("projgrowth", "glued", target=DOWN))

    frac = thick["fraction"][thick["T"].index(1000)]
    th = dict(zip(growth["radii"], growth["theta_hat"]))
    ok = (abs(frac - 0.5) <= 0.05 and check["passed"]
          and [w["R"] for w in check["windows"]] == [200, 400, 800]
          and growth["verdict"] == "sublinear" and th[800] <= th[100] / 2
          and not flat_check["passed"] and flat_growth["verdict"] == "not sublinear"
          and min(flat_growth["theta_hat"]) >= 0.5)
    detail = (f"thick {frac:.3f}, window {check['passed']}, theta(100) {th[100]:.4f} theta(800) {th[800]:.4f}, "
              f"flat window {flat_check['passed']} min theta {min(flat_growth['theta_hat']):.3f}")
    assert record(3, ok, clk.elapsed, 300, detail)


# 4


def test_implication_over_corpus():
    clk = Clock()
    names = [c.name for c in ray_corpus()]
    bad, rows = [], []
    for name in names:
        g = clk.add(experiment("projgrowth", target=f"corpus:{name}"))
        w = clk.add(experiment("freqcheck", target=f"corpus:{name}"))
        rows.append(f"{name}:{'P' if w['passed'] else '-'}{'S' if g['verdict'] == 'sublinear' else '-'}")
        if w["passed"] and g["verdict"] != "sublinear":
            bad.append(name)
    ok = len(names) >= 12 and not bad
    detail = f"{len(names)} rays, violations {bad or 'none'}; " + " ".join(rows)
    assert record(4, ok, clk.elapsed, 600, detail)


# 5


def test_free_group_growth():
    clk = Clock()
    c5 = clk.add(experiment("census", gens="free2", R=5))
    c12 = clk.add(experiment("census", gens="free2", R=12))
    ok = c5["ball"][-1] == 485 and abs(c12["delta_hat"] - math.log(3)) <= 0.05
    detail = f"|B(5)| = {c5['ball'][-1]}, delta_hat(12) = {c12['delta_hat']:.4f} vs log 3 = {math.log(3):.4f}"
    assert record(5, ok, clk.elapsed, 30, detail)


# 6, 7


def test_drift():
    clk = Clock()
    srw = clk.add(experiment("walk", mu="srw4", n=2000, trials=200))
    lazy = clk.add(experiment("walk", mu="lazy4", n=2000, trials=200))
    ok = abs(srw["drift"] - 0.5) <= 0.02 and abs(lazy["drift"] - 0.25) <= 0.02
    detail = f"srw {srw['drift']:.4f} +- {srw['stderr']:.4f}, lazy {lazy['drift']:.4f} +- {lazy['stderr']:.4f}"
    assert record(6, ok, clk.elapsed, 60, detail)


def test_tracking():
    clk = Clock()
    v = clk.add(experiment("walk", mu="srw4", n=2000, trials=200, track_n=1000, track_trials=100))
    tr = v["tracking"]
    ok = tr["n"] == 1000 and tr["fraction_below_0.1"] >= 0.95
    detail = f"fraction of trials with deficit < 0.1 at n = 1000: {tr['fraction_below_0.1']:.2f}, max {tr['max_deficit']:.4f}"
    assert record(7, ok, clk.elapsed, 120, detail)


# 8


def test_omega_decay():
    clk = Clock()
    v = clk.add(experiment("omega", mu="schottky", L=5.0, C=2.0, R=[20, 40, 80], paths=1000,
                           birkhoff_R=40, birkhoff_N=500))
    p = dict(zip(v["R"], v["p"]))
    b = v["birkhoff"]["fraction"]
    ok = v["nondecreasing"] and p[80] > 0.8 and abs(b - p[40]) <= 0.05
    detail = (f"P(Omega) {[round(x, 3) for x in v['p']]} at R {v['R']}, "
              f"Birkhoff(N=500) {b:.3f} vs P(R=40) {p[40]:.3f}")
    assert record(8, ok, clk.elapsed, 600, detail)


# 9


def test_measures():
    clk = Clock()
    ball = clk.add(experiment("psmeasure", gens="free2", R=5, bins=1))
    hit = clk.add(experiment("hitmeasure", mu="srw4", n=1000, trials=100000, bins=1))
    sch = clk.add(experiment("hitmeasure", mu="schottky", n=1000, trials=100000, bins=64))
    cyl = np.concatenate([ball["weights"], hit["weights"]])
    res = []
    for R in (8, 10, 12):
        delta = clk.add(experiment("census", gens="schottky", R=R))["delta_hat"]
        nx = M.EmpiricalBoundaryMeasure.from_json(clk.add(experiment("psmeasure", gens="schottky", R=R, bins=64)))
        ny = M.EmpiricalBoundaryMeasure.from_json(
            clk.add(experiment("psmeasure", gens="schottky", R=R, bins=64, basepoint=[1.0, 0.3])))
        res.append(M.conformal_density_residual(nx, ny, delta).summary)
    ok = (np.all(np.abs(cyl - 0.25) <= 0.01) and sch["stationarity_residual"] < 0.02
          and all(a > b for a, b in zip(res, res[1:])))
    detail = (f"cylinders ball {np.round(ball['weights'], 4).tolist()} hit {np.round(hit['weights'], 4).tolist()}, "
              f"stationarity {sch['stationarity_residual']:.4f}, conformal R=8,10,12 {[round(r, 4) for r in res]}")
    assert record(9, ok, clk.elapsed, 600, detail)


# 10


def test_genericity_survey():
    clk = Clock()
    h2 = clk.add(experiment("psmeasure", gens="schottky", R=12, bins=64))
    tree = clk.add(experiment("psmeasure", gens="free2", R=6))
    out = {}
    for tag, measure in (("h2", h2), ("tree", tree), ("e2", "uniform:e2")):
        out[tag] = clk.add(experiment("survey", measure=measure, samples=50))
    ok = out["h2"]["fraction"] == 1.0 and out["tree"]["fraction"] == 1.0 and out["e2"]["fraction"] == 0.0
    detail = ", ".join(f"{k} {v['fraction']:.2f} of {v['tested']}" for k, v in out.items())
    assert record(10, ok, clk.elapsed, 600, detail)


# 11


def test_determinism_across_workers():
    if not _runs:
        pytest.skip("no experiments ran in this session")
    t0 = time.perf_counter()
    differ = []
    for kw, fast, _ in list(_runs.values()):
        rep = run(ExperimentConfig(kw["experiment"], kw["space"], kw["params"], kw["seed"], workers=1))
        if rep.verdict_json() != fast:
            differ.append(kw["experiment"] + (f" {kw['params'].get('target', '')}" if "target" in kw["params"] else ""))
    ok = not differ
    detail = f"{len(_runs)} experiment runs, workers 1 vs {FAST}, differing: {differ or 'none'}"
    ACCEPTANCE[11] = f"[{'PASS' if ok else 'FAIL'}] criterion 11: {detail} ({time.perf_counter() - t0:.1f}s)"
    print(ACCEPTANCE[11])
    assert ok
