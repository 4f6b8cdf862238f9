import math

import pytest

from sublinmorse.contraction import PreconditionError
from sublinmorse.freqcontract import (
    ReferenceLibrary,
    alternating_library,
    frequent_window_check,
    projection_growth,
    ray_corpus,
    reference_library,
    thick_fraction_limit,
    thick_profile,
    thick_time,
)
from sublinmorse.spaces import EuclideanPlane, GluedPlane, HyperbolicPlane, RegularTree


@pytest.fixture(scope="module")
def glued():
    G = GluedPlane()
    ray, lib, design = alternating_library(G, horizon=400)
    return G, ray, lib, design


class TestThick:
    def test_h2_ray_always_thick(self):
        H = HyperbolicPlane()
        lib = reference_library(H)
        ray = H.ray(H.ideal(0.4))
        # window centers run over [L, T - L]
        assert thick_time(lib, ray, 100, 5.0, 2.0) == pytest.approx(100 - 2 * 5.0, abs=0.2)

    def test_flat_ray_never_thick(self):
        E = EuclideanPlane()
        lib = reference_library(E)
        assert lib.empty
        assert thick_time(lib, E.ray(E.ideal(0.0)), 100, 5.0, 2.0) == 0

    def test_alternating_duty_cycle(self, glued):
        _, ray, lib, design = glued
        prof = thick_profile(lib, ray, [100, 200, 300, 400], design.L, design.C)
        assert prof.fraction[-1] == pytest.approx(design.m0, abs=0.05)

    def test_limit_needs_spread(self, glued):
        _, ray, lib, design = glued
        prof = thick_profile(lib, ray, [100, 200], design.L, design.C)
        with pytest.raises(ValueError):
            thick_fraction_limit(prof)


class TestWindowCheck:
    def test_theta_range(self, glued):
        _, ray, lib, d = glued
        with pytest.raises(ValueError):
            frequent_window_check(lib, ray, lib.N, d.C, d.L, 1.0, radii=(100,))

    def test_library_constant_too_large(self, glued):
        _, ray, lib, d = glued
        with pytest.raises(PreconditionError):
            frequent_window_check(lib, ray, lib.N / 2, d.C, d.L, 0.25, radii=(100,))

    def test_alternating_passes_flat_fails(self, glued):
        G, ray, lib, d = glued
        ok = frequent_window_check(lib, ray, lib.N, d.C, d.L, 0.25, radii=(200, 400))
        assert all(r.passed for r in ok)
        flat = G.ray(G.ideal(3 * math.pi / 2))
        bad = frequent_window_check(lib, flat, lib.N, d.C, d.L, 0.25, radii=(200,))
        assert not bad[0].passed and bad[0].witness is not None


class TestGrowth:
    def test_tree_sublinear(self):
        T = RegularTree(2)
        prof = projection_growth(T, T.ray(T.ideal((), (1,))), radii=(25, 50, 100), trials=50)
        assert prof.verdict == "sublinear"

    def test_flat_not_sublinear(self):
        E = EuclideanPlane()
        prof = projection_growth(E, E.ray(E.ideal(0.0)), radii=(50, 100, 200, 400), trials=200)
        assert prof.verdict == "not sublinear"
        assert min(prof.theta_hat) >= 0.5


def test_corpus_spans_spaces():
    corpus = ray_corpus()
    assert len(corpus) >= 12
    tags = {c.space.tag.split(":")[0] for c in corpus}
    assert {"e2", "h2", "tree", "glued", "prod"} <= tags


def test_library_sizes():
    assert ReferenceLibrary(None, "closest_fit", 0.0).size is None
    assert ReferenceLibrary(None, "empty", 0.0).size == 0
