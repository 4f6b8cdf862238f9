import math

import numpy as np
import pytest

from sublinmorse import kappa as K
from sublinmorse.contraction import (
    EPS_ADM,
    PreconditionError,
    contraction_search,
    in_kappa_neighborhood,
    kappa_profile,
    morse_gauge_probe,
    projection_lemma_estimate,
)
from sublinmorse.spaces import EuclideanPlane, HyperbolicPlane, ProductSpace, RegularTree


def h2_axis(H):
    return H.line(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))


def e2_axis(E):
    return E.line(np.zeros(2), np.array([1.0, 0.0]))


class TestContractionSearch:
    def test_flat_line_is_not_contracting(self):
        E = EuclideanPlane()
        rep = contraction_search(E, e2_axis(E), radii=(10, 40), trials=200, seed=1)
        assert rep.per_radius[-1] >= 0.9 * 40

    def test_tree_axis_projects_to_points(self):
        T = RegularTree(2)
        rep = contraction_search(T, T.axis((1,)), radii=(5, 10), trials=200, seed=1)
        assert rep.N_estimate <= 1.0

    def test_h2_line_bounded(self):
        H = HyperbolicPlane()
        rep = contraction_search(H, h2_axis(H), radii=(5, 20), trials=300, seed=1)
        assert rep.N_estimate < 2.0

    def test_h2_extreme_found_far_out(self):
        # from distance d a ball of radius r < d reaches the perpendicular at W,
        # sinh W = sinh r / cosh d < 1, and at d = R = 50 it gets within 0.05 of that
        H = HyperbolicPlane()
        R = 50.0
        r = (1 - EPS_ADM) * R
        at_R = math.asinh(math.exp(r - R) * (1 - math.exp(-2 * r)) / (1 + math.exp(-2 * R)))
        rep = contraction_search(H, h2_axis(H), radii=(R,), trials=400, seed=2)
        assert at_R - 0.05 < rep.per_radius[0] < math.asinh(1.0)

    def test_query_sets_passed(self):
        T = RegularTree(2)
        rep = contraction_search(T, T.axis((1,)), N=3.0, radii=(5,), trials=50)
        assert rep.passed

    def test_workers_do_not_change_result(self):
        H = HyperbolicPlane()
        a = contraction_search(H, h2_axis(H), radii=(5, 10), trials=200, seed=3, workers=1)
        b = contraction_search(H, h2_axis(H), radii=(5, 10), trials=200, seed=3, workers=4)
        assert a.to_json() == b.to_json()


class TestKappaProfile:
    def test_flat_not_sublinear(self):
        E = EuclideanPlane()
        prof = kappa_profile(E, e2_axis(E), radii=(10, 20, 40, 80), trials=200)
        assert not prof.sublinear

    def test_tree_sublinear(self):
        T = RegularTree(2)
        prof = kappa_profile(T, T.axis((1,)), radii=(5, 10, 20), trials=100)
        assert prof.sublinear

    def test_neighborhood_membership(self):
        E = EuclideanPlane()
        line = e2_axis(E)
        kap = K.parametric(0.5)
        assert in_kappa_neighborhood(E, E.point(100.0, 5.0), line, kap, 1.0)
        assert not in_kappa_neighborhood(E, E.point(100.0, 50.0), line, kap, 1.0)


class TestMorseGauge:
    def test_geodesics_only_stay_on_the_line(self):
        H = HyperbolicPlane()
        rep = morse_gauge_probe(H, h2_axis(H), 1.0, 0.0, K.parametric(), radii=(10,), trials=5)
        assert rep.value == pytest.approx(0.0, abs=1e-6)

    def test_flat_gauge_grows(self):
        E = EuclideanPlane()
        rep = morse_gauge_probe(E, e2_axis(E), 2.0, 0.0, K.parametric(), radii=(10, 20, 40), trials=10)
        assert rep.unbounded


class TestProjectionLemma:
    def test_h2_constants_stable(self):
        H = HyperbolicPlane()
        rep = projection_lemma_estimate(H, h2_axis(H), radii=(10, 20, 40), trials=300)
        assert not rep.diverged
        assert max(rep.D1) < 3.0

    def test_flat_diverges(self):
        E = EuclideanPlane()
        rep = projection_lemma_estimate(E, e2_axis(E), radii=(10, 20, 40), trials=300)
        assert rep.diverged

    def test_product_rejected(self):
        P = ProductSpace(EuclideanPlane(), EuclideanPlane())
        E = EuclideanPlane()
        g = P.combine(e2_axis(E), e2_axis(E), math.pi / 4)
        with pytest.raises((PreconditionError, ValueError, NotImplementedError)):
            projection_lemma_estimate(P, g, radii=(10,), trials=10)
