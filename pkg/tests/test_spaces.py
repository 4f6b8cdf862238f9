import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import disk_distance, fermi_exp_mp, glued_cross_oracle
from sublinmorse.fermi import exp_fermi
from sublinmorse.spaces import (
    EuclideanPlane,
    GluedPlane,
    HyperbolicPlane,
    ProductSpace,
    RegularTree,
    gromov_product,
    parse_space,
)
from sublinmorse.spaces.base import DomainError, UnsupportedSpace

radius = st.floats(0.0, 12.0)
angle = st.floats(0.0, 2 * math.pi)


class TestHyperbolic:
    H = HyperbolicPlane()

    @given(radius, angle, radius, angle)
    @settings(max_examples=60, deadline=None)
    def test_distance_matches_disk_model(self, r1, a1, r2, a2):
        p, q = self.H.polar(r1, a1), self.H.polar(r2, a2)
        assert self.H.distance(p, q) == pytest.approx(disk_distance(p.data, q.data), abs=1e-6)

    @given(radius, angle, radius, angle)
    @settings(max_examples=60, deadline=None)
    def test_distance_symmetric(self, r1, a1, r2, a2):
        p, q = self.H.polar(r1, a1), self.H.polar(r2, a2)
        assert self.H.distance(p, q) == pytest.approx(self.H.distance(q, p), abs=1e-12)

    def test_far_points_do_not_cancel(self):
        # the chord formula collapses to 0 here
        p, q = self.H.polar(30.0, 0.0), self.H.polar(30.0, math.pi)
        assert self.H.distance(p, q) == pytest.approx(60.0, abs=1e-9)

    def test_projection_onto_line_through_o(self):
        line = self.H.line(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
        pr = self.H.project(self.H.polar(2.0, math.pi / 2), line)
        assert pr.t == pytest.approx(0.0, abs=1e-12)
        assert pr.dist == pytest.approx(2.0)

    def test_busemann_along_ray(self):
        z = self.H.ideal(0.7)
        x = self.H.polar(3.0, 0.7)
        assert self.H.busemann(z, x, self.H.basepoint()) == pytest.approx(-3.0, abs=1e-12)

    def test_off_sheet_rejected(self):
        with pytest.raises(DomainError):
            self.H.point([0.0, 0.0, -1.0])
        with pytest.raises(DomainError):
            self.H.point([np.inf, 0.0, np.inf])


class TestEuclidean:
    E = EuclideanPlane()

    @given(st.floats(-50, 50), st.floats(-50, 50))
    def test_projection_onto_x_axis(self, x, y):
        line = self.E.line(np.zeros(2), np.array([1.0, 0.0]))
        pr = self.E.project(self.E.point(x, y), line)
        assert pr.t == pytest.approx(x, abs=1e-9)
        assert pr.dist == pytest.approx(abs(y), abs=1e-9)


class TestTree:
    T = RegularTree(2)

    def test_vertex_distance_is_reduced_length(self):
        assert self.T.distance(self.T.vertex((1, 2)), self.T.vertex((1, -2))) == 2
        assert self.T.distance(self.T.vertex((1, 2)), self.T.vertex((-1,))) == 3

    def test_gromov_product_of_branches(self):
        o = self.T.basepoint()
        z, w = self.T.ideal((1, 2), (1,)), self.T.ideal((1, 2), (-1,))
        assert gromov_product(self.T, o, z, w) == pytest.approx(2.0)

    def test_unreduced_ideal_rejected(self):
        with pytest.raises(DomainError):
            self.T.ideal((1, -1), (2,))


class TestGlued:
    G = GluedPlane()

    @given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-5, 5), st.floats(0.01, 5))
    @settings(max_examples=40, deadline=None)
    def test_cross_distance_matches_grid(self, x, y, u, v):
        d = self.G.distance(self.G.point("F", x, y), self.G.point("H", u, v))
        assert d == pytest.approx(glued_cross_oracle(x, y, u, v), abs=1e-6)

    def test_same_sheet_distances(self):
        assert self.G.distance(self.G.point("F", 0, 3), self.G.point("F", 4, 0)) == pytest.approx(5.0)
        assert self.G.distance(self.G.basepoint(), self.G.point("H", 0, 2)) == pytest.approx(2.0)

    def test_negative_height_rejected(self):
        with pytest.raises(DomainError):
            self.G.point("F", 0.0, -1.0)


class TestParse:
    @pytest.mark.parametrize("text,cls", [("e2", EuclideanPlane), ("h2", HyperbolicPlane),
                                          ("tree:k=3", RegularTree), ("glued", GluedPlane),
                                          ("prod:h2*e2", ProductSpace)])
    def test_known(self, text, cls):
        assert isinstance(parse_space(text), cls)

    @pytest.mark.parametrize("text", ["h3", "tree:k=x", "prod:h2"])
    def test_unknown(self, text):
        with pytest.raises(ValueError):
            parse_space(text)

    def test_product_has_no_rays(self):
        P = parse_space("prod:e2*e2")
        with pytest.raises(UnsupportedSpace):
            P.ray(None)



class TestFermi:
    @pytest.mark.parametrize("c", [1e-200, 1e-170, 1e-120, 0.3])
    def test_grazing_directions_match_high_precision(self, c):
        # near the normal the squared cosine underflows long before the shot stops caring
        s = -math.sqrt(1 - c * c)
        u, v = exp_fermi(0.0, 400.0, 399.0, direction=(c, s))
        u_ref, v_ref = fermi_exp_mp(0.0, 400.0, 399.0, c, -1)
        assert float(v) == pytest.approx(v_ref, abs=1e-9)
        assert float(u) == pytest.approx(u_ref, abs=1e-9)
