import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublinmorse import kappa as K


class TestParametric:
    def test_constant_member(self):
        k = K.parametric()
        assert k(0.0) == 1.0
        assert k(1e6) == 1.0

    @given(st.floats(0.0, 0.75), st.floats(0.0, 3.0), st.floats(0.1, 10.0))
    def test_at_least_one_and_monotone(self, a, b, c):
        k = K.parametric(a, b, c)
        t = np.geomspace(1e-3, 1e8, 50)
        v = k(t)
        assert np.all(v >= 1.0)
        assert np.all(np.diff(v) >= -1e-9 * v[1:])

    @given(st.floats(0.0, 0.75), st.floats(1.0, 50.0), st.floats(0.0, 1e4))
    def test_scaling(self, a, s, t):
        ok, _ = K.scaling_check(K.parametric(a, 1.0), s, t)
        assert ok

    def test_out_of_range_rejected(self):
        with pytest.raises(K.KappaError):
            K.parametric(1.0)
        with pytest.raises(K.KappaError):
            K.parametric(0.5, c=0.0)

    def test_negative_argument_rejected(self):
        with pytest.raises(K.KappaError):
            K.parametric(0.5)(-1.0)

    def test_parse(self):
        k = K.parse_kappa("kappa:pow=0.5,c=2")
        assert (k.alpha, k.beta, k.c) == (0.5, 0.0, 2.0)
        with pytest.raises(K.KappaError):
            K.parse_kappa("kappa:pow=0.5,zzz=1")


class TestRegularize:
    def test_majorant_is_concave(self):
        t = np.linspace(0, 100, 41)
        f = 3 + np.sin(t) * 2 + np.sqrt(t)
        k, C = K.regularize(t, f)
        v = k(t)
        assert np.all(v >= np.maximum(f, 1) - 1e-12)
        assert K.is_concave_on(t, v)
        assert C >= 1.0

    def test_linear_rejected(self):
        t = np.linspace(1, 100, 20)
        with pytest.raises(K.KappaError):
            K.regularize(t, t)


class TestSelection:
    def test_constant_profile_picks_constant(self):
        sel = K.select_dominating([10, 20, 40, 80], [3, 3, 3, 3])
        assert sel.index == 0 and sel.sublinear

    def test_zero_profile_is_sublinear(self):
        assert K.select_dominating([10, 20, 40], [0, 0, 0]).sublinear

    def test_linear_profile_not_sublinear(self):
        r = np.array([50, 100, 200, 400, 800.0])
        assert not K.select_dominating(r, 0.6 * r).sublinear

    def test_sqrt_profile_gets_half_power(self):
        r = np.array([50, 100, 200, 400, 800.0])
        sel = K.select_dominating(r, 2 * np.sqrt(r))
        assert sel.sublinear
        assert K.cached_default_family()[sel.index].alpha == 0.5

    def test_mismatched_rejected(self):
        with pytest.raises(K.KappaError):
            K.select_dominating([1, 2], [1])
