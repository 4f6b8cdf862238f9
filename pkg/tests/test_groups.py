import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sublinmorse import groups as G
from sublinmorse.spaces import HyperbolicPlane


class TestElements:
    @given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=12))
    def test_word_inverse(self, word):
        g = G.WordElement(2, word)
        assert (g * g.inverse()).is_identity()

    @given(st.floats(-3, 3), st.floats(0, 2 * math.pi), st.floats(-3, 3), st.floats(0, 2 * math.pi))
    @settings(max_examples=30, deadline=None)
    def test_boosts_are_isometries(self, l1, a1, l2, a2):
        H = HyperbolicPlane()
        g = G.MatrixElement(G.boost(l1, a1)) * G.MatrixElement(G.boost(l2, a2))
        p, q = H.polar(1.0, 0.3), H.polar(2.0, 2.0)
        assert H.distance(g.apply(p), g.apply(q)) == pytest.approx(H.distance(p, q), abs=1e-9)

    def test_translation_length(self):
        assert G.MatrixElement(G.boost(4.0)).translation() == pytest.approx(4.0)

    def test_mixed_groups_refuse(self):
        with pytest.raises(G.GroupError):
            G.WordElement(2, (1,)) * G.MatrixElement(G.boost(1.0))

    def test_not_lorentz(self):
        with pytest.raises(G.GroupError):
            G.MatrixElement(np.diag([2.0, 1.0, 1.0]))


class TestMeasures:
    def test_symmetric_required(self):
        S = G.free_generators(2)
        with pytest.raises(G.GroupError):
            G.WalkMeasure(S.names, S.elements, [0.4, 0.1, 0.25, 0.25])

    def test_lazy_adds_identity(self):
        mu = G.named_measure("lazy4")
        assert mu.probs.sum() == pytest.approx(1.0)
        assert any(g.is_identity() for g in mu.elements)

    def test_generating_set_needs_inverses(self):
        with pytest.raises(G.GroupError):
            G.GeneratorSet(["a"], [G.WordElement(2, (1,))])


class TestCensus:
    @pytest.mark.parametrize("R,ball", [(0, 1), (1, 5), (2, 17), (3, 53)])
    def test_free_ball_sizes(self, R, ball):
        # 1 + 4 (3^R - 1) / 2
        assert G.orbit_census(G.free_generators(2), R).ball[-1] == ball

    def test_generator_order_irrelevant(self):
        S = G.free_generators(2)
        T = G.GeneratorSet(S.names[::-1], S.elements[::-1])
        assert G.orbit_census(S, 4).shells == G.orbit_census(T, 4).shells

    def test_schottky_shells_follow_word_length(self):
        c = G.orbit_census(G.schottky_generators(), 8)
        assert c.shells[4] == 4 and sum(c.shells) == c.ball[-1]

    def test_budget(self):
        with pytest.raises(G.BudgetError) as err:
            G.orbit_census(G.free_generators(2), 8, budget=100)
        assert err.value.partial is not None


class TestPaths:
    def test_reproducible(self):
        mu = G.named_measure("srw4")
        a = G.sample_path(mu, 50, seed=4, trial=2)
        b = G.sample_path(mu, 50, seed=4, trial=2)
        assert np.array_equal(a.inc, b.inc)

    def test_shift_reindexes(self):
        mu = G.named_measure("srw4")
        p = G.sample_path(mu, 20, seed=1, back=10)
        s = G.shift(p, 3)
        assert s.h(1) is p.h(4)

    def test_word_length_one_step(self):
        mu = G.named_measure("srw4")
        p = G.sample_path(mu, 1, seed=0)
        assert G.word_lengths(p, [1])[0] == 1

    def test_drift_needs_long_paths(self):
        with pytest.raises(ValueError):
            G.drift_estimate(G.named_measure("srw4"), 10, 5)

    def test_drift_workers_agree(self):
        mu = G.named_measure("srw4")
        assert G.drift_estimate(mu, 200, 20, seed=2, workers=1) == G.drift_estimate(mu, 200, 20, seed=2, workers=4)


class TestOmega:
    def test_axis_path_hits(self):
        mu = G.named_measure("schottky")
        cfg = G.OmegaConfig(L=5.0, C=2.0, R=20.0)
        n = 2 * cfg.n
        a = mu.names.index("a")
        p = G.SamplePath(mu, np.full(2 * n, a), n, 0)
        assert G.omega_event(p, cfg)

    def test_birkhoff_needs_room(self):
        mu = G.named_measure("schottky")
        cfg = G.OmegaConfig(L=5.0, C=2.0, R=20.0)
        p = G.sample_path(mu, 10, seed=0, back=2)
        with pytest.raises(G.HorizonError):
            G.birkhoff_fraction(p, cfg, 5)
