import math

import numpy as np
import pytest

from sublinmorse import groups as G
from sublinmorse import measures as M
from sublinmorse.spaces import HyperbolicPlane


class TestBinning:
    @pytest.mark.parametrize("k,d", [(2, 1), (2, 3), (3, 2)])
    def test_cylinder_count(self, k, d):
        b = M.Binning("cylinder", k=k, depth=d)
        assert len(b.words) == b.size == 2 * k * (2 * k - 1) ** (d - 1)

    def test_angle_edges(self):
        b = M.Binning("angle", B=8)
        assert list(b.of_angles([0.0, 2 * math.pi - 1e-12, 2 * math.pi])) == [0, 7, 0]

    def test_weights_validated(self):
        b = M.Binning("angle", B=4)
        with pytest.raises(ValueError):
            M.EmpiricalBoundaryMeasure("h2", b, np.array([0.5, 0.5, 0.5, 0.0]), {})
        with pytest.raises(ValueError):
            M.EmpiricalBoundaryMeasure("h2", b, np.ones(3) / 3, {})

    def test_json_round_trip(self):
        nu = M.ball_average_measure(G.free_generators(2), 3, bins=2)
        back = M.EmpiricalBoundaryMeasure.from_json(nu.to_json())
        assert np.array_equal(back.weights, nu.weights) and back.binning == nu.binning


class TestBallAverage:
    def test_free_group_depth_one(self):
        nu = M.ball_average_measure(G.free_generators(2), 5, bins=1)
        assert np.allclose(nu.weights, 0.25)
        assert nu.provenance["ball_o"] == 485

    def test_generator_order_irrelevant(self):
        S = G.free_generators(2)
        T = G.GeneratorSet(S.names[::-1], S.elements[::-1])
        a = M.ball_average_measure(S, 4, bins=2)
        b = M.ball_average_measure(T, 4, bins=2)
        assert np.array_equal(a.weights, b.weights)


class TestHitting:
    def test_free_group_uniform_cylinders(self):
        nu = M.hitting_measure(G.named_measure("srw4"), 100, 4000, bins=1, seed=3)
        assert np.all(np.abs(nu.weights - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 4000))

    def test_unstable_raises(self):
        with pytest.raises(M.InstabilityError) as err:
            M.hitting_measure(G.named_measure("srw4"), 4, 500, bins=3)
        assert err.value.failing > 0.05

    def test_workers_agree(self):
        mu = G.named_measure("schottky")
        a = M.hitting_measure(mu, 60, 10000, bins=16, seed=5, workers=1)
        b = M.hitting_measure(mu, 60, 10000, bins=16, seed=5, workers=3)
        assert np.array_equal(a.weights, b.weights)


class TestStationarity:
    def test_identity_walk(self):
        nu = M.ball_average_measure(G.free_generators(2), 4, bins=2)
        e = G.WordElement(2, ())
        mu = G.WalkMeasure(["e"], [e], [1.0])
        assert M.stationarity_residual(nu, mu) == 0.0

    def test_uniform_is_not_stationary_for_schottky(self):
        b = M.Binning("angle", B=64)
        nu = M.EmpiricalBoundaryMeasure("h2", b, np.full(64, 1 / 64), {})
        assert M.stationarity_residual(nu, G.named_measure("schottky")) > 0.2

    def test_push_and_pull_back(self):
        mu = G.named_measure("schottky")
        nu = M.hitting_measure(mu, 60, 4000, bins=32, seed=1)
        g = mu.elements[0]
        there = M.EmpiricalBoundaryMeasure("h2", nu.binning, M.pushforward(nu, g), {},
                                           samples=M._angle_action(g.M, nu.samples))
        back = M.pushforward(there, g.inverse())
        assert M.tv(back, nu.weights) <= 2 / 32


@pytest.fixture(scope="module")
def pair():
    H = HyperbolicPlane()
    S = G.schottky_generators()
    x, y = H.basepoint(), H.polar(1.0, 0.3)
    return (M.ball_average_measure(S, 12, 32, x), M.ball_average_measure(S, 12, 32, y),
            G.orbit_census(S, 12).delta_hat)


class TestConformal:
    def test_same_basepoint_is_zero(self, pair):
        nx, _, d = pair
        r = M.conformal_density_residual(nx, nx, d)
        assert r.summary == 0.0

    def test_antisymmetric(self, pair):
        nx, ny, d = pair
        a = M.conformal_density_residual(nx, ny, d).residual
        b = M.conformal_density_residual(ny, nx, d).residual
        assert all((u is None and v is None) or abs(u + v) < 1e-9 for u, v in zip(a, b))


class TestSurvey:
    def test_euclidean_fails_everywhere(self):
        b = M.Binning("angle", B=16)
        nu = M.EmpiricalBoundaryMeasure("e2", b, np.full(16, 1 / 16), {})
        res = M.generic_morse_survey(nu, 5)
        assert res.fraction == 0.0 and res.tested == 5

    def test_wilson_interval(self):
        lo, hi = M.wilson(50, 50)
        assert hi == 1.0 and 0.9 < lo < 1.0
