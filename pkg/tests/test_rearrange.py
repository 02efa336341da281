import math

import numpy as np
import pytest

from ccx.bubbles import apply_cutoff, concentration, gen_anisotropic, gen_moser, gen_same_scale_pair
from ccx.errors import BadInput
from ccx.field import DiscIndicator, Field, SquareIndicator
from ccx.rearrange import RadialDecreasing, distribution_function, log_level_measure, schwarz_rearrange


def sup_dist_on(R1: RadialDecreasing, R2, s: np.ndarray) -> float:
    r = np.exp(-s)
    return float(np.max(np.abs(R1(r) - R2(r))))


class TestDistribution:
    def test_disc_indicator(self):
        f = Field(background=DiscIndicator(0.4, 2.0))
        assert distribution_function(f, 1.0) == pytest.approx(math.pi * 0.16, rel=1e-12)

    @pytest.mark.parametrize("tau", [0.1, 0.5, 0.9])
    def test_moser_levels(self, tau):
        a = 30.0
        t = math.sqrt(a / (2 * math.pi)) * tau
        assert log_level_measure(gen_moser(a), t) == pytest.approx(math.log(math.pi) - 2 * tau * a, abs=1e-10)

    def test_above_sup(self):
        a = 30.0
        assert distribution_function(gen_moser(a), 1.01 * math.sqrt(a / (2 * math.pi))) == 0.0

    def test_positive_level(self):
        with pytest.raises(BadInput):
            distribution_function(gen_moser(5), 0.0)


class TestRearrange:
    def test_radial_fixed(self):
        a = 20.0
        R = schwarz_rearrange(gen_moser(a))
        s = np.linspace(0.0, 1.5 * a, 400)
        ref = math.sqrt(a / (2 * math.pi)) * np.minimum(s / a, 1.0)
        assert np.max(np.abs(R(np.exp(-s)) - ref)) <= 0.01 * ref.max()

    def test_translation(self):
        a = 20.0
        R1 = schwarz_rearrange(concentration(a, (0.3, 0.0)))
        R0 = schwarz_rearrange(gen_moser(a))
        s = np.linspace(0.0, 1.5 * a, 400)
        assert sup_dist_on(R1, R0, s) <= 0.01 * math.sqrt(a / (2 * math.pi))

    def test_square_to_disc(self):
        side = 0.6
        R = schwarz_rearrange(Field(background=SquareIndicator(side)))
        r0 = side / math.sqrt(math.pi)
        assert R(r0 * 0.999) == pytest.approx(1.0) and R(r0 * 1.001) == 0.0

    @pytest.mark.parametrize("field", [gen_anisotropic(10, 2.0, 0.5), gen_same_scale_pair(10),
                                       concentration(15, (0.2, -0.3))], ids=["aniso", "pair", "shifted"])
    def test_equimeasurable(self, field):
        R = schwarz_rearrange(field)
        vmax = float(R.values[-1])
        for t in vmax * np.linspace(0.05, 0.95, 10):
            a, b = distribution_function(field, t), distribution_function(R, t)
            assert b == pytest.approx(a, rel=0.01)

    def test_composition_with_cutoff(self):
        alpha = 10.0
        u = gen_same_scale_pair(alpha)
        lhs = schwarz_rearrange(apply_cutoff(u, alpha, 0.05, 1.5))
        rhs = apply_cutoff(schwarz_rearrange(u), alpha, 0.05, 1.5)
        s = np.linspace(0.0, 3 * alpha, 2000)
        nodes = np.exp(-s)
        from ccx.field import evaluate
        r_vals = np.array([evaluate(rhs, (r, 0.0)) for r in nodes])
        assert np.max(np.abs(lhs(nodes) - r_vals)) <= 0.01 * float(np.max(r_vals))

    def test_zero(self):
        R = schwarz_rearrange(Field())
        assert np.all(R.values == 0)


class TestRadialDecreasing:
    def test_validation(self):
        with pytest.raises(BadInput):
            RadialDecreasing([0.0, 1.0], [1.0, 0.5])
        with pytest.raises(BadInput):
            RadialDecreasing([0.0, 1.0], [-1.0, 0.0])

    def test_json(self):
        R = schwarz_rearrange(gen_moser(10))
        Q = RadialDecreasing.from_json(R.to_json())
        assert np.array_equal(Q.log_radii, R.log_radii) and np.array_equal(Q.values, R.values)
