import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccx.bubbles import concentration, gen_moser, moser_profile, ramp_profile, translate_profile
from ccx.errors import AtCore, BadInput, OverflowDominant
from ccx.field import (Annulus, Disc, DiscIndicator, Field, GaussianBump, GridBackground, QuadratureSpec,
                       SquareIndicator, SumField, evaluate, gradient, shear)
from ccx.io import field_from_json, field_to_json, load_field, save_field
from ccx.orlicz import dirichlet_energy
from ccx.profile import Triplet
from ccx.quadrature import integrate


def unit(s):
    return np.ones(s.size)


class TestEvaluate:
    def test_moser_plateau(self):
        f = gen_moser(30)
        assert evaluate(f, (0.5 * math.exp(-30), 0.0)) == pytest.approx(math.sqrt(30 / (2 * math.pi)), rel=1e-14)

    def test_moser_outside_unit_disc(self):
        f = gen_moser(30)
        assert evaluate(f, (1.0, 0.0)) == 0.0
        assert evaluate(f, (0.0, 3.0)) == 0.0

    def test_moser_half_depth(self):
        a = 30.0
        p = (0.0, math.exp(-a / 2))
        assert evaluate(gen_moser(a), p) == pytest.approx(math.sqrt(a / (8 * math.pi)), rel=1e-12)

    def test_transform_composes_argument(self):
        f = Field([Triplet(10, (0, 0), moser_profile())], transform=shear(1.0))
        x, y = 0.05, 0.02
        # P(p) = A p with A = [[1, 1], [0, 1]]
        assert evaluate(f, (x, y)) == pytest.approx(evaluate(gen_moser(10), (x + y, y)), rel=1e-12)


class TestGradient:
    def test_magnitude_at_half_depth(self):
        a = 20.0
        r = math.exp(-a / 2)
        gx, gy = gradient(gen_moser(a), (r, 0.0))
        assert math.hypot(gx, gy) == pytest.approx(1 / (math.sqrt(2 * a * math.pi) * r), rel=1e-10)

    def test_zero_outside_support(self):
        assert gradient(gen_moser(5), (2.0, 0.0)) == (0.0, 0.0)

    def test_flat_inside_plateau(self):
        assert gradient(gen_moser(5), (1e-3 * math.exp(-5), 0.0)) == (0.0, 0.0)

    def test_at_core(self):
        with pytest.raises(AtCore):
            gradient(concentration(5, (0.1, 0.2)), (0.1, 0.2))


class TestIntegrate:
    def test_disc_indicator_square(self):
        c, R = 1.7, 0.4
        f = Field(background=DiscIndicator(R, c))
        val = integrate(lambda s: s.values[0] ** 2, [f])
        assert val == pytest.approx(math.pi * R * R * c * c, rel=1e-10)

    @pytest.mark.parametrize("alpha", [5, 50, 200])
    def test_moser_energy(self, alpha):
        assert dirichlet_energy(gen_moser(alpha)) == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("alpha", [5.0, 40.0])
    def test_concentration_l2_matches_1d(self, alpha):
        psi = translate_profile(moser_profile(), 0.5)
        f = concentration(alpha, (0.2, -0.1), psi)
        val = integrate(lambda s: s.values[0] ** 2, [f])
        # alpha^2 int psi(y)^2 e^{-2 alpha y} dy, up to the 2pi alpha/2pi factor
        y = np.linspace(0, psi.s_max, 200001)
        g = psi(y) ** 2 * np.exp(-2 * alpha * y)
        ref = alpha * alpha * np.sum((g[1:] + g[:-1]) / 2 * np.diff(y)) + math.pi * math.exp(
            -2 * alpha * psi.s_max) * alpha / (2 * math.pi) * psi.tail_value ** 2
        assert val == pytest.approx(ref, rel=1e-6)

    def test_overflow_is_reported(self):
        f = gen_moser(200)
        with pytest.raises(OverflowDominant):
            integrate(lambda s: (s.values[0] ** 2 * 100.0, np.ones(s.size)), [f])

    def test_square_area(self):
        f = Field(background=SquareIndicator(0.8))
        assert integrate(lambda s: (s.values[0] != 0).astype(float), [f]) == pytest.approx(0.64, rel=1e-10)


class TestPartition:
    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6)), min_size=1, max_size=4),
           st.floats(0.2, 0.95))
    def test_constant_integrates_to_disc_area(self, cores, R):
        f = Field([Triplet(10, c, moser_profile()) for c in cores])
        val = integrate(unit, [f], region=Disc((0.0, 0.0), R))
        assert val == pytest.approx(math.pi * R * R, rel=1e-9)

    def test_annulus_area(self):
        f = Field([Triplet(20, (0.1, 0.0), moser_profile()), Triplet(40, (-0.3, 0.2), moser_profile())])
        val = integrate(unit, [f], region=Annulus((0.0, 0.0), 0.2, 0.7))
        assert val == pytest.approx(math.pi * (0.49 - 0.04), rel=1e-9)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(1.0, 150.0), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
    def test_scale_identity(self, alpha, x, y):
        psi = ramp_profile()
        assert dirichlet_energy(concentration(alpha, (x, y), psi)) == pytest.approx(psi.energy(), rel=1e-8)

    def test_finite_results(self):
        f = SumField([gen_moser(200), concentration(150, (0.3, 0.0))])
        v = integrate(lambda s: s.values[0] ** 2, [f])
        assert math.isfinite(v) and v > 0


class TestSpec:
    def test_minimums_enforced(self):
        with pytest.raises(BadInput):
            QuadratureSpec(y_nodes=8)
        with pytest.raises(BadInput):
            QuadratureSpec(theta_nodes=16)

    def test_presets(self, monkeypatch):
        monkeypatch.setenv("CCX_QUAD_PROFILE", "fast")
        assert QuadratureSpec.from_env().theta_nodes == 32
        monkeypatch.setenv("CCX_QUAD_PROFILE", "bogus")
        with pytest.raises(BadInput):
            QuadratureSpec.from_env()


class TestSerialization:
    def test_round_trip_values(self, tmp_path):
        grid = np.outer(np.linspace(0, 1, 9), np.linspace(1, 0, 9))
        fields = [
            Field([Triplet(12, (0.1, 0.2), translate_profile(moser_profile(), 1.0))], GaussianBump(0.3, 0.5),
                  support_radius=4.0),
            Field([Triplet(10, (0, 0), moser_profile())], transform=shear(0.5)),
            Field(background=GridBackground(grid, 0.5)),
            SumField([gen_moser(10), concentration(20, (0.3, 0))], [1.0, -0.5]),
        ]
        pts = [(0.01, 0.02), (0.3, 0.001), (-0.2, 0.1)]
        for i, f in enumerate(fields):
            path = tmp_path / f"f{i}.json"
            save_field(f, path)
            g = load_field(path)
            for p in pts:
                assert evaluate(g, p) == pytest.approx(evaluate(f, p), rel=1e-12, abs=1e-15)
            assert field_to_json(field_from_json(field_to_json(f))) == field_to_json(f)

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(BadInput):
            load_field(p)
