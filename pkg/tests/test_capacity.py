import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccx.bubbles import gen_moser
from ccx.capacity import (AnnulusSet, BallSet, MaskSet, ObstacleSpec, capacitor_potential_annulus, capacity_annulus,
                          check_radial_estimate, energy_lower_bound, obstacle_capacity_2d, obstacle_min_energy_radial,
                          solve_obstacle, witness_energy)
from ccx.errors import BadInput, DegenerateAnnulus, DegenerateMeasures, OutOfAnnulus
from ccx.field import Field


class TestAnnulus:
    @pytest.mark.parametrize("a,b,ref", [(1, math.e, 2 * math.pi), (1, math.e ** 2, math.pi),
                                         (0.1, 1, 2 * math.pi / math.log(10))])
    def test_formula(self, a, b, ref):
        assert capacity_annulus(a, b) == pytest.approx(ref, rel=1e-14)

    def test_degenerate(self):
        with pytest.raises(DegenerateAnnulus):
            capacity_annulus(1.0, 1.0)
        with pytest.raises(BadInput):
            capacity_annulus(-1.0, 1.0)

    def test_potential(self):
        a, b = 0.25, 1.0
        assert capacitor_potential_annulus(a, b, (b, 0.0)) == 0.0
        assert capacitor_potential_annulus(a, b, (0.0, a)) == pytest.approx(1.0)
        assert capacitor_potential_annulus(a, b, (0.5, 0.0)) == pytest.approx(0.5)
        with pytest.raises(OutOfAnnulus):
            capacitor_potential_annulus(a, b, (0.1, 0.0))

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.01, 0.9), st.floats(1.05, 10.0))
    def test_monotone_in_outer_radius(self, a, k):
        assert capacity_annulus(a, a * k * 1.1) < capacity_annulus(a, a * k)


class TestRadialObstacle:
    @pytest.mark.parametrize("alpha", [5.0, 50.0])
    def test_unit_energy(self, alpha):
        assert obstacle_min_energy_radial(alpha, grid=1024) == pytest.approx(1.0, abs=1e-6)

    def test_double_level(self):
        assert obstacle_min_energy_radial(5.0, grid=1024, level=2.0) == pytest.approx(4.0, abs=1e-5)

    def test_bad_alpha(self):
        with pytest.raises(BadInput):
            obstacle_min_energy_radial(0.0)


class TestPlanarObstacle:
    @pytest.mark.parametrize("r_in,b", [(0.25, 0.5), (0.1, 1.0)])
    def test_ball_capacity(self, r_in, b):
        spec = ObstacleSpec(BallSet(r_in), ("ball", b), grid_resolution=512)
        assert obstacle_capacity_2d(spec) == pytest.approx(capacity_annulus(r_in, b), rel=0.02)

    def test_refinement_reduces_error(self):
        ref = capacity_annulus(0.25, 0.5)
        errs = [abs(obstacle_capacity_2d(ObstacleSpec(BallSet(0.25), ("ball", 0.5), grid_resolution=n)) - ref)
                for n in (64, 256)]
        assert errs[1] < errs[0]

    def test_empty_obstacle(self):
        mask = np.zeros((64, 64), dtype=bool)
        assert obstacle_capacity_2d(ObstacleSpec(MaskSet(mask), ("box", 1.0), grid_resolution=64)) == 0.0

    def test_solution_properties(self):
        spec = ObstacleSpec(AnnulusSet(0.2, 0.3), ("ball", 1.0), grid_resolution=128, solver_tol=1e-10)
        sol = solve_obstacle(spec)
        assert sol.u.max() <= spec.obstacle_level + 10 * spec.solver_tol and sol.u.min() >= 0.0
        assert np.all(sol.u[~sol.inside] == 0.0)
        assert sol.laplacian_residual() <= 10 * spec.solver_tol * 4
        # the hole of the annulus is filled by the maximum principle
        X, Y, _, _ = spec.grid()
        hole = np.hypot(X, Y) < 0.15
        assert np.allclose(sol.u[hole], 1.0, atol=1e-6)

    def test_obstacle_outside_domain(self):
        with pytest.raises(BadInput):
            ObstacleSpec(BallSet(1.2), ("ball", 1.0))

    def test_json(self):
        d = ObstacleSpec(BallSet(0.25), ("ball", 0.5)).to_json()
        assert d["obstacle_kind"] == "BallSet" and d["grid_resolution"] == 512


class TestEnergyLowerBound:
    def test_formula(self):
        assert energy_lower_bound(math.e, 1.0, 1.0, 0.0) == pytest.approx(4 * math.pi)
        assert energy_lower_bound(2.0, 1.0, 0.3, 0.3) == 0.0

    def test_degenerate(self):
        with pytest.raises(DegenerateMeasures):
            energy_lower_bound(1.0, 1.0, 1.0, 0.0)
        with pytest.raises(DegenerateMeasures):
            energy_lower_bound(1.0, 0.0, 1.0, 0.0)

    @pytest.mark.parametrize("B,E,a1,a2", [(math.pi, math.pi * 0.01, 1.0, 0.0), (1.0, 0.3, 2.0, 0.5)])
    def test_witness_attains(self, B, E, a1, a2):
        lb = energy_lower_bound(B, E, a1, a2)
        ratio = witness_energy(B, E, a1, a2) / lb
        assert 1 - 1e-9 <= ratio <= 1.05


class TestRadialEstimate:
    @pytest.mark.parametrize("alpha", [5.0, 20.0, 80.0])
    def test_moser(self, alpha):
        radii = np.geomspace(math.exp(-1.5 * alpha), 1.0, 400)
        assert check_radial_estimate(gen_moser(alpha), radii) <= 1 / math.sqrt(math.pi) + 0.02

    def test_zero(self):
        assert check_radial_estimate(Field(), [0.5]) == 0.0
