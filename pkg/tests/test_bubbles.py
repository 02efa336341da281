import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccx.bubbles import (apply_cutoff, concentration, cutoff_theta, end_ratios, fit_moser_profile, gen_anisotropic,
                         gen_custom, gen_diffeo, gen_flattening, gen_matrix, gen_moser, gen_same_scale_pair,
                         gen_translate_away, gen_two_scale_sum, holder_excess, matrix_conditions, moser_profile,
                         profile_sup_ratio, ramp_profile, scale_profile, smooth_profile, translate_profile)
from ccx.errors import BadInput, BadRange, MatrixConditionViolated, NegativeShift, ProfileError, ZeroProfile
from ccx.extract import ExtractionConfig, extract_profile, profile_grid
from ccx.field import Field, SumField, evaluate
from ccx.orlicz import dirichlet_energy, orlicz_norm
from ccx.profile import Profile, Triplet

L = moser_profile()


def deriv_dist(p: Profile, q: Profile) -> float:
    y = np.union1d(p.knots, q.knots)
    m = 0.5 * (y[1:] + y[:-1])
    return math.sqrt(float(np.sum((p.derivative(m) - q.derivative(m)) ** 2 * np.diff(y))))


class TestProfiles:
    def test_moser_values(self):
        assert L(0.5) == 0.5 and L(3.0) == 1.0 and L.energy() == 1.0

    def test_translate(self):
        assert translate_profile(L, 0.0) is L
        L1 = translate_profile(L, 1.0)
        assert L1(2.0) == 1.0 and L1(0.7) == 0.0
        with pytest.raises(NegativeShift):
            translate_profile(L, -0.1)

    def test_scale(self):
        assert scale_profile(L, 1.0) is L
        for lam in (0.5, 2.0, 7.0):
            assert scale_profile(L, lam).energy() == pytest.approx(L.energy(), abs=1e-10)

    def test_scale_identity_pointwise(self):
        # g(alpha, psi) = g(lam alpha, psi_lam)
        rng = np.random.default_rng(3)
        for lam in (0.5, 2.0):
            a = concentration(10.0, (0.0, 0.0), L)
            b = concentration(10.0 * lam, (0.0, 0.0), scale_profile(L, lam))
            for _ in range(100):
                r = math.exp(-rng.uniform(0, 60))
                th = rng.uniform(0, 2 * math.pi)
                p = (r * math.cos(th), r * math.sin(th))
                assert evaluate(b, p) == pytest.approx(evaluate(a, p), rel=1e-12, abs=1e-14)

    def test_validation(self):
        with pytest.raises(ProfileError):
            Profile([0.1, 1.0], [1.0])
        with pytest.raises(ProfileError):
            Profile([0.0, 1.0], [np.inf])
        with pytest.raises(ProfileError):
            Profile.from_values([0.0, 1.0], [0.5, 1.0])

    def test_json_round_trip(self):
        p = ramp_profile()
        q = Profile.from_json(p.to_json())
        assert np.array_equal(p.knots, q.knots) and np.array_equal(p.slopes, q.slopes)


class TestSupRatio:
    def test_moser(self):
        r = profile_sup_ratio(L)
        assert r.value == pytest.approx(1.0) and r.argmax == pytest.approx(1.0)

    @pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
    def test_translated(self, a):
        r = profile_sup_ratio(translate_profile(L, a))
        assert r.value == pytest.approx(1 / math.sqrt(1 + a), rel=1e-12)
        assert r.argmax == pytest.approx(1 + a)

    def test_against_dense_scan(self):
        s = np.linspace(0, 3, 3001)
        psi = Profile.from_values(s, np.sqrt(s) * np.minimum(s, 1.0) + 0.1 * np.sin(3 * s))
        scan = np.linspace(1e-6, 3, 10**6)
        ref = float(np.max(np.abs(psi(scan)) / np.sqrt(scan)))
        assert profile_sup_ratio(psi).value == pytest.approx(ref, abs=1e-6)

    def test_zero(self):
        with pytest.raises(ZeroProfile):
            profile_sup_ratio(Profile.zero())

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.01, 4.0))
    def test_shift_keeps_energy_lowers_ratio(self, a):
        psi = translate_profile(ramp_profile(), a)
        assert psi.energy() == pytest.approx(ramp_profile().energy(), abs=1e-10)
        assert profile_sup_ratio(psi).value < profile_sup_ratio(ramp_profile()).value


class TestFit:
    def test_exact_members(self):
        half = Profile(np.array([0.0, 2.0, 6.0]), np.array([2 ** -1.5, 0.0]))   # (1/sqrt2) L(s/2)
        fit = fit_moser_profile(half)
        assert fit.s0 == pytest.approx(2.0, rel=1e-6) and fit.residual <= 1e-8
        fit = fit_moser_profile(L)
        assert fit.s0 == pytest.approx(1.0, rel=1e-6) and fit.residual <= 1e-8

    def test_translated_is_far(self):
        assert fit_moser_profile(translate_profile(L, 1.0)).residual > 0.1

    def test_zero(self):
        with pytest.raises(ZeroProfile):
            fit_moser_profile(Profile.zero())


class TestSmoothing:
    def test_moser(self):
        sm = smooth_profile(L, 0.1)
        assert deriv_dist(sm, L) <= 0.1
        assert abs(sm.tail_value) <= 1e-9

    def test_smooth_input_near_identity(self):
        s = np.linspace(0, 4, 16385)
        psi = Profile.from_values(s, np.sin(np.pi * s / 4) ** 2)
        assert deriv_dist(smooth_profile(psi, 1.0), psi) <= 1e-3

    def test_zero(self):
        z = Profile.zero()
        assert smooth_profile(z, 0.1).is_zero()


class TestMembership:
    @pytest.mark.parametrize("psi", [L, translate_profile(L, 2.0), ramp_profile()])
    def test_holder(self, psi):
        assert holder_excess(psi) <= 1e-12

    def test_end_ratios_small(self):
        lo, hi = end_ratios(L)
        assert lo <= 1.0 and hi <= 0.5


class TestCutoff:
    def test_branches(self):
        a, M = 0.2, 3.0
        assert cutoff_theta(a, M, a / 4) == 0.0
        assert cutoff_theta(a, M, (a + M) / 2) == pytest.approx((a + M) / 2)
        assert cutoff_theta(a, M, 2 * M) == M
        assert cutoff_theta(a, M, 0.75 * a) == pytest.approx(0.5 * a)
        assert cutoff_theta(a, M, -2 * M) == -M

    def test_bad_range(self):
        with pytest.raises(BadRange):
            cutoff_theta(1.0, 0.5, 0.3)
        with pytest.raises(BadRange):
            apply_cutoff(gen_moser(10), 10, 2.0, 1.0)

    def test_identity_in_window(self):
        f = gen_moser(20)
        g = apply_cutoff(f, 20, 0.05, 10.0)
        for y in (0.1, 0.5, 0.9, 2.0):
            p = (math.exp(-20 * y), 0.0)
            assert evaluate(g, p) == pytest.approx(evaluate(f, p), rel=1e-14)

    def test_zero_field(self):
        assert orlicz_norm(apply_cutoff(Field(), 10, 0.05, 10.0)) == 0.0

    @pytest.mark.parametrize("beta,core,tol", [(1e5, (0.0, 0.0), 0.05), (1000.0, (1.5, 0.0), 1e-10)])
    def test_profile_of_cutoff_sum(self, beta, core, tol):
        alpha = 10.0 if core == (0.0, 0.0) else 40.0
        cfg = ExtractionConfig()
        u = SumField([concentration(alpha, (0, 0), L), concentration(beta, core, L)])
        psi = extract_profile(apply_cutoff(u, alpha, cfg.cutoff_a, cfg.cutoff_M), alpha, (0, 0), cfg)
        y = profile_grid(cfg)
        ref = Profile.from_values(y, cutoff_theta(cfg.cutoff_a, cfg.cutoff_M, L(y)))
        assert deriv_dist(psi, ref) <= tol


class TestGenerators:
    def test_matrix_log_determinant(self):
        alpha, a = 40.0, 0.05
        d = math.exp(a * alpha)
        assert matrix_conditions(alpha, np.diag([d, d]))["a"] == pytest.approx(a, rel=1e-12)

    def test_matrix_violation_names_condition(self):
        with pytest.raises(MatrixConditionViolated) as exc:
            gen_matrix(40, [[100.0, 0.0], [0.0, 1.0]])
        assert exc.value.failed == ["matrix2"]
        assert "matrix2" in str(exc.value)
        with pytest.raises(MatrixConditionViolated) as exc:
            gen_matrix(10, [[0.01, 0.0], [0.0, 0.01]])
        assert "matrix1" in exc.value.failed and "matrix3" in exc.value.failed

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    def test_inverse_norm_identity(self, m):
        A = np.array(m).reshape(2, 2)
        det = abs(np.linalg.det(A))
        if det < 1e-3:
            return
        n = np.linalg.norm(A, 2)
        assert np.linalg.norm(np.linalg.inv(A), 2) == pytest.approx(n / det, rel=1e-12)

    def test_matrix_family_equals_translated_profile(self):
        alpha, a = 40.0, 0.5
        d = math.exp(a * alpha)
        diff = SumField([gen_matrix(alpha, np.diag([d, d])), concentration(alpha, (0, 0), translate_profile(L, a))],
                        [1.0, -1.0])
        assert orlicz_norm(diff) <= 0.05

    def test_same_scale_pair_plateau(self):
        alpha = 30.0
        u = gen_same_scale_pair(alpha)
        xn = (0.5 * math.exp(-alpha), 0.0)
        p = (xn[0] + 0.5 * math.exp(-2 * alpha), xn[1])
        assert evaluate(u, p) == pytest.approx(2 * math.sqrt(alpha / (2 * math.pi)), rel=1e-12)

    def test_two_scale_sum(self):
        u = gen_two_scale_sum(1.0, 0.5, 20, 160, (0.3, 0.0))
        p = (0.3 + math.exp(-25), 0.0)
        assert evaluate(u, p) == pytest.approx(math.sqrt(20 / (2 * math.pi)) + 0.5 * evaluate(gen_moser(160), p))

    def test_anisotropic(self):
        u = gen_anisotropic(10, 2.0, 0.5)
        assert evaluate(u, (0.1, 0.4)) == pytest.approx(evaluate(gen_moser(10), (0.2, 0.2)), rel=1e-12)
        with pytest.raises(BadInput):
            gen_anisotropic(10, -1.0, 1.0)

    def test_diffeo_energy(self):
        # the shear has unit Jacobian, so the energy changes but stays finite
        e = dirichlet_energy(gen_diffeo(10))
        assert math.isfinite(e) and e >= 1.0

    def test_translate_away(self):
        u = gen_translate_away(gen_moser(10), (3.0, 0.0))
        assert evaluate(u, (-3.0, 0.0)) == pytest.approx(math.sqrt(10 / (2 * math.pi)))
        v = gen_translate_away(L, (1.0, 1.0), alpha=5.0)
        assert v.concentrations[0].core == (-1.0, -1.0)

    def test_flattening(self):
        u = gen_flattening(4.0)
        assert evaluate(u, (0.0, 0.0)) == pytest.approx(0.25)
        with pytest.raises(BadInput):
            gen_flattening(0.0)

    def test_custom(self):
        u = gen_custom([Triplet(10, (0, 0), L), Triplet(20, (0.5, 0), L)], [2.0, 1.0])
        assert evaluate(u, (1e-9, 0.0)) == pytest.approx(2 * math.sqrt(10 / (2 * math.pi)) +
                                                       evaluate(concentration(20, (0.5, 0)), (1e-9, 0.0)))
