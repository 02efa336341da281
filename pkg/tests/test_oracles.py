"""Recompute the cheap reference values and compare with the frozen ones."""

import mpmath as mp
import pytest

import oracles
from oracles import FROZEN


@pytest.mark.parametrize("key,compute", [
    ("moser_l2_40", lambda: oracles.radial_l2(40)),
    ("disc_orlicz_2_0.5", lambda: oracles.disc_indicator_orlicz(2, mp.mpf("0.5"))),
    ("variant_1_1_10_200", lambda: oracles.variant_integral(1, 1, 10, 200)),
    ("cross_20_160", lambda: oracles.same_core_cross(20, 160)),
    ("away_40_0.5", lambda: oracles.away_integral(40, mp.mpf("0.5"))),
    ("same_scale_bound_40", lambda: oracles.same_scale_bound(40)),
    ("gaussian_l2_4", lambda: oracles.gaussian_l2(4)),
])
def test_frozen_matches_recomputed(key, compute):
    assert compute() == pytest.approx(FROZEN[key], rel=1e-12)


def test_closed_forms():
    # |grad| overlap of two same-core bubbles is sqrt(alpha/beta); gaussian l2 is n-independent
    assert FROZEN["cross_20_160"] == pytest.approx((20 / 160) ** 0.5, rel=1e-14)
    assert FROZEN["gaussian_l2_4"] == pytest.approx((mp.pi / 2) ** 0.5, rel=1e-14)
    assert FROZEN["moser_l2_40"] == pytest.approx((1 / 160) ** 0.5, rel=1e-12)
