"""Independent 1-D reference values computed with mpmath.

None of this touches the package's planar quadrature.  Running the module
prints the values frozen in ``FROZEN``; ``test_oracles.py`` checks that the
two still agree.
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 30


def _pl(knots, slopes):
    """Piecewise-linear profile from knots and slopes, constant past the last knot."""
    knots = [mp.mpf(k) for k in knots]
    slopes = [mp.mpf(s) for s in slopes]
    vals = [mp.mpf(0)]
    for i, s in enumerate(slopes):
        vals.append(vals[-1] + s * (knots[i + 1] - knots[i]))

    def psi(s):
        if s <= knots[0]:
            return mp.mpf(0)
        for i in range(len(slopes)):
            if s <= knots[i + 1]:
                return vals[i] + slopes[i] * (s - knots[i])
        return vals[-1]

    return psi, knots, vals[-1]


MOSER = ([0, 1, 5], [1, 0])


def translated(a):
    return ([0, a, a + 1, a + 5], [0, 1, 0])


def radial_phi(alpha, lam, prof=MOSER):
    """``int (exp((g/lam)^2) - 1)`` for ``g = sqrt(alpha/2pi) psi(-log r/alpha)``, via ``s = -log r``."""
    psi, knots, tail = _pl(*prof)
    alpha, lam = mp.mpf(alpha), mp.mpf(lam)
    c = alpha / (2 * mp.pi) / lam**2
    f = lambda s: mp.expm1(c * psi(s / alpha) ** 2) * mp.exp(-2 * s)
    body = 2 * mp.pi * mp.quad(f, [k * alpha for k in knots])
    return body + mp.pi * mp.exp(-2 * knots[-1] * alpha) * mp.expm1(c * tail**2)


def radial_orlicz(alpha, prof=MOSER, kappa=1):
    lo, hi = mp.mpf("1e-3"), mp.mpf(5)
    for _ in range(80):
        mid = (lo + hi) / 2
        if radial_phi(alpha, mid, prof) > kappa:
            lo = mid
        else:
            hi = mid
    return float(hi)


def radial_l2(alpha, prof=MOSER):
    psi, knots, tail = _pl(*prof)
    alpha = mp.mpf(alpha)
    f = lambda s: alpha / (2 * mp.pi) * psi(s / alpha) ** 2 * mp.exp(-2 * s)
    body = 2 * mp.pi * mp.quad(f, [k * alpha for k in knots])
    return float(mp.sqrt(body + mp.pi * mp.exp(-2 * knots[-1] * alpha) * alpha / (2 * mp.pi) * tail**2))


def disc_indicator_orlicz(c, R, kappa=1):
    return float(c / mp.sqrt(mp.log(1 + kappa / (mp.pi * R**2))))


def variant_integral(p, q, alpha, beta):
    f = lambda s: mp.exp(q * s**2 / beta - 2 * s)
    return float(mp.exp(p * alpha) * mp.quad(f, mp.linspace(alpha, beta, 9)))


def same_core_cross(alpha, beta):
    """``<grad g_alpha, grad g_beta> / 1`` for two Moser bubbles on one core (energies are 1)."""
    da = lambda s: mp.sqrt(alpha / (2 * mp.pi)) / alpha if s < alpha else 0
    db = lambda s: mp.sqrt(beta / (2 * mp.pi)) / beta if s < beta else 0
    return float(2 * mp.pi * mp.quad(lambda s: da(s) * db(s), [0, min(alpha, beta)]))


def away_integral(alpha, M):
    f = lambda r: mp.expm1(mp.log(r) ** 2 / (2 * mp.pi * alpha)) * r
    return float(2 * mp.pi * mp.quad(f, [M, 1]))


def same_scale_bound(alpha, kappa=1):
    return float(mp.sqrt(2 * alpha / (mp.pi * mp.log(1 + kappa / mp.pi * mp.exp(4 * alpha)))))


def gaussian_l2(n):
    f = lambda r: (mp.exp(-(r / n) ** 2) / n) ** 2 * 2 * mp.pi * r
    return float(mp.sqrt(mp.quad(f, [0, mp.inf])))


def compute_all() -> dict:
    out = {}
    for a in (10, 20, 40, 80):
        out[f"moser_orlicz_{a}"] = radial_orlicz(a)
        out[f"moser_l2_{a}"] = radial_l2(a)
    for a in (1, 3):
        out[f"translated_orlicz_80_{a}"] = radial_orlicz(80, translated(a))
    out["disc_orlicz_2_0.5"] = disc_indicator_orlicz(2, mp.mpf("0.5"))
    for b in (100, 200, 400):
        out[f"variant_1_1_10_{b}"] = variant_integral(1, 1, 10, b)
    out["variant_1_1_20_400"] = variant_integral(1, 1, 20, 400)
    out["cross_20_160"] = same_core_cross(20, 160)
    out["cross_20_400"] = same_core_cross(20, 400)
    out["away_40_0.5"] = away_integral(40, mp.mpf("0.5"))
    out["same_scale_bound_40"] = same_scale_bound(40)
    out["gaussian_l2_4"] = gaussian_l2(4)
    return out


FROZEN = {
    'moser_orlicz_10': 0.3029883941755622,
    'moser_l2_10': 0.1581138795865004,
    'moser_orlicz_20': 0.2899246302159837,
    'moser_l2_20': 0.11180339887498948,
    'moser_orlicz_40': 0.2856246191295924,
    'moser_l2_40': 0.07905694150420949,
    'moser_orlicz_80': 0.28378294491550055,
    'moser_l2_80': 0.05590169943749474,
    'translated_orlicz_80_1': 0.19991978340684968,
    'translated_orlicz_80_3': 0.141188508854133,
    'disc_orlicz_2_0.5': 2.2070082583152546,
    'variant_1_1_10_100': 6.899230863708757e-05,
    'variant_1_1_10_200': 3.9505749006483134e-05,
    'variant_1_1_10_400': 2.993416471367396e-05,
    'variant_1_1_20_400': 2.952941585844117e-09,
    'cross_20_160': 0.3535533905932738,
    'cross_20_400': 0.22360679774997896,
    'away_40_0.5': 0.0010205113620368191,
    'same_scale_bound_40': 0.40037711280329874,
    'gaussian_l2_4': 1.2533141373155003,
}


if __name__ == "__main__":
    for k, v in compute_all().items():
        print(f"    {k!r}: {v!r},")
