"""Profiles, the Moser family, cutoffs and the example field generators."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BadInput, BadRange, MatrixConditionViolated, NegativeShift, ZeroProfile
from .field import (ArgumentMap, BaseField, Field, GaussianBump, LinearMap, MappedField, RadialPower,
                    SumField, shear)
from .profile import Profile, Triplet, as_point

__all__ = [
    "moser_profile", "translate_profile", "scale_profile", "ramp_profile", "profile_sup_ratio",
    "fit_moser_profile", "smooth_profile", "holder_excess", "end_ratios", "cutoff_theta",
    "apply_cutoff", "concentration", "gen_moser", "gen_anisotropic", "gen_diffeo", "gen_matrix",
    "matrix_conditions", "gen_same_scale_pair", "gen_two_scale_sum", "gen_translate_away",
    "gen_flattening", "gen_custom", "GENERATORS",
]

DEFAULT_S_MAX = 5.0


# ---------------------------------------------------------------------------
# profiles

def moser_profile(s_max: float = DEFAULT_S_MAX) -> Profile:
    """``L(s) = min(s, 1)`` on ``[0, s_max]`` with exact knots at 0 and 1."""
    if s_max <= 1.0:
        raise BadInput("s_max must exceed 1 for the Moser profile")
    return Profile(np.array([0.0, 1.0, s_max]), np.array([1.0, 0.0]))


def translate_profile(psi: Profile, a: float) -> Profile:
    """``psi_a(s) = psi(s - a)``; vanishes on ``[0, a]``."""
    a = float(a)
    if a < 0 or not np.isfinite(a):
        raise NegativeShift(f"shift must be nonnegative, got {a}")
    if a == 0.0:
        return psi
    return Profile(np.concatenate([[0.0], psi.knots + a]), np.concatenate([[0.0], psi.slopes]))


def scale_profile(psi: Profile, lam: float) -> Profile:
    """``psi_lam(t) = lam**-0.5 * psi(lam * t)``; keeps the energy."""
    lam = float(lam)
    if not (lam > 0 and np.isfinite(lam)):
        raise BadInput(f"scale factor must be positive, got {lam}")
    if lam == 1.0:
        return psi
    return Profile(psi.knots / lam, psi.slopes * math.sqrt(lam))


def ramp_profile(s_max: float = DEFAULT_S_MAX, n: int = 2048) -> Profile:
    """Smooth increasing ramp ``(1 - cos(pi s / 2)) / 2`` up to ``s = 2``, then flat."""
    grid = np.linspace(0.0, 2.0, n + 1)
    vals = 0.5 * (1.0 - np.cos(0.5 * np.pi * grid))
    ramp = Profile.from_values(grid, vals)
    return Profile(np.concatenate([ramp.knots, [s_max]]), np.concatenate([ramp.slopes, [0.0]]))


class SupRatio(NamedTuple):
    value: float
    argmax: float


def _cell_extrema(psi: Profile):
    """Candidate points for extrema of ``|psi(s)| / sqrt(s)``.

    On a linear cell ``psi = c + m s`` the ratio is ``c s^-1/2 + m s^1/2`` with
    a single stationary point at ``s = c / m``.
    """
    k, v, m = psi.knots, psi.values, psi.slopes
    c = v[:-1] - m * k[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        s_star = np.where(m != 0, c / m, np.nan)
    ok = np.isfinite(s_star) & (s_star > k[:-1]) & (s_star < k[1:])
    return np.concatenate([k[1:], s_star[ok]])


def profile_sup_ratio(psi: Profile) -> SupRatio:
    """``max_{s > 0} |psi(s)| / sqrt(s)`` and its location.

    The maximum is located exactly: cell endpoints plus the stationary point of
    each linear piece (the constant tail only decreases).
    """
    if psi.is_zero():
        raise ZeroProfile("sup ratio of the zero profile is undefined")
    cand = _cell_extrema(psi)
    ratio = np.abs(psi(cand)) / np.sqrt(cand)
    i = int(np.argmax(ratio))
    return SupRatio(float(ratio[i]), float(cand[i]))


class MoserFit(NamedTuple):
    s0: float
    residual: float


def _fit_objective(psi: Profile, energy: float, s0: float) -> float:
    # int (psi' - m 1_[0,s0])^2 with m = s0^{-3/2}, the slope of s0^{-1/2} L(s/s0)
    m = s0 ** -1.5
    return energy - 2.0 * m * float(psi(s0)) + m * m * s0


def fit_moser_profile(psi: Profile) -> MoserFit:
    """Least-squares fit of ``psi`` by the family ``s0^{-1/2} L(s / s0)``.

    Returns the best ``s0`` and the L2 distance between the derivatives.
    """
    if psi.is_zero():
        raise ZeroProfile("cannot fit the zero profile")
    energy = psi.energy()
    lo = max(psi.knots[1] * 1e-3, 1e-6)
    hi = psi.s_max * 1e3
    grid = np.unique(np.concatenate([np.geomspace(lo, hi, 801), psi.knots[1:]]))
    obj = np.array([_fit_objective(psi, energy, s) for s in grid])
    i = int(np.argmin(obj))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    best_s, best = float(grid[i]), float(obj[i])
    if b > a:
        res = minimize_scalar(lambda s: _fit_objective(psi, energy, s), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * b})
        if res.fun < best:
            best_s, best = float(res.x), float(res.fun)
    return MoserFit(best_s, math.sqrt(max(best, 0.0)))


def _bump(x):
    """Smooth bump ``exp(-1 / (1 - x^2))`` on ``(-1, 1)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def _mollify(h: float, g: np.ndarray, delta: float) -> np.ndarray:
    half = int(round(delta / h))
    xs = np.arange(-half, half + 1) * h / delta
    ker = _bump(xs)
    ker /= ker.sum()
    return np.convolve(g, ker, mode="same")


def smooth_profile(psi: Profile, eps: float) -> Profile:
    """Profile with smooth, compactly supported derivative within ``eps`` of ``psi'`` in L2.

    The derivative is cut off near 0 and mollified (error at most ``eps/2``),
    then a wide normalised bump carrying its integral is subtracted so that the
    result returns to 0; the bump's width is chosen to cost at most ``eps/2``.
    """
    eps = float(eps)
    if not (eps > 0):
        raise BadInput("eps must be positive")
    if psi.is_zero():
        return psi
    span = psi.last_active()
    target = eps / 2.0
    delta = span / 4096.0
    while True:
        h = delta / 16.0
        n = int(math.ceil((span + 4 * delta) / h))
        mids = (np.arange(n) + 0.5) * h
        g = psi.derivative(mids)
        cut = np.where(mids >= 2 * delta, g, 0.0)
        chi = _mollify(h, cut, delta)
        err = math.sqrt(float(np.sum((g - chi) ** 2)) * h)
        if err <= target or delta < 1e-9 * span:
            break
        delta /= 2.0
    mass = float(np.sum(chi)) * h
    knots = np.arange(n + 1) * h
    slopes = chi
    if mass != 0.0:
        l1 = float(np.sum(np.abs(chi))) * h
        tg = np.linspace(-1.0, 1.0, 4097)
        theta0 = _bump(tg)
        theta0 /= np.sum(theta0) * (tg[1] - tg[0]) / 2.0     # unit mass on [1, 2]
        th_l2 = math.sqrt(float(np.sum(theta0**2)) * (tg[1] - tg[0]) / 2.0)
        lam = target**2 / (l1**2 * th_l2**2)
        start = max(1.0 / lam, knots[-1])
        m = 1024
        tk = start + np.arange(m + 1) / (m * lam)
        tmid = 0.5 * (tk[:-1] + tk[1:])
        # theta^lam(s) = lam theta0(lam s), theta0 supported on [1, 2]
        tvals = lam * np.interp(2.0 * lam * (tmid - start) - 1.0, tg, theta0)
        tvals *= 1.0 / (np.sum(tvals) * (tk[1] - tk[0]))
        if tk[0] > knots[-1]:
            knots = np.concatenate([knots, tk])
            slopes = np.concatenate([slopes, [0.0], -mass * tvals])
        else:
            knots = np.concatenate([knots, tk[1:]])
            slopes = np.concatenate([slopes, -mass * tvals])
    return Profile(knots, slopes)


def holder_excess(psi: Profile, n: int = 512) -> float:
    """Largest ``|psi(s2) - psi(s1)| - sqrt(s2 - s1) * ||psi'||`` over sample pairs (<= 0 for members)."""
    s = np.linspace(0.0, psi.s_max, n)
    v = psi(s)
    d = np.abs(v[None, :] - v[:, None])
    gap = np.sqrt(np.abs(s[None, :] - s[:, None]))
    return float(np.max(d - gap * math.sqrt(psi.energy())))


def end_ratios(psi: Profile) -> tuple[float, float]:
    """``|psi(s)| / sqrt(s)`` at the first grid point and at ``s_max``."""
    s0 = float(psi.knots[1])
    return abs(psi(s0)) / math.sqrt(s0), abs(psi.tail_value) / math.sqrt(psi.s_max)


# ---------------------------------------------------------------------------
# cutoffs

def cutoff_theta(a: float, M: float, s):
    """The odd cutoff that kills ``|s| <= a/2``, is linear up to ``a`` and saturates at ``M``."""
    if not (0 < a < M):
        raise BadRange(f"cutoff needs 0 < a < M, got a={a}, M={M}")
    s = np.asarray(s, dtype=float)
    x = np.abs(s)
    out = np.where(x <= a / 2, 0.0, np.where(x <= a, 2 * x - a, np.minimum(x, M)))
    out = np.sign(s) * out
    return out if out.ndim else float(out)


def _cutoff_slope(a, M, s):
    x = np.abs(np.asarray(s, dtype=float))
    return np.where(x <= a / 2, 0.0, np.where(x <= a, 2.0, np.where(x <= M, 1.0, 0.0)))


def apply_cutoff(field: BaseField, alpha: float, a: float, M: float) -> BaseField:
    """Lazy field ``sqrt(alpha/2pi) * Theta(sqrt(2pi/alpha) * u)``."""
    if not (0 < a < M):
        raise BadRange(f"cutoff needs 0 < a < M, got a={a}, M={M}")
    amp = math.sqrt(alpha / (2 * math.pi))
    levels = amp * np.array([-M, -a, -a / 2, a / 2, a, M])
    out = MappedField(field, lambda v: amp * cutoff_theta(a, M, np.asarray(v) / amp),
                      lambda v: _cutoff_slope(a, M, np.asarray(v) / amp), levels, label="cutoff")
    out.params = {"alpha": float(alpha), "a": float(a), "M": float(M)}
    return out


# ---------------------------------------------------------------------------
# generators

def concentration(alpha: float, core=(0.0, 0.0), psi: Profile | None = None) -> Field:
    """Single elementary concentration ``sqrt(alpha/2pi) psi(-log|x - core| / alpha)``."""
    return Field([Triplet(alpha, as_point(core), psi if psi is not None else moser_profile())])


def gen_moser(alpha: float) -> Field:
    return concentration(alpha)


def gen_anisotropic(alpha: float, lam1: float, lam2: float) -> Field:
    """``f_alpha(lam1 x1, lam2 x2)``."""
    if not (lam1 > 0 and lam2 > 0):
        raise BadInput("anisotropic stretch factors must be positive")
    return Field([Triplet(alpha, (0.0, 0.0), moser_profile())], transform=LinearMap(np.diag([lam1, lam2])))


def _parse_map(spec) -> ArgumentMap:
    if isinstance(spec, ArgumentMap):
        return spec
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        if kind == "shear":
            return shear(float(arg or 1.0))
        if kind == "radial_power":
            return RadialPower(float(arg or 2.0))
    raise BadInput(f"unknown diffeomorphism {spec!r} (use shear:k or radial_power:q)")


def gen_diffeo(alpha: float, psi: Profile | None = None, phi="shear:1") -> Field:
    """``g(alpha, 0, psi)`` composed with a built-in diffeomorphism."""
    return Field([Triplet(alpha, (0.0, 0.0), psi if psi is not None else moser_profile())],
                 transform=_parse_map(phi))


def matrix_conditions(alpha: float, A) -> dict[str, float]:
    """Finite-scale values of the three matrix-family conditions."""
    A = np.asarray(A, dtype=float).reshape(2, 2)
    det = abs(float(np.linalg.det(A)))
    if det == 0.0:
        raise BadInput("matrix must be invertible")
    norm = float(np.linalg.norm(A, 2))
    return {
        "alpha_det": alpha * det,
        "norm_ratio": norm**2 / det,
        "a": 0.5 * math.log(det) / alpha,
    }


def gen_matrix(alpha: float, A, ratio_bound: float = 10.0) -> Field:
    """``f_alpha(A x)`` after checking the matrix conditions at this ``alpha``.

    The growth condition is read as ``alpha |det A| >= 1``, the comparability
    condition as ``||A||^2 <= ratio_bound |det A|`` and the log-determinant
    condition as ``a >= 0``.
    """
    vals = matrix_conditions(alpha, A)
    failed = []
    if not vals["alpha_det"] >= 1.0:
        failed.append("matrix1")
    if not vals["norm_ratio"] <= ratio_bound:
        failed.append("matrix2")
    if not vals["a"] >= 0.0:
        failed.append("matrix3")
    if failed:
        raise MatrixConditionViolated(failed, vals)
    return Field([Triplet(alpha, (0.0, 0.0), moser_profile())], transform=LinearMap(A))


def gen_same_scale_pair(alpha: float) -> Field:
    """``f_alpha + g(alpha, x_n, L_1)`` with ``|x_n| = e^{-alpha} / 2``."""
    L = moser_profile()
    core = (0.5 * math.exp(-alpha), 0.0)
    return Field([Triplet(alpha, (0.0, 0.0), L), Triplet(alpha, core, translate_profile(L, 1.0))])


def gen_two_scale_sum(a: float, b: float, alpha: float, beta: float, core=(0.0, 0.0)) -> BaseField:
    """``a f_alpha(x - core) + b f_beta(x)``."""
    L = moser_profile()
    return SumField([Field([Triplet(alpha, as_point(core), L)]), Field([Triplet(beta, (0.0, 0.0), L)])],
                    [float(a), float(b)])


def gen_translate_away(base, x_shift, alpha: float = 1.0) -> Field:
    """``u(x) = phi(x + x_shift)`` for a profile (as a concentration of scale ``alpha``) or a field."""
    sx, sy = as_point(x_shift)
    if isinstance(base, Profile):
        return Field([Triplet(alpha, (-sx, -sy), base)])
    if isinstance(base, Field) and base.background is None and base.transform.kind == "identity":
        trs = [Triplet(t.alpha, (t.core[0] - sx, t.core[1] - sy), t.profile) for t in base.concentrations]
        return Field(trs, support_radius=base.support_radius + math.hypot(sx, sy))
    raise BadInput("translate_away needs a profile or an untransformed concentration field")


def gen_flattening(n: float) -> Field:
    """``(1/n) exp(-|x/n|^2)``, truncated where it falls below ``e^{-64}/n``."""
    if not n > 0:
        raise BadInput("flattening index must be positive")
    return Field(background=GaussianBump(1.0 / n, float(n)), support_radius=8.0 * n)


def gen_custom(triplets: Sequence[Triplet], coefs: Sequence[float] | None = None) -> BaseField:
    """Weighted sum of single concentrations."""
    fields = [Field([t]) for t in triplets]
    return SumField(fields, coefs)


GENERATORS = {
    "moser": gen_moser,
    "anisotropic": gen_anisotropic,
    "diffeo": gen_diffeo,
    "matrix": gen_matrix,
    "same_scale_pair": gen_same_scale_pair,
    "two_scale_sum": gen_two_scale_sum,
    "translate_away": gen_translate_away,
    "flattening": gen_flattening,
    "custom": gen_custom,
}
