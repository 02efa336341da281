"""L2 and Dirichlet norms, the Luxemburg norm of ``exp(s^2) - 1`` and related functionals.

Every integral goes through the shared multi-scale quadrature and is
accumulated in log space, so the exponential integrands stay finite even when
``u^2 / lambda^2`` reaches several hundred.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import (BadInput, DomainError, GradientConstraintViolated, NoConvergence, NumericalFailure,
                     OverflowDominant)
from .field import BaseField, QuadratureSpec, Region
from .quadrature import Sample, _gauss, integrate_log, logsumexp_signed, sample

logger = logging.getLogger(__name__)

__all__ = ["OrliczConfig", "l2_norm", "dirichlet_energy", "orlicz_norm", "orlicz_phi",
           "tm_refined_functional", "TMResult", "variant_integral", "log_expm1"]


@dataclass(frozen=True)
class OrliczConfig:
    """Settings of the Luxemburg-norm bisection.

    ``threshold`` is the level ``kappa`` that ``int (exp(u^2/lambda^2) - 1)``
    must not exceed.
    """

    threshold: float = 1.0
    rel_tol: float = 1e-6
    max_iters: int = 200

    def __post_init__(self) -> None:
        if not (self.threshold > 0 and math.isfinite(self.threshold)):
            raise BadInput("threshold must be positive")
        if not (0 < self.rel_tol <= 1e-4):
            raise BadInput("rel_tol must lie in (0, 1e-4]")
        if self.max_iters < 1:
            raise BadInput("max_iters must be positive")

    def to_json(self) -> dict:
        return asdict(self)


def log_expm1(x: np.ndarray) -> np.ndarray:
    """``log(exp(x) - 1)`` for ``x >= 0`` without overflow (``-inf`` at 0)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    big = x > 1.0
    out[big] = x[big] + np.log1p(-np.exp(-x[big]))
    with np.errstate(divide="ignore"):
        out[~big] = np.log(np.expm1(x[~big]))
    return out


def _sample(field: BaseField, spec, region=None, grad=False) -> Sample:
    return sample([field], spec, grad=grad, region=region)


def l2_norm(field: BaseField, spec: QuadratureSpec | None = None, region: Region | None = None,
            sampled: Sample | None = None) -> float:
    """``(int u^2)^(1/2)``."""
    if field.is_zero():
        return 0.0
    smp = sampled or _sample(field, spec, region)
    lv = integrate_log(lambda s: s.values[0] ** 2, [field], sampled=smp)
    return math.exp(0.5 * lv) if np.isfinite(lv) else 0.0


def dirichlet_energy(field: BaseField, spec: QuadratureSpec | None = None, region: Region | None = None,
                     sampled: Sample | None = None) -> float:
    """``int |grad u|^2``; cores are never sampled, so no node sits on a singular point."""
    if field.is_zero():
        return 0.0
    smp = sampled or _sample(field, spec, region, grad=True)
    lv = integrate_log(lambda s: (s.grad_log_sq(0) + 2.0 * s.t, np.ones(s.size)), [field], sampled=smp)
    return math.exp(lv) if np.isfinite(lv) else 0.0


def orlicz_phi(smp: Sample, lam: float, k: int = 0) -> float:
    """``log int (exp((u/lam)^2) - 1)`` on a prepared sample."""
    x = (smp.values[k] / lam) ** 2
    return integrate_log(lambda s: (log_expm1(x), np.ones(x.size)), [], sampled=smp)


def orlicz_norm(field: BaseField, cfg: OrliczConfig | None = None, spec: QuadratureSpec | None = None,
                region: Region | None = None, sampled: Sample | None = None) -> float:
    """Least ``lam`` with ``int_region (exp((u/lam)^2) - 1) <= kappa``.

    Bisection between ``||u||_2 / sqrt(kappa)``, where the integral is at least
    ``kappa``, and an upper bracket found by doubling.
    """
    cfg = cfg or OrliczConfig()
    if field.is_zero():
        return 0.0
    smp = sampled or _sample(field, spec, region)
    if not np.any(smp.values[0]):
        return 0.0
    log_kappa = math.log(cfg.threshold)
    seen: list[tuple[float, float]] = []

    def log_phi(lam: float) -> float:
        try:
            v = orlicz_phi(smp, lam)
        except OverflowDominant:
            v = math.inf
        for lam2, v2 in seen:
            if (lam2 < lam and v2 < v - 1e-9 * max(1.0, abs(v))) or \
                    (lam2 > lam and v2 > v + 1e-9 * max(1.0, abs(v))):
                raise NumericalFailure(f"bisection objective not monotone at lambda={lam:.6g} vs {lam2:.6g}")
        seen.append((lam, v))
        return v

    l2 = l2_norm(field, sampled=smp)
    lo = l2 / math.sqrt(cfg.threshold)
    hi = 2.0 * lo if lo > 0 else 1.0
    iters, step = 0, 2.0
    # the L2 bound can be very small for concentrated fields; widen the step
    while log_phi(hi) > log_kappa:
        lo, hi = hi, step * hi
        step *= step
        iters += 1
        if iters > cfg.max_iters or not math.isfinite(hi):
            raise NoConvergence("no upper bracket for the Luxemburg norm")
    if log_phi(lo) <= log_kappa:
        return lo
    iters = 0
    while (hi - lo) > cfg.rel_tol * hi * 0.5:
        mid = math.sqrt(lo * hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
        if log_phi(mid) > log_kappa:
            lo = mid
        else:
            hi = mid
        iters += 1
        if iters > cfg.max_iters:
            raise NoConvergence(f"bisection did not reach rel_tol={cfg.rel_tol} in {cfg.max_iters} steps")
    logger.debug("orlicz norm %.12g after %d steps", hi, iters)
    return hi


class TMResult(NamedTuple):
    value: float
    ratio: float


def tm_refined_functional(field: BaseField, spec: QuadratureSpec | None = None,
                          sampled: Sample | None = None) -> TMResult:
    """``int (exp(4 pi u^2) - 1) / (1 + u^2)`` and its ratio to ``||u||_2^2``.

    Requires ``int |grad u|^2 <= 1``.
    """
    if field.is_zero():
        return TMResult(0.0, 0.0)
    smp = sampled or _sample(field, spec, grad=True)
    energy = dirichlet_energy(field, sampled=smp)
    if energy > 1.0 + 1e-6:
        raise GradientConstraintViolated(f"Dirichlet energy {energy:.9g} exceeds 1")
    u = smp.values[0]
    la = log_expm1(4 * math.pi * u * u) - np.log1p(u * u)
    lv = integrate_log(lambda s: (la, np.ones(u.size)), [], sampled=smp)
    if lv > math.log(np.finfo(float).max):
        raise OverflowDominant(lv)
    value = math.exp(lv) if np.isfinite(lv) else 0.0
    l2sq = l2_norm(field, sampled=smp) ** 2
    return TMResult(value, value / l2sq if l2sq > 0 else 0.0)


def variant_integral(p: float, q: float, alpha: float, beta: float, panel_nodes: int = 20) -> float:
    """``exp(p alpha) int_{e^-beta}^{e^-alpha} exp(q log(r)^2 / beta) r dr``.

    With ``r = e^{-s}`` the integrand is ``exp(p alpha + q s^2/beta - 2 s)`` on
    ``[alpha, beta]``, integrated by Gauss panels in log space.
    """
    if not (0 < p < 2 and 0 < q < 2):
        raise DomainError(f"p and q must lie in (0, 2), got p={p}, q={q}")
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")
    if alpha > beta:
        raise DomainError("need alpha <= beta")
    if alpha == beta:
        return 0.0
    width = max(1.0, (beta - alpha) / 4000.0)
    n = int(math.ceil((beta - alpha) / width))
    edges = np.linspace(alpha, beta, n + 1)
    xg, wg = _gauss(panel_nodes)
    h = np.diff(edges)
    s = (edges[:-1, None] + 0.5 * h[:, None] * (xg[None, :] + 1.0)).ravel()
    lw = (np.log(0.5 * h)[:, None] + np.log(wg)[None, :]).ravel()
    lf = p * alpha + q * s * s / beta - 2.0 * s
    lv, _ = logsumexp_signed(lf + lw, np.ones(s.size), 745.0)
    return math.exp(lv)
