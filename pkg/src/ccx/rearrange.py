"""Schwarz symmetric decreasing rearrangement and distribution functions."""

from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np

from .errors import BadInput
from .field import BaseField, Kink, QuadratureSpec, RadialField
from .quadrature import integrate_log, sample

__all__ = ["RadialDecreasing", "distribution_function", "log_level_measure", "rearrangement_levels",
           "schwarz_rearrange"]


class RadialDecreasing(RadialField):
    """Nonnegative radial function centered at the origin, nonincreasing in ``r``.

    Stored on the log-radius grid ``s = -log r`` (increasing), so that
    ``values`` is nondecreasing along the grid.
    """

    def __init__(self, log_radii, values):
        v = np.asarray(values, dtype=float)
        if np.any(v < 0) or np.any(np.diff(v) < -1e-12 * max(1.0, float(np.max(np.abs(v))))):
            raise BadInput("rearranged values must be nonnegative and nonincreasing in r")
        super().__init__(log_radii, v, (0.0, 0.0))

    @property
    def log_radii(self) -> np.ndarray:
        return self.s

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            s = -np.log(r)
        out = np.where(s < self.s[0], 0.0, np.interp(s, self.s, self.values))
        return out if out.ndim else float(out)

    def to_json(self) -> dict[str, Any]:
        return {"log_radii": self.s.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "RadialDecreasing":
        return cls(obj["log_radii"], obj["values"])


def _level_kink(field: BaseField, levels: Sequence[float]) -> Kink:
    return Kink(field.eval, np.asarray(levels, dtype=float))


def log_level_measure(field: BaseField, t: float, spec: QuadratureSpec | None = None) -> float:
    """``log |{|u| > t}|`` (``-inf`` for an empty set).

    The level curves ``u = +-t`` are passed to the quadrature as kinks so that
    every panel boundary crossing them is located exactly.
    """
    if not t > 0:
        raise BadInput("level must be positive")
    smp = sample([field], spec, extra_kinks=[_level_kink(field, [-t, t])])
    return integrate_log(lambda s: (np.abs(s.values[0]) > t).astype(float), [field], sampled=smp)


def distribution_function(field: BaseField, t: float, spec: QuadratureSpec | None = None) -> float:
    """Lebesgue measure of ``{|u| > t}``."""
    lv = log_level_measure(field, t, spec)
    return math.exp(lv) if np.isfinite(lv) else 0.0


def rearrangement_levels(vmax: float, n_uniform: int = 96, n_geometric: int = 32) -> np.ndarray:
    """Value levels at which the rearrangement is resolved.

    Uniform levels follow profiles linear in ``-log r``, geometric ones the
    small-value tail, and levels crowding ``vmax`` resolve plateaus and peaks.
    """
    # midpoints keep simple fractions of vmax (often plateau values) off the grid
    uni = vmax * (np.arange(n_uniform) + 0.5) / n_uniform
    geo = vmax * np.logspace(-6.0, 0.0, n_geometric, endpoint=False)
    top = vmax * (1.0 - np.logspace(-2.0, -9.0, 8))
    return np.unique(np.concatenate([geo, uni, top]))


def schwarz_rearrange(field: BaseField, spec: QuadratureSpec | None = None,
                      n_levels: int = 128, extra_levels: Sequence[float] = ()) -> RadialDecreasing:
    """Symmetric decreasing rearrangement of ``|u|``.

    A first sample finds ``max |u|``.  The field is then resampled with the
    level curves of a fixed set of values passed to the quadrature as kinks,
    so every superlevel set at those values is integrated exactly.  Nodes are
    sorted by ``|u|`` with ties merged, their log-measures accumulated, and
    the measure above each level gives a knot ``(-log r, t)`` with
    ``pi r^2 = |{|u| > t}|``.  Between knots the rearrangement is linear in
    ``-log r``.  ``extra_levels`` adds knots where a caller needs a kink
    located precisely.
    """
    first = sample([field], spec)
    v0 = np.abs(first.values[0])
    vmax = float(v0.max()) if v0.size else 0.0
    if not vmax > 0:
        return RadialDecreasing([0.0, 1.0], [0.0, 0.0])
    n_uni = max(2, (3 * n_levels) // 4)
    levels = rearrangement_levels(vmax, n_uni, max(1, n_levels - n_uni))
    # kinks of a pointwise map (cutoffs) are kinks of u* as well
    own = np.abs(np.asarray(getattr(field, "levels", ()), dtype=float))
    extra = np.concatenate([np.asarray(extra_levels, dtype=float).ravel(), own.ravel()])
    levels = np.unique(np.concatenate([levels, extra[(extra > 0) & (extra < vmax)]]))
    smp = sample([field], spec, extra_kinks=[_level_kink(field, np.concatenate([-levels[::-1], levels]))])
    v = np.abs(smp.values[0])
    lw = smp.log_w
    keep = (v > 0) & np.isfinite(lw)
    v, lw = v[keep], lw[keep]
    order = np.argsort(-v, kind="stable")
    v, lw = v[order], lw[order]
    uniq, start = np.unique(-v, return_index=True)
    if uniq.size < v.size:               # ties share one step
        lw = np.logaddexp.reduceat(lw, start)
        v = -uniq
    cum = np.logaddexp.accumulate(lw)    # log measure of {|u| >= v_g}
    # log measure of {|u| > t}: all groups strictly above t
    k = np.searchsorted(-v, -levels, side="left")
    lm = np.where(k > 0, cum[np.maximum(k - 1, 0)], -np.inf)
    lm = np.concatenate([[cum[-1]], lm])
    t = np.concatenate([[0.0], levels])
    ok = np.isfinite(lm)
    lm, t = lm[ok], t[ok]
    s = -0.5 * (lm - math.log(math.pi))
    # equal measures mean a jump of u*; keep it as a very steep ramp
    for i in range(1, s.size):
        floor = s[i - 1] + 1e-9 * max(1.0, abs(s[i - 1]))
        if s[i] < floor:
            s[i] = floor
    if s.size < 2:
        s = np.array([s[0], s[0] + 1.0])
        t = np.array([t[0], t[0]])
    return RadialDecreasing(s, t)
