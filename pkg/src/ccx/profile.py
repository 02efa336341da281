"""Piecewise-linear profiles and elementary-concentration triplets.

A profile is a function of the log-radial variable ``s >= 0`` that vanishes
at 0 and has square-integrable derivative.  It is stored by its derivative on
a knot grid (one slope per cell); values are cumulative integrals, so the
condition ``psi(0) = 0`` holds by construction.  Past the last knot the
profile is constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ProfileError

__all__ = ["Profile", "Triplet", "as_point"]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Profile:
    """Piecewise-linear element of the profile set.

    Parameters
    ----------
    knots : array_like
        Strictly increasing grid ``0 = s_0 < s_1 < ... < s_K``.
    slopes : array_like
        Derivative on each cell ``[s_k, s_{k+1})``, length ``K``.
    """

    knots: np.ndarray
    slopes: np.ndarray
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        knots = np.asarray(self.knots, dtype=float).ravel()
        slopes = np.asarray(self.slopes, dtype=float).ravel()
        if knots.size < 2 or slopes.size != knots.size - 1:
            raise ProfileError("profile needs K+1 knots and K slopes with K >= 1")
        if knots[0] != 0.0:
            raise ProfileError("profile grid must start at s = 0")
        if not np.all(np.isfinite(knots)) or np.any(np.diff(knots) <= 0):
            raise ProfileError("profile knots must be finite and strictly increasing")
        if not np.all(np.isfinite(slopes)):
            raise ProfileError("profile derivative is not finite")
        energy = float(np.sum(slopes**2 * np.diff(knots)))
        if not np.isfinite(energy):
            raise ProfileError("profile energy diverges")
        values = np.concatenate([[0.0], np.cumsum(slopes * np.diff(knots))])
        object.__setattr__(self, "knots", _readonly(knots))
        object.__setattr__(self, "slopes", _readonly(slopes))
        object.__setattr__(self, "values", _readonly(values))

    # construction -------------------------------------------------------
    @classmethod
    def from_values(cls, grid, values, atol: float = 1e-12) -> "Profile":
        """Build from sampled values; rejects ``psi(0) != 0``."""
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.shape != values.shape:
            raise ProfileError("grid and values differ in length")
        if abs(values[0]) > atol:
            raise ProfileError(f"profile must vanish at s = 0 (got {values[0]:.3g})")
        if not np.all(np.isfinite(values)):
            raise ProfileError("profile values are not finite")
        return cls(grid, np.diff(values) / np.diff(grid))

    @classmethod
    def zero(cls, s_max: float = 1.0) -> "Profile":
        return cls(np.array([0.0, s_max]), np.array([0.0]))

    # evaluation ---------------------------------------------------------
    @property
    def s_max(self) -> float:
        return float(self.knots[-1])

    @property
    def tail_value(self) -> float:
        return float(self.values[-1])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.knots, self.values, left=0.0, right=self.tail_value)
        return out if out.ndim else float(out)

    def derivative(self, s):
        """Right derivative; zero for ``s < 0`` and ``s >= s_max``."""
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.knots, s, side="right") - 1
        inside = (idx >= 0) & (idx < self.slopes.size)
        out = np.where(inside, self.slopes[np.clip(idx, 0, self.slopes.size - 1)], 0.0)
        return out if out.ndim else float(out)

    def energy(self) -> float:
        """``int psi'(s)^2 ds``."""
        return float(np.sum(self.slopes**2 * np.diff(self.knots)))

    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_zero(self) -> bool:
        return not np.any(self.slopes)

    def last_active(self) -> float:
        """Right end of the last cell with nonzero slope (0 for the zero profile)."""
        nz = np.flatnonzero(self.slopes)
        return float(self.knots[nz[-1] + 1]) if nz.size else 0.0

    def first_active(self) -> float:
        nz = np.flatnonzero(self.slopes)
        return float(self.knots[nz[0]]) if nz.size else self.s_max

    def major_knots(self, limit: int = 64) -> np.ndarray:
        """Knots where the slope jumps most, always including the support ends.

        All knots are returned when there are at most ``limit`` of them.
        """
        padded = np.concatenate([[0.0], self.slopes, [0.0]])
        jumps = np.abs(np.diff(padded))
        keep = np.flatnonzero(jumps > 0)
        if keep.size > limit:
            order = np.argsort(-jumps[keep], kind="stable")[:limit]
            ends = [np.searchsorted(self.knots, self.first_active()),
                    np.searchsorted(self.knots, self.last_active())]
            keep = np.union1d(keep[order], ends)
        return self.knots[keep]

    # serialisation ------------------------------------------------------
    def to_json(self) -> dict[str, Any]:
        return {"grid": self.knots.tolist(), "derivative": self.slopes.tolist(), "s_max": self.s_max}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Profile":
        grid = np.asarray(obj["grid"], dtype=float)
        if "s_max" in obj and not np.isclose(grid[-1], float(obj["s_max"])):
            raise ProfileError("s_max does not match the last grid point")
        return cls(grid, np.asarray(obj["derivative"], dtype=float))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Profile):
            return NotImplemented
        return np.array_equal(self.knots, other.knots) and np.array_equal(self.slopes, other.slopes)

    def __hash__(self) -> int:
        return hash((self.knots.tobytes(), self.slopes.tobytes()))


def as_point(p) -> tuple[float, float]:
    x, y = (float(v) for v in p)
    if not (np.isfinite(x) and np.isfinite(y)):
        raise ProfileError(f"point {p!r} is not finite")
    return (x, y)


@dataclass(frozen=True)
class Triplet:
    """Elementary concentration ``sqrt(alpha/2pi) * psi(-log|x - core| / alpha)``."""

    alpha: float
    core: tuple[float, float]
    profile: Profile

    def __post_init__(self) -> None:
        alpha = float(self.alpha)
        if not (np.isfinite(alpha) and alpha > 0):
            raise ProfileError(f"scale must be positive and finite, got {self.alpha!r}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "core", as_point(self.core))

    @property
    def amplitude(self) -> float:
        return float(np.sqrt(self.alpha / (2 * np.pi)))

    def energy(self) -> float:
        return self.profile.energy()
