"""Relative capacity: annulus formulas, radial and planar obstacle problems.

The planar solver works on a uniform Cartesian grid with the 5-point
Laplacian.  Nodes whose centers lie outside the domain are held at 0 (a
staircase Dirichlet boundary) and nodes inside the obstacle set are
constrained from below by the obstacle level.  Projected SOR sweeps run in
lexicographic order so results are reproducible bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numba
import numpy as np

from .errors import BadInput, DegenerateAnnulus, DegenerateMeasures, NoConvergence, OutOfAnnulus
from .field import BaseField, Disc, RadialField, evaluate
from .orlicz import dirichlet_energy, l2_norm
from .profile import as_point

logger = logging.getLogger(__name__)

__all__ = ["capacity_annulus", "capacitor_potential_annulus", "obstacle_min_energy_radial", "ObstacleSpec",
           "BallSet", "AnnulusSet", "MaskSet", "ObstacleSolution", "solve_obstacle", "obstacle_capacity_2d",
           "energy_lower_bound", "radial_witness", "witness_energy", "check_radial_estimate"]


def capacity_annulus(a: float, b: float) -> float:
    """Capacity of ``B(0, a)`` relative to ``B(0, b)``: ``2 pi / log(b/a)``."""
    if not (a > 0 and b > 0):
        raise BadInput("radii must be positive")
    if a >= b:
        raise DegenerateAnnulus(f"need a < b, got a={a}, b={b}")
    return 2.0 * math.pi / math.log(b / a)


def capacitor_potential_annulus(a: float, b: float, p) -> float:
    """Harmonic function on ``a <= |p| <= b`` equal to 1 on the inner and 0 on the outer circle."""
    if a >= b:
        raise DegenerateAnnulus(f"need a < b, got a={a}, b={b}")
    r = math.hypot(*as_point(p))
    tol = 1e-12 * b
    if r < a - tol or r > b + tol:
        raise OutOfAnnulus(f"|p| = {r} outside [{a}, {b}]")
    r = min(max(r, a), b)
    return -math.log(r / b) / math.log(b / a)


# ---------------------------------------------------------------------------
# radial obstacle problem

@numba.njit(cache=True)
def _psor_1d(v, lower, fixed, omega, tol, max_sweeps):
    n = v.size
    for sweep in range(max_sweeps):
        diff = 0.0
        for i in range(n):
            if fixed[i]:
                continue
            if i == n - 1:
                gs = v[i - 1]                # natural boundary at the far end
            else:
                gs = 0.5 * (v[i - 1] + v[i + 1])
            new = v[i] + omega * (gs - v[i])
            if new < lower[i]:
                new = lower[i]
            d = abs(new - v[i])
            if d > diff:
                diff = d
            v[i] = new
        if diff < tol:
            return sweep + 1
    return -1


def obstacle_min_energy_radial(alpha: float, grid: int = 4096, level: float = 1.0, tol: float = 1e-13,
                               max_sweeps: int = 2_000_000) -> float:
    """Least Dirichlet energy of a radial ``u`` vanishing on ``|x| >= 1`` with ``u >= level sqrt(alpha/2pi)``
    on ``B(0, e^{-alpha})``.

    In ``s = -log|x|`` the energy is ``2 pi int v'(s)^2 ds``.  The problem is
    solved on ``[0, 2 alpha]`` with ``v(0) = 0``, the obstacle on
    ``[alpha, 2 alpha]`` and a free right end, by projected SOR.
    """
    if not alpha > 0:
        raise BadInput("alpha must be positive")
    if grid < 8:
        raise BadInput("grid must be at least 8")
    s = np.linspace(0.0, 2.0 * alpha, grid + 1)
    h = s[1] - s[0]
    height = level * math.sqrt(alpha / (2.0 * math.pi))
    lower = np.where(s >= alpha - 1e-12 * alpha, height, -np.inf)
    fixed = np.zeros(s.size, dtype=np.bool_)
    fixed[0] = True
    v = np.where(s >= alpha, height, 0.0)
    v[0] = 0.0
    omega = 2.0 / (1.0 + math.sin(math.pi / (2 * grid)))
    sweeps = _psor_1d(v, lower, fixed, omega, tol * max(height, 1e-300), max_sweeps)
    if sweeps < 0:
        raise NoConvergence(f"radial obstacle solver did not converge in {max_sweeps} sweeps")
    logger.debug("radial obstacle: %d sweeps", sweeps)
    return float(2.0 * math.pi * np.sum(np.diff(v) ** 2) / h)


# ---------------------------------------------------------------------------
# planar obstacle problem

@dataclass(frozen=True)
class BallSet:
    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def contains(self, x, y):
        return np.hypot(x - self.center[0], y - self.center[1]) < self.radius

    def extent(self) -> float:
        return math.hypot(*self.center) + self.radius


@dataclass(frozen=True)
class AnnulusSet:
    r_in: float
    r_out: float
    center: tuple[float, float] = (0.0, 0.0)

    def contains(self, x, y):
        d = np.hypot(x - self.center[0], y - self.center[1])
        return (d >= self.r_in) & (d < self.r_out)

    def extent(self) -> float:
        return math.hypot(*self.center) + self.r_out


@dataclass(frozen=True, eq=False)
class MaskSet:
    """Rasterized obstacle on the solver grid (``True`` = obstacle)."""

    mask: np.ndarray

    def contains(self, x, y):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != np.shape(x):
            raise BadInput(f"mask shape {m.shape} does not match the grid {np.shape(x)}")
        return m

    def extent(self) -> float:
        return 0.0


@dataclass(frozen=True)
class ObstacleSpec:
    """Relative-capacity problem: ``domain`` is ``("ball", b)`` or ``("box", half_width)``."""

    obstacle_set: BallSet | AnnulusSet | MaskSet
    domain: tuple[str, float] = ("ball", 1.0)
    obstacle_level: float = 1.0
    grid_resolution: int = 512
    solver_tol: float = 1e-8
    max_sweeps: int = 200_000
    omega: float | None = None

    def __post_init__(self):
        kind, size = self.domain
        if kind not in ("ball", "box") or not size > 0:
            raise BadInput(f"bad domain {self.domain!r}")
        if self.grid_resolution < 8 or self.solver_tol <= 0 or self.max_sweeps < 1:
            raise BadInput("grid_resolution >= 8, solver_tol > 0 and max_sweeps >= 1 required")
        if not self.obstacle_level > 0:
            raise BadInput("obstacle_level must be positive")
        ext = self.obstacle_set.extent()
        if not isinstance(self.obstacle_set, MaskSet) and ext >= size * (1.0 if kind == "ball" else 1.0):
            raise BadInput("obstacle must lie strictly inside the domain")

    def grid(self):
        """Node coordinates, node spacing and the domain mask."""
        kind, size = self.domain
        n = self.grid_resolution
        h = 2.0 * size / n
        x = -size + h * (np.arange(n) + 0.5)
        X, Y = np.meshgrid(x, x, indexing="ij")
        inside = np.hypot(X, Y) < size if kind == "ball" else np.ones(X.shape, dtype=bool)
        # the outermost ring of a box is the Dirichlet boundary
        if kind == "box":
            inside[0, :] = inside[-1, :] = inside[:, 0] = inside[:, -1] = False
        return X, Y, h, inside

    def to_json(self) -> dict:
        obs = self.obstacle_set
        d = asdict(self) if not isinstance(obs, MaskSet) else {**{k: v for k, v in asdict(self).items()
                                                                   if k != "obstacle_set"},
                                                                "obstacle_set": {"mask": obs.mask.tolist()}}
        d["obstacle_kind"] = type(obs).__name__
        return d


@numba.njit(cache=True)
def _psor_2d(u, free, lower, omega, tol, max_sweeps):
    n, m = u.shape
    for sweep in range(max_sweeps):
        diff = 0.0
        for i in range(1, n - 1):
            for j in range(1, m - 1):
                if not free[i, j]:
                    continue
                gs = 0.25 * (u[i - 1, j] + u[i + 1, j] + u[i, j - 1] + u[i, j + 1])
                new = u[i, j] + omega * (gs - u[i, j])
                if new < lower[i, j]:
                    new = lower[i, j]
                d = abs(new - u[i, j])
                if d > diff:
                    diff = d
                u[i, j] = new
        if diff < tol:
            return sweep + 1
    return -1


@dataclass
class ObstacleSolution:
    energy: float
    u: np.ndarray = field(repr=False)
    contact: np.ndarray = field(repr=False)
    inside: np.ndarray = field(repr=False)
    sweeps: int = 0

    def laplacian_residual(self) -> float:
        """Max of the 5-point Laplacian (unscaled) over free nodes off the contact set."""
        u = self.u
        lap = np.zeros_like(u)
        lap[1:-1, 1:-1] = 4 * u[1:-1, 1:-1] - u[:-2, 1:-1] - u[2:, 1:-1] - u[1:-1, :-2] - u[1:-1, 2:]
        free = self.inside & ~self.contact
        return float(np.max(np.abs(lap[free]))) if np.any(free) else 0.0


def solve_obstacle(spec: ObstacleSpec) -> ObstacleSolution:
    """Projected SOR solve; the energy is the sum of squared differences over grid edges."""
    X, Y, h, inside = spec.grid()
    obstacle = spec.obstacle_set.contains(X, Y) & inside
    # pad by one ring of boundary nodes so the stencil never leaves the array
    pad = lambda a, v: np.pad(a, 1, constant_values=v)
    inside_p = pad(inside, False)
    obst_p = pad(obstacle, False)
    u = np.where(obst_p, spec.obstacle_level, 0.0)
    if not np.any(obst_p):
        return ObstacleSolution(0.0, u[1:-1, 1:-1], obstacle, inside, 0)
    lower = np.where(obst_p, spec.obstacle_level, 0.0)
    free = inside_p & ~obst_p
    n = spec.grid_resolution
    omega = spec.omega or 2.0 / (1.0 + math.sin(math.pi / n))
    # the obstacle is active everywhere on its set, so those nodes are fixed
    sweeps = _psor_2d(u, free, lower, omega, spec.solver_tol * spec.obstacle_level, spec.max_sweeps)
    if sweeps < 0:
        raise NoConvergence(f"obstacle solver did not converge in {spec.max_sweeps} sweeps")
    energy = float(np.sum(np.diff(u, axis=0) ** 2) + np.sum(np.diff(u, axis=1) ** 2))
    logger.debug("planar obstacle: %d sweeps, energy %.9g", sweeps, energy)
    return ObstacleSolution(energy, u[1:-1, 1:-1], obstacle, inside, sweeps)


def obstacle_capacity_2d(spec: ObstacleSpec) -> float:
    """Discrete Dirichlet energy of the converged capacitary potential."""
    return solve_obstacle(spec).energy


# ---------------------------------------------------------------------------
# energy lower bound between two level sets

def energy_lower_bound(ball_measure: float, e1_measure: float, a1: float, a2: float) -> float:
    """``4 pi (a1 - a2)^2 / log(|B| / |E1|)``."""
    if not (0 < e1_measure < ball_measure):
        raise DegenerateMeasures(f"need 0 < |E1| < |B|, got {e1_measure}, {ball_measure}")
    if a2 > a1:
        raise BadInput("need a2 <= a1")
    return 4.0 * math.pi * (a1 - a2) ** 2 / math.log(ball_measure / e1_measure)


def radial_witness(ball_measure: float, e1_measure: float, a1: float, a2: float, knots: int = 65) -> RadialField:
    """Radial field equal to ``a1`` on ``E1 = B(r1)`` and ``a2`` on ``|x| = R``, with ``pi R^2 = |B|``.

    In between it is ``a2 + (a1 - a2)`` times the annulus capacitor potential;
    outside ``B`` it decays linearly in ``-log r`` to 0 at ``e R``.
    """
    if not (0 < e1_measure < ball_measure):
        raise DegenerateMeasures(f"need 0 < |E1| < |B|, got {e1_measure}, {ball_measure}")
    R = math.sqrt(ball_measure / math.pi)
    r1 = math.sqrt(e1_measure / math.pi)
    radii = np.geomspace(R, r1, knots)
    vals = [a2 + (a1 - a2) * capacitor_potential_annulus(r1, R, (r, 0.0)) for r in radii]
    s = np.concatenate([[-math.log(R) - 1.0], -np.log(radii)])
    return RadialField(s, np.concatenate([[0.0], vals]))


def witness_energy(ball_measure: float, e1_measure: float, a1: float, a2: float) -> float:
    """Measured Dirichlet energy of :func:`radial_witness` inside ``B``."""
    w = radial_witness(ball_measure, e1_measure, a1, a2)
    return dirichlet_energy(w, region=Disc((0.0, 0.0), math.sqrt(ball_measure / math.pi)))


# ---------------------------------------------------------------------------
# pointwise decay of radial functions

def check_radial_estimate(field_radial: BaseField, radii: Sequence[float]) -> float:
    """``max_r |u(r)| sqrt(r) / (||u||_2 ||grad u||_2)^(1/2)``; compare with ``1/sqrt(pi)``."""
    if field_radial.is_zero():
        return 0.0
    l2 = l2_norm(field_radial)
    en = math.sqrt(dirichlet_energy(field_radial))
    denom = math.sqrt(l2 * en)
    if denom == 0:
        return 0.0
    c = field_radial.centers()[0] if field_radial.centers() else (0.0, 0.0)
    vals = [abs(evaluate(field_radial, (c[0] + r, c[1]))) * math.sqrt(r) for r in radii]
    return max(vals) / denom
