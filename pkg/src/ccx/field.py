"""Field representations on the plane.

Fields are evaluated on :class:`Nodes`, which store points relative to a rule
center as ``center + exp(-t) * (cos, sin)``.  Radii are carried by their
logarithm ``t`` and never subtracted in Cartesian form, so concentrations at
radius ``e^{-200}`` stay inside double range.  Gradients are returned scaled by
``exp(glog)`` (``glog = -t`` on quadrature nodes, i.e. ``r * grad u``), which
keeps them O(1) at every scale.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .errors import AtCore, BadInput, TransformNotInvertibleAt
from .profile import Triplet, as_point

__all__ = [
    "QuadratureSpec", "Nodes", "Kink", "ArgumentMap", "LinearMap", "RadialPower",
    "GridBackground", "DiscIndicator", "SquareIndicator", "GaussianBump",
    "Disc", "Annulus", "Exterior", "HalfPlane",
    "BaseField", "Field", "SumField", "MappedField", "RadialField",
    "evaluate", "gradient", "field_sum", "scaled",
]

SQRT_2PI = math.sqrt(2 * math.pi)


# ---------------------------------------------------------------------------
# quadrature specification

@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and truncation parameters of the multi-scale quadrature.

    ``y_nodes`` Gauss-Legendre nodes per log-radial panel, ``theta_nodes``
    uniform angles for rules with angular structure, ``y_max`` caps the
    normalized log-radial depth of a profile, ``far_field_nodes`` Gauss nodes
    per panel between cluster bumps, ``weight_floor`` the log gap below the
    running maximum at which contributions are dropped.
    """

    y_nodes: int = 16
    theta_nodes: int = 64
    y_max: float = 5.0
    far_field_nodes: int = 24
    weight_floor: float = 60.0
    gap_theta_factor: int = 4
    max_gap_theta: int = 1024
    panel_width: float = 1.0
    tail: float = 40.0

    def __post_init__(self) -> None:
        if self.y_nodes < 16 or self.theta_nodes < 32 or self.y_max < 3:
            raise BadInput("QuadratureSpec requires y_nodes >= 16, theta_nodes >= 32, y_max >= 3")
        if self.far_field_nodes < 1 or self.weight_floor <= 0 or self.panel_width <= 0:
            raise BadInput("far_field_nodes, weight_floor and panel_width must be positive")

    @classmethod
    def preset(cls, name: str) -> "QuadratureSpec":
        if name == "fast":
            return cls(y_nodes=16, theta_nodes=32, far_field_nodes=16, gap_theta_factor=4)
        if name == "accurate":
            return cls(y_nodes=24, theta_nodes=128, far_field_nodes=32, gap_theta_factor=8,
                       max_gap_theta=2048, panel_width=0.5)
        if name == "default":
            return cls()
        raise BadInput(f"unknown quadrature preset {name!r}")

    @classmethod
    def from_env(cls) -> "QuadratureSpec":
        return cls.preset(os.environ.get("CCX_QUAD_PROFILE", "default"))

    def to_json(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# ---------------------------------------------------------------------------
# nodes and kinks

@dataclass(frozen=True)
class Nodes:
    """Points ``center + exp(-t) (cos, sin)`` with gradient scale ``exp(glog)``."""

    center: tuple[float, float]
    t: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    glog: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.glog is None:
            object.__setattr__(self, "glog", -np.asarray(self.t, dtype=float))

    @property
    def size(self) -> int:
        return int(np.size(self.t))

    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        r = np.exp(-self.t)
        return self.center[0] + r * self.cos, self.center[1] + r * self.sin

    def subset(self, mask) -> "Nodes":
        return Nodes(self.center, self.t[mask], self.cos[mask], self.sin[mask], self.glog[mask])

    @classmethod
    def point(cls, p) -> "Nodes":
        x, y = as_point(p)
        return cls((x, y), np.array([np.inf]), np.array([1.0]), np.array([0.0]), np.array([0.0]))


@dataclass(frozen=True)
class Kink:
    """A curve across which an integrand is not smooth.

    ``fn(nodes)`` is a level function and the curve is ``fn = level`` for each
    entry of ``levels``.  ``transition`` marks smooth window transitions that
    need extra subdivision rather than a kink.  ``circle = (q, radii)`` marks a
    jump along circles about ``q``; rays tangent to them are singular angles
    of the angular integral.
    """

    fn: Callable[[Nodes], np.ndarray]
    levels: np.ndarray
    transition: bool = False
    circle: tuple | None = None
    segments: tuple = ()

    def singular_angles(self, c, circles=()) -> list[float]:
        """Ray angles from ``c`` where the angular integrand loses smoothness.

        These are the tangent rays to the jump circles, the rays through jump
        segment endpoints, and the rays through intersections of either with
        the given ``(center, radius)`` circles.
        """
        out = []
        for a, b in self.segments:
            pts = [a, b] + [p for q2, R2 in circles for p in _segment_circle(a, b, q2, R2)]
            out.extend(math.atan2(y - c[1], x - c[0]) for x, y in pts if math.hypot(x - c[0], y - c[1]) > 0)
        if self.circle is None:
            return out
        q, radii = self.circle
        dx, dy = q[0] - c[0], q[1] - c[1]
        d = math.hypot(dx, dy)
        phi = math.atan2(dy, dx)
        out += [phi + sgn * math.asin(min(1.0, R / d)) for R in radii
                if d >= R * (1 - 1e-12) and d > 0 for sgn in (-1.0, 1.0)]
        for R in radii:
            for q2, R2 in circles:
                for x, y in _circle_intersections(q, R, q2, R2):
                    if math.hypot(x - c[0], y - c[1]) > 0:
                        out.append(math.atan2(y - c[1], x - c[0]))
        return out


def _segment_circle(a, b, q, R):
    ex, ey = b[0] - a[0], b[1] - a[1]
    fx, fy = a[0] - q[0], a[1] - q[1]
    A = ex * ex + ey * ey
    B = 2 * (fx * ex + fy * ey)
    C = fx * fx + fy * fy - R * R
    disc = B * B - 4 * A * C
    if A == 0 or disc < 0:
        return []
    roots = ((-B - math.sqrt(disc)) / (2 * A), (-B + math.sqrt(disc)) / (2 * A))
    return [(a[0] + u * ex, a[1] + u * ey) for u in roots if 0 <= u <= 1]


def _circle_intersections(q1, r1, q2, r2):
    dx, dy = q2[0] - q1[0], q2[1] - q1[1]
    d = math.hypot(dx, dy)
    if d == 0 or d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h = math.sqrt(max(r1 * r1 - a * a, 0.0))
    mx, my = q1[0] + a * dx / d, q1[1] + a * dy / d
    return [(mx - h * dy / d, my + h * dx / d), (mx + h * dy / d, my - h * dx / d)]


def _scaled_offset(logD, dx, dy, log_rv, vx, vy):
    """log|w|, unit(w) for w = D + rv given |D| = e^logD (unit dx,dy), |rv| = e^log_rv (unit vx,vy)."""
    logm = np.maximum(logD, log_rv)
    logm = np.where(np.isfinite(logm), logm, 0.0)
    a = np.exp(logD - logm)
    b = np.exp(log_rv - logm)
    wx = a * dx + b * vx
    wy = a * dy + b * vy
    n = np.hypot(wx, wy)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = logm + np.log(n)
        ux = np.where(n > 0, wx / n, 0.0)
        uy = np.where(n > 0, wy / n, 0.0)
    return logw, ux, uy


# ---------------------------------------------------------------------------
# argument maps

class ArgumentMap:
    """Invertible plane map ``P``; a transformed field is ``u(p) = v(P(p))``."""

    kind = "abstract"

    def apply(self, x, y):
        raise NotImplementedError

    def jacobian(self, x, y):
        """Return (J00, J01, J10, J11) of ``DP`` at (x, y)."""
        raise NotImplementedError

    def inverse(self, q) -> tuple[float, float]:
        raise NotImplementedError

    def jacobian_bounds(self) -> tuple[float, float]:
        """Bounds on ``|det DP|`` over the plane (both positive and finite)."""
        raise NotImplementedError

    def radial_about(self, c) -> bool:
        return False

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError

    # offset of P(p) from a target, stably in log form
    def offset(self, nodes: Nodes, target):
        """Return ``log|P(p) - target|``, its unit direction and ``glog - log|P(p)-target|``."""
        raise NotImplementedError

    def pullback(self, nodes: Nodes, gx, gy):
        """Apply ``DP(p)^T`` to vectors given at the image points."""
        j00, j01, j10, j11 = self.jacobian(*self._points(nodes))
        return j00 * gx + j10 * gy, j01 * gx + j11 * gy

    def image(self, nodes: Nodes):
        return self.apply(*self._points(nodes))

    def _points(self, nodes: Nodes):
        return nodes.cartesian()


class LinearMap(ArgumentMap):
    """``P(p) = A p`` for an invertible 2x2 matrix ``A``."""

    kind = "linear"

    def __init__(self, matrix):
        A = np.asarray(matrix, dtype=float).reshape(2, 2)
        det = float(np.linalg.det(A))
        if not np.all(np.isfinite(A)) or det == 0.0:
            raise BadInput("linear argument map must be finite and invertible")
        self.A = A
        self.A.setflags(write=False)
        self.det = det

    def apply(self, x, y):
        A = self.A
        return A[0, 0] * x + A[0, 1] * y, A[1, 0] * x + A[1, 1] * y

    def jacobian(self, x, y):
        shape = np.shape(x)
        A = self.A
        return tuple(np.full(shape, v) for v in (A[0, 0], A[0, 1], A[1, 0], A[1, 1]))

    def inverse(self, q):
        return tuple(float(v) for v in np.linalg.solve(self.A, np.asarray(q, dtype=float)))

    def jacobian_bounds(self):
        return (abs(self.det), abs(self.det))

    def radial_about(self, c) -> bool:
        A = self.A
        return A[0, 1] == 0 and A[1, 0] == 0 and A[0, 0] == A[1, 1]

    def log_stretch(self, cos, sin):
        vx = self.A[0, 0] * cos + self.A[0, 1] * sin
        vy = self.A[1, 0] * cos + self.A[1, 1] * sin
        return 0.5 * np.log(vx * vx + vy * vy)

    def offset(self, nodes, target):
        A = self.A
        cx, cy = nodes.center
        Dx = A[0, 0] * cx + A[0, 1] * cy - target[0]
        Dy = A[1, 0] * cx + A[1, 1] * cy - target[1]
        vx = A[0, 0] * nodes.cos + A[0, 1] * nodes.sin
        vy = A[1, 0] * nodes.cos + A[1, 1] * nodes.sin
        nv = np.hypot(vx, vy)
        nD = math.hypot(Dx, Dy)
        logD = math.log(nD) if nD > 0 else -np.inf
        dx, dy = (Dx / nD, Dy / nD) if nD > 0 else (0.0, 0.0)
        logw, ux, uy = _scaled_offset(logD, dx, dy, -nodes.t + np.log(nv), vx / nv, vy / nv)
        return logw, ux, uy, nodes.glog - logw

    def pullback(self, nodes, gx, gy):
        A = self.A
        return A[0, 0] * gx + A[1, 0] * gy, A[0, 1] * gx + A[1, 1] * gy

    def to_json(self):
        return {"kind": "linear", "params": {"matrix": self.A.ravel().tolist()}}


class IdentityMap(LinearMap):
    kind = "identity"

    def __init__(self):
        super().__init__(np.eye(2))

    def radial_about(self, c) -> bool:
        return True

    def offset(self, nodes, target):
        cx, cy = nodes.center
        Dx, Dy = cx - target[0], cy - target[1]
        nD = math.hypot(Dx, Dy)
        logD = math.log(nD) if nD > 0 else -np.inf
        dx, dy = (Dx / nD, Dy / nD) if nD > 0 else (0.0, 0.0)
        logw, ux, uy = _scaled_offset(logD, dx, dy, -nodes.t, nodes.cos, nodes.sin)
        return logw, ux, uy, nodes.glog - logw

    def pullback(self, nodes, gx, gy):
        return gx, gy

    def to_json(self):
        return None


IDENTITY = IdentityMap()


def shear(k: float) -> LinearMap:
    """Linear shear ``(x1 + k x2, x2)``."""
    m = LinearMap([[1.0, float(k)], [0.0, 1.0]])
    m.kind = "shear"
    m.shear_k = float(k)
    return m


class RadialPower(ArgumentMap):
    """``P(x) = x (1 + |x|^2)^((q-1)/2)``: identity-like near 0, ``|x|^q`` at infinity."""

    kind = "radial_power"
    _SMALL = 1e-8

    def __init__(self, q: float):
        q = float(q)
        if not (np.isfinite(q) and q > 0):
            raise BadInput("radial power map needs q > 0")
        self.q = q

    def _g(self, rho2):
        return (1.0 + rho2) ** ((self.q - 1.0) / 2.0)

    def apply(self, x, y):
        g = self._g(x * x + y * y)
        return x * g, y * g

    def jacobian(self, x, y):
        rho2 = x * x + y * y
        g = self._g(rho2)
        dg = (self.q - 1.0) / 2.0 * (1.0 + rho2) ** ((self.q - 3.0) / 2.0)
        return g + 2 * dg * x * x, 2 * dg * x * y, 2 * dg * x * y, g + 2 * dg * y * y

    def inverse(self, q):
        qx, qy = as_point(q)
        target = math.hypot(qx, qy)
        if target == 0.0:
            return (0.0, 0.0)
        s = target if self.q >= 1 else target  # monotone map of the radius
        for _ in range(200):
            f = s * (1 + s * s) ** ((self.q - 1) / 2) - target
            df = (1 + s * s) ** ((self.q - 3) / 2) * (1 + self.q * s * s)
            step = f / df
            s_new = s - step
            if s_new <= 0:
                s_new = s / 2
            if abs(s_new - s) <= 1e-15 * max(1.0, s):
                s = s_new
                break
            s = s_new
        else:
            raise TransformNotInvertibleAt(q)
        return (qx * s / target, qy * s / target)

    def jacobian_bounds(self):
        # det DP = g^2 (g + 2 rho^2 g') / g ... bounded on a ball; report on the unit ball
        r = np.linspace(0, 2, 2001)
        j = self.jacobian(r, np.zeros_like(r))
        det = j[0] * j[3] - j[1] * j[2]
        return (float(det.min()), float(det.max()))

    def radial_about(self, c) -> bool:
        return c[0] == 0.0 and c[1] == 0.0

    def offset(self, nodes, target):
        cx, cy = nodes.center
        Pcx, Pcy = self.apply(cx, cy)
        Dx, Dy = Pcx - target[0], Pcy - target[1]
        nD = math.hypot(Dx, Dy)
        logD = math.log(nD) if nD > 0 else -np.inf
        dx, dy = (Dx / nD, Dy / nD) if nD > 0 else (0.0, 0.0)
        j00, j01, j10, j11 = self.jacobian(cx, cy)
        vx = j00 * nodes.cos + j01 * nodes.sin
        vy = j10 * nodes.cos + j11 * nodes.sin
        nv = np.hypot(vx, vy)
        logw, ux, uy = _scaled_offset(logD, dx, dy, -nodes.t + np.log(nv), vx / nv, vy / nv)
        small = nodes.t > -math.log(self._SMALL * (1.0 + math.hypot(cx, cy)))
        if not np.all(small):
            big = ~small
            x, y = nodes.subset(big).cartesian()
            wx, wy = self.apply(x, y)
            wx, wy = wx - target[0], wy - target[1]
            n = np.hypot(wx, wy)
            with np.errstate(divide="ignore", invalid="ignore"):
                logw[big] = np.log(n)
                ux[big] = np.where(n > 0, wx / n, 0.0)
                uy[big] = np.where(n > 0, wy / n, 0.0)
        return logw, ux, uy, nodes.glog - logw

    def _points(self, nodes):
        x, y = nodes.cartesian()
        return x, y

    def to_json(self):
        return {"kind": "radial_power", "params": {"q": self.q}}


def map_from_json(obj) -> ArgumentMap:
    if obj is None:
        return IDENTITY
    kind = obj.get("kind")
    params = obj.get("params", {})
    if kind == "linear":
        return LinearMap(np.asarray(params["matrix"], dtype=float).reshape(2, 2))
    if kind == "shear":
        return shear(params["k"])
    if kind == "radial_power":
        return RadialPower(params["q"])
    raise BadInput(f"unknown transform kind {kind!r}")


# ---------------------------------------------------------------------------
# backgrounds (smooth or simple indicator parts of a field)

class Background:
    kind = "abstract"

    def value(self, x, y):
        raise NotImplementedError

    def grad(self, x, y):
        raise NotImplementedError

    def kinks(self, transform: ArgumentMap) -> list[Kink]:
        return []

    def radial_about(self, c) -> bool:
        return False

    def extent(self) -> float:
        """Radius outside which the background vanishes (inf if it does not)."""
        return math.inf


class GridBackground(Background):
    """Samples on a uniform grid over ``[-R, R]^2`` with bilinear interpolation (zero outside)."""

    kind = "grid"

    def __init__(self, grid, extent: float):
        g = np.asarray(grid, dtype=float)
        if g.ndim != 2 or g.shape[0] < 2 or g.shape[1] < 2 or not np.all(np.isfinite(g)):
            raise BadInput("background grid must be a finite 2-D array")
        self.grid = g
        self.R = float(extent)
        self.h = (2 * self.R / (g.shape[0] - 1), 2 * self.R / (g.shape[1] - 1))

    def _locate(self, x, y):
        fx = (np.asarray(x) + self.R) / self.h[0]
        fy = (np.asarray(y) + self.R) / self.h[1]
        inside = (fx >= 0) & (fx <= self.grid.shape[0] - 1) & (fy >= 0) & (fy <= self.grid.shape[1] - 1)
        i = np.clip(np.floor(fx).astype(int), 0, self.grid.shape[0] - 2)
        j = np.clip(np.floor(fy).astype(int), 0, self.grid.shape[1] - 2)
        return inside, i, j, fx - i, fy - j

    def value(self, x, y):
        inside, i, j, a, b = self._locate(x, y)
        g = self.grid
        v = (g[i, j] * (1 - a) * (1 - b) + g[i + 1, j] * a * (1 - b)
             + g[i, j + 1] * (1 - a) * b + g[i + 1, j + 1] * a * b)
        return np.where(inside, v, 0.0)

    def grad(self, x, y):
        inside, i, j, a, b = self._locate(x, y)
        g = self.grid
        gx = ((g[i + 1, j] - g[i, j]) * (1 - b) + (g[i + 1, j + 1] - g[i, j + 1]) * b) / self.h[0]
        gy = ((g[i, j + 1] - g[i, j]) * (1 - a) + (g[i + 1, j + 1] - g[i + 1, j]) * a) / self.h[1]
        return np.where(inside, gx, 0.0), np.where(inside, gy, 0.0)

    def extent(self):
        return self.R * math.sqrt(2)

    def to_json(self):
        return {"kind": "grid", "grid": self.grid.tolist(), "extent": self.R}


class DiscIndicator(Background):
    kind = "disc"

    def __init__(self, radius: float, value: float = 1.0, center=(0.0, 0.0)):
        self.R = float(radius)
        self.c = as_point(center)
        self.val = float(value)
        if self.R <= 0:
            raise BadInput("disc radius must be positive")

    def value(self, x, y):
        return np.where(np.hypot(x - self.c[0], y - self.c[1]) < self.R, self.val, 0.0)

    def grad(self, x, y):
        z = np.zeros(np.shape(x))
        return z, z

    def kinks(self, transform):
        c = self.c

        def fn(nodes, c=c):
            return transform.offset(nodes, c)[0]

        circle = (c, [self.R]) if isinstance(transform, IdentityMap) else None
        return [Kink(fn, np.array([math.log(self.R)]), circle=circle)]

    def radial_about(self, c) -> bool:
        return tuple(c) == self.c

    def extent(self):
        return math.hypot(*self.c) + self.R

    def to_json(self):
        return {"kind": "disc", "radius": self.R, "value": self.val, "center": list(self.c)}


class SquareIndicator(Background):
    kind = "square"

    def __init__(self, side: float, value: float = 1.0, center=(0.0, 0.0)):
        self.L = float(side)
        self.c = as_point(center)
        self.val = float(value)
        if self.L <= 0:
            raise BadInput("square side must be positive")

    def _cheb(self, x, y):
        return np.maximum(np.abs(x - self.c[0]), np.abs(y - self.c[1]))

    def value(self, x, y):
        return np.where(self._cheb(x, y) < self.L / 2, self.val, 0.0)

    def grad(self, x, y):
        z = np.zeros(np.shape(x))
        return z, z

    def kinks(self, transform):
        def fn(nodes):
            return self._cheb(*transform.image(nodes))

        segs = ()
        if isinstance(transform, IdentityMap):
            h = self.L / 2
            cx, cy = self.c
            corners = [(cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)]
            segs = tuple((corners[i], corners[(i + 1) % 4]) for i in range(4))
        return [Kink(fn, np.array([self.L / 2]), segments=segs)]

    def extent(self):
        return math.hypot(*self.c) + self.L / math.sqrt(2)

    def to_json(self):
        return {"kind": "square", "side": self.L, "value": self.val, "center": list(self.c)}


class GaussianBump(Background):
    """``amplitude * exp(-|x - c|^2 / width^2)``."""

    kind = "gaussian"

    def __init__(self, amplitude: float, width: float, center=(0.0, 0.0)):
        self.a = float(amplitude)
        self.w = float(width)
        self.c = as_point(center)
        if self.w <= 0:
            raise BadInput("gaussian width must be positive")

    def value(self, x, y):
        return self.a * np.exp(-((x - self.c[0]) ** 2 + (y - self.c[1]) ** 2) / self.w**2)

    def grad(self, x, y):
        v = self.value(x, y)
        return -2 * (x - self.c[0]) / self.w**2 * v, -2 * (y - self.c[1]) / self.w**2 * v

    def radial_about(self, c) -> bool:
        return tuple(c) == self.c

    def to_json(self):
        return {"kind": "gaussian", "amplitude": self.a, "width": self.w, "center": list(self.c)}


def background_from_json(obj) -> Background | None:
    if obj is None:
        return None
    kind = obj.get("kind", "grid")
    if kind == "grid":
        return GridBackground(obj["grid"], obj["extent"])
    if kind == "disc":
        return DiscIndicator(obj["radius"], obj.get("value", 1.0), obj.get("center", (0, 0)))
    if kind == "square":
        return SquareIndicator(obj["side"], obj.get("value", 1.0), obj.get("center", (0, 0)))
    if kind == "gaussian":
        return GaussianBump(obj["amplitude"], obj["width"], obj.get("center", (0, 0)))
    raise BadInput(f"unknown background kind {kind!r}")


# ---------------------------------------------------------------------------
# integration regions

class Region:
    def mask(self, nodes: Nodes) -> np.ndarray:
        raise NotImplementedError

    def kinks(self) -> list[Kink]:
        return []

    def radial_about(self, c) -> bool:
        return False


def _logdist(nodes, c):
    return IDENTITY.offset(nodes, c)[0]


@dataclass(frozen=True)
class Disc(Region):
    center: tuple[float, float]
    radius: float

    def mask(self, nodes):
        return _logdist(nodes, self.center) < math.log(self.radius)

    def kinks(self):
        return [Kink(lambda n: _logdist(n, self.center), np.array([math.log(self.radius)]),
                     circle=(self.center, [self.radius]))]

    def radial_about(self, c):
        return tuple(c) == tuple(self.center)


@dataclass(frozen=True)
class Annulus(Region):
    center: tuple[float, float]
    r_in: float
    r_out: float

    def mask(self, nodes):
        d = _logdist(nodes, self.center)
        return (d > math.log(self.r_in)) & (d < math.log(self.r_out))

    def kinks(self):
        return [Kink(lambda n: _logdist(n, self.center), np.log([self.r_in, self.r_out]),
                     circle=(self.center, [self.r_in, self.r_out]))]

    def radial_about(self, c):
        return tuple(c) == tuple(self.center)


@dataclass(frozen=True)
class Exterior(Region):
    """Points with ``|x - center| > radius``."""

    center: tuple[float, float]
    radius: float

    def mask(self, nodes):
        return _logdist(nodes, self.center) > math.log(self.radius)

    def kinks(self):
        return [Kink(lambda n: _logdist(n, self.center), np.array([math.log(self.radius)]),
                     circle=(self.center, [self.radius]))]

    def radial_about(self, c):
        return tuple(c) == tuple(self.center)


@dataclass(frozen=True)
class HalfPlane(Region):
    """Points with ``normal . x > offset``."""

    normal: tuple[float, float]
    offset: float

    def _lin(self, nodes):
        x, y = nodes.cartesian()
        return self.normal[0] * x + self.normal[1] * y - self.offset

    def mask(self, nodes):
        return self._lin(nodes) > 0

    def kinks(self):
        return [Kink(self._lin, np.array([0.0]))]


def region_from_json(obj) -> Region | None:
    if obj is None:
        return None
    kind = obj["kind"]
    if kind == "disc":
        return Disc(as_point(obj["center"]), float(obj["radius"]))
    if kind == "annulus":
        return Annulus(as_point(obj["center"]), float(obj["r_in"]), float(obj["r_out"]))
    if kind == "exterior":
        return Exterior(as_point(obj["center"]), float(obj["radius"]))
    if kind == "half_plane":
        return HalfPlane(as_point(obj["normal"]), float(obj["offset"]))
    raise BadInput(f"unknown region kind {kind!r}")


# ---------------------------------------------------------------------------
# fields

class BaseField:
    """Interface used by the quadrature engine."""

    support_radius: float

    def centers(self) -> list[tuple[float, float]]:
        """Points around which the field has log-radial structure."""
        return []

    def eval(self, nodes: Nodes, grad: bool = False):
        """Return ``u`` or ``(u, gx, gy)`` with gradients scaled by ``exp(nodes.glog)``."""
        raise NotImplementedError

    def radial_about(self, c) -> bool:
        return False

    def radial_breaks(self, c, exact: bool) -> np.ndarray:
        """Angle-independent breakpoints (in t) of the structure centered at ``c``."""
        return np.empty(0)

    def ray_breaks(self, c, cos, sin) -> list[np.ndarray]:
        """Angle-dependent breakpoints at ``c`` as ``(n_rays, k)`` arrays."""
        return []

    def kinks(self, c) -> list[Kink]:
        """Kink curves not covered by the exact breakpoints at ``c``."""
        return []

    def depth(self, c) -> float:
        """Deepest t at which the field still has structure around ``c``."""
        return -math.inf

    def is_zero(self) -> bool:
        return False

    def __add__(self, other):
        return field_sum([self, other])

    def __sub__(self, other):
        return field_sum([self, other], [1.0, -1.0])

    def __mul__(self, c):
        return scaled(self, c)

    __rmul__ = __mul__

    def __neg__(self):
        return scaled(self, -1.0)


def _same(a, b) -> bool:
    return a[0] == b[0] and a[1] == b[1]


class Field(BaseField):
    """Sum of elementary concentrations plus an optional background, composed with an argument map."""

    def __init__(self, concentrations: Sequence[Triplet] = (), background: Background | None = None,
                 transform: ArgumentMap | None = None, support_radius: float | None = None,
                 major_knot_limit: int = 64):
        self.concentrations = tuple(concentrations)
        self.background = background
        self.transform = transform if transform is not None else IDENTITY
        self.major_knot_limit = major_knot_limit
        for tr in self.concentrations:
            if not isinstance(tr, Triplet):
                raise BadInput("concentrations must be Triplet instances")
        self._pre = [self.transform.inverse(tr.core) for tr in self.concentrations]
        if support_radius is None:
            support_radius = self._default_support()
        support_radius = float(support_radius)
        if not (support_radius > 0 and np.isfinite(support_radius)):
            raise BadInput("support_radius must be positive and finite")
        self.support_radius = support_radius
        lo, hi = self.transform.jacobian_bounds()
        if not (lo > 0 and np.isfinite(hi)):
            raise BadInput("argument map Jacobian bounds must be positive and finite")

    def _default_support(self) -> float:
        radius = 0.0
        for tr, pre in zip(self.concentrations, self._pre):
            if tr.profile.is_zero():
                continue
            # concentrations vanish where |P(p) - x| >= 1; pull the unit circle back
            if isinstance(self.transform, LinearMap):
                reach = 1.0 / float(np.linalg.svd(self.transform.A, compute_uv=False)[-1])
            elif isinstance(self.transform, RadialPower):
                reach = self.transform.inverse((math.hypot(*tr.core) + 1.0, 0.0))[0] + math.hypot(*pre)
            else:
                reach = 1.0
            radius = max(radius, math.hypot(*pre) + reach)
        if self.background is not None:
            ext = self.background.extent()
            if not np.isfinite(ext):
                raise BadInput("support_radius is required for backgrounds of unbounded extent")
            if not isinstance(self.transform, IdentityMap):
                ext = ext * 4.0
            radius = max(radius, ext)
        return radius if radius > 0 else 1.0

    # structure ----------------------------------------------------------
    def centers(self):
        out: list[tuple[float, float]] = []
        for tr, pre in zip(self.concentrations, self._pre):
            if not tr.profile.is_zero() and not any(_same(pre, q) for q in out):
                out.append(pre)
        return out

    def is_zero(self) -> bool:
        return self.background is None and all(t.profile.is_zero() for t in self.concentrations)

    def _own(self, c):
        return [tr for tr, pre in zip(self.concentrations, self._pre)
                if _same(pre, c) and not tr.profile.is_zero()]

    def radial_about(self, c) -> bool:
        if not self.transform.radial_about(c):
            return False
        for tr, pre in zip(self.concentrations, self._pre):
            if not tr.profile.is_zero() and not _same(pre, c):
                return False
        if isinstance(self.transform, RadialPower):
            if any(not _same(tr.core, (0.0, 0.0)) for tr in self._own(c)):
                return False
        if self.background is not None and not self.background.radial_about(c):
            return False
        return True

    def _knots_for(self, tr: Triplet, exact: bool) -> np.ndarray:
        prof = tr.profile
        if exact and prof.knots.size <= 8192:
            return prof.knots[(prof.knots <= prof.last_active())]
        return prof.major_knots(self.major_knot_limit)

    def radial_breaks(self, c, exact):
        if not isinstance(self.transform, IdentityMap) and not (
                isinstance(self.transform, LinearMap) and self.transform.radial_about(c)):
            return np.empty(0)
        shift = 0.0
        if isinstance(self.transform, LinearMap) and not isinstance(self.transform, IdentityMap):
            shift = math.log(abs(self.transform.A[0, 0]))
        pts = [tr.alpha * self._knots_for(tr, exact) + shift for tr in self._own(c)]
        return np.concatenate(pts) if pts else np.empty(0)

    def ray_breaks(self, c, cos, sin):
        tf = self.transform
        if not isinstance(tf, LinearMap) or isinstance(tf, IdentityMap) or tf.radial_about(c):
            return []
        own = self._own(c)
        if not own:
            return []
        stretch = tf.log_stretch(cos, sin)[:, None]
        return [tr.alpha * self._knots_for(tr, False)[None, :] + stretch for tr in own]

    def kinks(self, c):
        out: list[Kink] = []
        tf = self.transform
        nonlinear = not isinstance(tf, LinearMap)
        for tr, pre in zip(self.concentrations, self._pre):
            if tr.profile.is_zero():
                continue
            if _same(pre, c) and not nonlinear:
                continue
            levels = -tr.alpha * tr.profile.major_knots(self.major_knot_limit)

            def fn(nodes, core=tr.core):
                return tf.offset(nodes, core)[0]

            out.append(Kink(fn, levels))
        if self.background is not None:
            out.extend(self.background.kinks(tf))
        return out

    def depth(self, c):
        own = self._own(c)
        if not own:
            return -math.inf
        extra = 0.0
        tf = self.transform
        if isinstance(tf, LinearMap):
            extra = math.log(float(np.linalg.svd(tf.A, compute_uv=False)[0]))
        elif isinstance(tf, RadialPower):
            j = tf.jacobian(c[0], c[1])
            extra = math.log(float(np.linalg.norm(np.array(j).reshape(2, 2), 2)))
        return max(tr.alpha * tr.profile.last_active() for tr in own) + max(extra, 0.0)

    # evaluation ---------------------------------------------------------
    def eval(self, nodes, grad=False):
        return _field_eval(self, nodes, grad)

    def _outside(self, nodes):
        return _logdist(nodes, (0.0, 0.0)) > math.log(self.support_radius)

    def to_json(self) -> dict[str, Any]:
        from .io import field_to_json
        return field_to_json(self)


def _field_eval(self: Field, nodes: Nodes, grad: bool = False):
    n = nodes.size
    u = np.zeros(n)
    tf = self.transform
    ident = isinstance(tf, IdentityMap)
    cgx = np.zeros(n) if grad else None
    cgy = np.zeros(n) if grad else None
    for tr in self.concentrations:
        prof = tr.profile
        if prof.is_zero():
            continue
        logw, ux, uy, lratio = tf.offset(nodes, tr.core)
        s = -logw / tr.alpha
        u += tr.amplitude * prof(s)
        if grad:
            d = prof.derivative(s)
            nz = d != 0
            if np.any(nz):
                coef = np.zeros(n)
                coef[nz] = -tr.amplitude * d[nz] / tr.alpha * np.exp(lratio[nz])
                cgx += coef * ux
                cgy += coef * uy
    if self.background is not None:
        x, y = nodes.cartesian()
        X, Y = tf.apply(x, y)
        u += self.background.value(X, Y)
        if grad:
            bx, by = self.background.grad(X, Y)
            scale = np.exp(nodes.glog)
            cgx += bx * scale
            cgy += by * scale
    if grad and not ident:
        cgx, cgy = tf.pullback(nodes, cgx, cgy)
    outside = self._outside(nodes)
    if np.any(outside):
        u[outside] = 0.0
        if grad:
            cgx = np.where(outside, 0.0, cgx)
            cgy = np.where(outside, 0.0, cgy)
    return (u, cgx, cgy) if grad else u



class SumField(BaseField):
    """Lazy linear combination ``sum c_k u_k``."""

    def __init__(self, terms: Sequence[BaseField], coefs: Sequence[float] | None = None):
        flat_terms: list[BaseField] = []
        flat_coefs: list[float] = []
        coefs = [1.0] * len(terms) if coefs is None else list(coefs)
        for f, c in zip(terms, coefs):
            if isinstance(f, SumField):
                flat_terms.extend(f.terms)
                flat_coefs.extend(c * k for k in f.coefs)
            else:
                flat_terms.append(f)
                flat_coefs.append(float(c))
        self.terms = tuple(flat_terms)
        self.coefs = tuple(flat_coefs)
        self.support_radius = max((f.support_radius for f in self.terms), default=1.0)

    def centers(self):
        out: list[tuple[float, float]] = []
        for f, c in zip(self.terms, self.coefs):
            if c == 0:
                continue
            for p in f.centers():
                if not any(_same(p, q) for q in out):
                    out.append(p)
        return out

    def _active(self):
        return [(f, c) for f, c in zip(self.terms, self.coefs) if c != 0 and not f.is_zero()]

    def is_zero(self):
        return not self._active()

    def eval(self, nodes, grad=False):
        n = nodes.size
        u = np.zeros(n)
        gx = np.zeros(n) if grad else None
        gy = np.zeros(n) if grad else None
        for f, c in self._active():
            if grad:
                v, a, b = f.eval(nodes, True)
                gx += c * a
                gy += c * b
            else:
                v = f.eval(nodes)
            u += c * v
        return (u, gx, gy) if grad else u

    def radial_about(self, c):
        return all(f.radial_about(c) for f, _ in self._active())

    def radial_breaks(self, c, exact):
        parts = [f.radial_breaks(c, exact) for f, _ in self._active()]
        return np.concatenate(parts) if parts else np.empty(0)

    def ray_breaks(self, c, cos, sin):
        return [b for f, _ in self._active() for b in f.ray_breaks(c, cos, sin)]

    def kinks(self, c):
        return [k for f, _ in self._active() for k in f.kinks(c)]

    def depth(self, c):
        return max((f.depth(c) for f, _ in self._active()), default=-math.inf)


class MappedField(BaseField):
    """Pointwise composition ``h(u)`` with derivative ``dh``; ``levels`` are kinks of ``h``."""

    def __init__(self, inner: BaseField, h: Callable, dh: Callable, levels: Sequence[float] = (),
                 label: str = "mapped"):
        self.inner = inner
        self.h = h
        self.dh = dh
        self.levels = np.asarray(levels, dtype=float)
        self.label = label
        self.support_radius = inner.support_radius

    def centers(self):
        return self.inner.centers()

    def is_zero(self):
        return self.inner.is_zero() and float(self.h(np.zeros(1))[0]) == 0.0

    def eval(self, nodes, grad=False):
        if grad:
            v, gx, gy = self.inner.eval(nodes, True)
            d = self.dh(v)
            return self.h(v), d * gx, d * gy
        return self.h(self.inner.eval(nodes))

    def radial_about(self, c):
        return self.inner.radial_about(c)

    def radial_breaks(self, c, exact):
        return self.inner.radial_breaks(c, exact)

    def ray_breaks(self, c, cos, sin):
        return self.inner.ray_breaks(c, cos, sin)

    def kinks(self, c):
        out = list(self.inner.kinks(c))
        if self.levels.size:
            out.append(Kink(self.inner.eval, self.levels))
        return out

    def depth(self, c):
        return self.inner.depth(c)


class RadialField(BaseField):
    """Radial function about ``center`` that is piecewise linear in ``s = -log|x - center|``.

    ``s`` is increasing and ``values[k]`` is the value at radius ``e^{-s[k]}``;
    the field equals ``values[-1]`` inside the innermost radius and 0 outside
    the outermost one.
    """

    def __init__(self, s, values, center=(0.0, 0.0)):
        s = np.asarray(s, dtype=float)
        v = np.asarray(values, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or s.size < 2 or np.any(np.diff(s) <= 0):
            raise BadInput("radial field needs increasing s grid with matching values")
        self.s = s
        self.values = v
        self.center = as_point(center)
        self.support_radius = math.hypot(*self.center) + math.exp(-s[0])

    def centers(self):
        return [self.center]

    def is_zero(self):
        return not np.any(self.values)

    def _interp(self, s):
        return np.interp(s, self.s, self.values, left=0.0, right=self.values[-1])

    def eval(self, nodes, grad=False):
        logw, ux, uy, lratio = IDENTITY.offset(nodes, self.center)
        s = -logw
        u = self._interp(s)
        u = np.where(s < self.s[0], 0.0, u)
        if not grad:
            return u
        slopes = np.diff(self.values) / np.diff(self.s)
        idx = np.searchsorted(self.s, s, side="right") - 1
        inside = (idx >= 0) & (idx < slopes.size)
        d = np.where(inside, slopes[np.clip(idx, 0, slopes.size - 1)], 0.0)
        coef = -d * np.exp(lratio)
        return u, coef * ux, coef * uy

    def radial_about(self, c):
        return _same(c, self.center)

    def radial_breaks(self, c, exact):
        return self.s.copy() if _same(c, self.center) else np.empty(0)

    def kinks(self, c):
        if _same(c, self.center):
            return []
        lv = -self.s
        if lv.size > 64:
            lv = lv[np.linspace(0, lv.size - 1, 64).astype(int)]
        return [Kink(lambda n: _logdist(n, self.center), lv)]

    def depth(self, c):
        return float(self.s[-1]) if _same(c, self.center) else -math.inf


def field_sum(fields: Sequence[BaseField], coefs: Sequence[float] | None = None) -> BaseField:
    return SumField(fields, coefs)


def scaled(field: BaseField, c: float) -> BaseField:
    return SumField([field], [float(c)])


# ---------------------------------------------------------------------------
# pointwise access

def evaluate(field: BaseField, p) -> float:
    """Value of ``field`` at the point ``p``."""
    return float(field.eval(Nodes.point(p))[0])


def gradient(field: BaseField, p) -> tuple[float, float]:
    """Gradient of ``field`` at ``p`` (raises :class:`AtCore` at a concentration core)."""
    q = as_point(p)
    if math.hypot(*q) > field.support_radius:
        return (0.0, 0.0)
    for c in field.centers():
        if _same(c, q):
            raise AtCore(q)
    _, gx, gy = field.eval(Nodes.point(q), grad=True)
    return (float(gx[0]), float(gy[0]))
