"""Multi-scale quadrature over the plane.

The plane is covered by a smooth partition of unity built on a single-linkage
cluster tree of the field centers.  Every tree node owns one polar rule around
its center, written in ``t = -log r`` so that each decade of radius costs the
same number of nodes:

* a *leaf* (one distinct center) integrates ``chi_rho(r) F`` out to the depth
  of the structure at that center plus a geometric tail;
* an *interior* node integrates ``W(r) (1 - sum_k chi_k) F`` where the
  ``chi_k`` are the bumps handed to its children.

Bumps are C-infinity, equal 1 on half their radius and vanish at the radius,
so the windows sum to one exactly.  Along each ray the panels are cut at the
kink curves of the integrand (profile knots, indicator edges, level sets), and
at the window transitions, which receive extra subdivision.  Node weights are
kept as logarithms; integrals are accumulated by log-sum-exp.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.spatial.distance import pdist

from .errors import OverflowDominant
from .field import IDENTITY, BaseField, Kink, Nodes, QuadratureSpec, Region

logger = logging.getLogger(__name__)

__all__ = ["Rule", "Sample", "Partition", "build_rules", "sample", "integrate", "integrate_log",
           "logsumexp_signed", "bump"]

_LOG_MAX = math.log(np.finfo(float).max)
_REF_STEP = 0.25
_BISECT_ITERS = 60
_TAIL = (1.0, 2.0, 4.0, 8.0, 16.0, 24.0, 32.0, 40.0)
_LEAF_MIN_DEPTH = 6.0
_TRANSITION_SUB = 4
_ARC_PIECES = 2


def _smooth_f(x):
    out = np.zeros_like(x)
    m = x > 0
    out[m] = np.exp(-1.0 / x[m])
    return out


def bump(x):
    """C-infinity step: 1 for x <= 0, 0 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    a = _smooth_f(1.0 - x)
    b = _smooth_f(x)
    return a / (a + b)


def _chi(logd, rho):
    """Bump of radius ``rho`` as a function of log distance."""
    return bump(2.0 * np.exp(logd - math.log(rho)) - 1.0)


@dataclass
class Rule:
    center: tuple[float, float]
    kind: str
    t: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    log_w: np.ndarray
    n_rays: int
    rho: float

    @property
    def nodes(self) -> Nodes:
        return Nodes(self.center, self.t, self.cos, self.sin)

    @property
    def size(self) -> int:
        return int(self.t.size)


@dataclass
class Partition:
    """Summary of the cluster tree: rule centers, kinds and radii."""

    centers: list[tuple[float, float]]
    kinds: list[str]
    radii: list[float]
    far_field_radius: float


@dataclass
class Sample:
    """Quadrature nodes with field values, shared by all functionals of the same fields."""

    rules: list[Rule]
    log_w: np.ndarray
    t: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    rule_id: np.ndarray
    values: list[np.ndarray]
    grads: list[tuple[np.ndarray, np.ndarray]] | None
    spec: QuadratureSpec

    @property
    def size(self) -> int:
        return int(self.log_w.size)

    def partition(self) -> Partition:
        return Partition([r.center for r in self.rules], [r.kind for r in self.rules],
                         [r.rho for r in self.rules],
                         max((r.rho for r in self.rules if r.kind.startswith("root")), default=0.0))

    def grad_log_sq(self, k: int) -> np.ndarray:
        """``log(|grad u_k|^2 r^2)`` at every node (gradients are stored scaled by r)."""
        gx, gy = self.grads[k]
        with np.errstate(divide="ignore"):
            return np.log(gx * gx + gy * gy)


# ---------------------------------------------------------------------------
# cluster tree

def _dedupe(points: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[tuple[float, float]] = []
    for p in points:
        if not any(p[0] == q[0] and p[1] == q[1] for q in out):
            out.append((float(p[0]), float(p[1])))
    return out


def _children(points: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, float]]:
    """Maximal dendrogram subtrees that are tight relative to their separation.

    Returns ``(member_indices, center, radius)`` for each child.  A subtree S
    qualifies when its spread about its centroid is at most ``rho_S / 4`` with
    ``rho_S = 0.35 dist(S, rest)``; then child bumps are disjoint and every
    child's points sit well inside the flat part of its bump.
    """
    n = len(points)
    Z = linkage(pdist(points), method="single")
    members: list[list[int]] = [[i] for i in range(n)]
    for a, b, _, _ in Z:
        members.append(members[int(a)] + members[int(b)])
    diff = points[:, None, :] - points[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])

    def info(idx):
        idx = np.asarray(idx)
        rest = np.setdiff1d(np.arange(n), idx)
        sep = float(dist[np.ix_(idx, rest)].min())
        if idx.size == 1:
            return points[idx[0]], 0.0, sep
        c = points[idx].mean(axis=0)
        spread = float(np.max(np.hypot(*(points[idx] - c).T)))
        return c, spread, sep

    chosen: list[tuple[np.ndarray, np.ndarray, float]] = []

    def visit(node: int):
        idx = members[node]
        if len(idx) < n:
            c, spread, sep = info(idx)
            rho = 0.35 * sep
            if spread <= rho / 4:
                chosen.append((np.asarray(idx), np.asarray(c, dtype=float), rho))
                return
        if node >= n:
            a, b = Z[node - n, :2]
            visit(int(a))
            visit(int(b))

    visit(2 * n - 2)
    return chosen


# ---------------------------------------------------------------------------
# rule construction

def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _find_crossings(kinks: Sequence[Kink], center, cos, sin, t_grid):
    """Per-ray crossings of all kink curves.

    Returns a list (one array per ray) of crossing t values and a parallel
    list with a transition flag per crossing.
    """
    n_rays = cos.size
    out_t: list[list[np.ndarray]] = [[] for _ in range(n_rays)]
    out_tr: list[list[np.ndarray]] = [[] for _ in range(n_rays)]
    if not kinks or t_grid.size < 2:
        return [np.empty(0)] * n_rays, [np.empty(0, bool)] * n_rays
    T = np.broadcast_to(t_grid[None, :], (n_rays, t_grid.size))
    C = np.broadcast_to(cos[:, None], T.shape)
    S = np.broadcast_to(sin[:, None], T.shape)
    grid_nodes = Nodes(center, T.ravel(), C.ravel(), S.ravel())
    for kink in kinks:
        if kink.circle is not None or kink.segments:
            # closed form; a sign-change scan misses pairs of crossings inside one cell near tangent rays
            for i, seg in enumerate(_geometric_crossings(kink, center, cos, sin, t_grid[0], t_grid[-1])):
                if seg.size:
                    out_t[i].append(seg)
                    out_tr[i].append(np.full(seg.size, kink.transition))
            continue
        levels = np.sort(np.asarray(kink.levels, dtype=float).ravel())
        if levels.size == 0:
            continue
        with np.errstate(all="ignore"):
            V = np.asarray(kink.fn(grid_nodes), dtype=float).reshape(T.shape)
        V = np.where(np.isfinite(V), V, np.where(V > 0, 1e300, -1e300))
        ia = np.searchsorted(levels, V[:, :-1], side="right")
        ib = np.searchsorted(levels, V[:, 1:], side="right")
        lo = np.minimum(ia, ib)
        cnt = np.abs(ia - ib)
        ray_idx, seg_idx = np.nonzero(cnt)
        if ray_idx.size == 0:
            continue
        reps = cnt[ray_idx, seg_idx]
        ray_b = np.repeat(ray_idx, reps)
        seg_b = np.repeat(seg_idx, reps)
        offs = np.arange(reps.sum()) - np.repeat(np.cumsum(reps) - reps, reps)
        lev_b = levels[np.repeat(lo[ray_idx, seg_idx], reps) + offs]
        a = t_grid[seg_b].copy()
        b = t_grid[seg_b + 1].copy()
        fa = V[ray_b, seg_b] - lev_b
        cb, sb = cos[ray_b], sin[ray_b]
        for _ in range(_BISECT_ITERS):
            m = 0.5 * (a + b)
            with np.errstate(all="ignore"):
                fm = np.asarray(kink.fn(Nodes(center, m, cb, sb)), dtype=float) - lev_b
            left = np.sign(fm) == np.sign(fa)
            a = np.where(left, m, a)
            fa = np.where(left, fm, fa)
            b = np.where(left, b, m)
        roots = 0.5 * (a + b)
        order = np.argsort(ray_b, kind="stable")
        ray_b, roots = ray_b[order], roots[order]
        splits = np.searchsorted(ray_b, np.arange(n_rays + 1))
        for i in range(n_rays):
            seg = roots[splits[i]:splits[i + 1]]
            if seg.size:
                out_t[i].append(seg)
                out_tr[i].append(np.full(seg.size, kink.transition))
    ts = [np.concatenate(v) if v else np.empty(0) for v in out_t]
    trs = [np.concatenate(v) if v else np.empty(0, bool) for v in out_tr]
    return ts, trs


def _geometric_crossings(kink: Kink, center, cos, sin, t_lo: float, t_hi: float) -> list[np.ndarray]:
    """Crossings ``t = -log rho`` of the rays ``center + rho (cos, sin)`` with a kink's circles and segments."""
    rhos = []
    if kink.circle is not None:
        q, radii = kink.circle
        dx, dy = center[0] - q[0], center[1] - q[1]
        b = dx * cos + dy * sin
        for R in radii:
            C = (dx * dx + dy * dy) - R * R
            disc = b * b - C
            ok = disc >= 0
            sq = np.sqrt(np.where(ok, disc, 0.0))
            r1 = -b - np.where(b >= 0, sq, -sq)
            with np.errstate(divide="ignore", invalid="ignore"):
                r2 = np.where(r1 != 0, C / r1, 0.0)
            rhos += [np.where(ok, r1, np.nan), np.where(ok, r2, np.nan)]
    for a, e in kink.segments:
        ex, ey = e[0] - a[0], e[1] - a[1]
        fx, fy = a[0] - center[0], a[1] - center[1]
        # center + rho w = a + u (e - a)
        det = ex * sin - ey * cos
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = (ex * fy - ey * fx) / det
            u = (cos * fy - sin * fx) / det
        rhos.append(np.where((det != 0) & (u >= 0) & (u <= 1), rho, np.nan))
    R = np.stack(rhos, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        T = -np.log(np.where(R > 0, R, np.nan))
    out = []
    for row in T:
        row = row[np.isfinite(row) & (row > t_lo) & (row < t_hi)]
        out.append(np.sort(row))
    return out


def _tangent_angles(c, q, r) -> list[float]:
    dx, dy = q[0] - c[0], q[1] - c[1]
    d = math.hypot(dx, dy)
    if d <= r:
        return []
    phi, half = math.atan2(dy, dx), math.asin(r / d)
    return [phi - half, phi + half]


def _theta_rule(n_rays: int, singular: Sequence[float]):
    """Angles and log-weights of the angular rule.

    Without singular angles this is the uniform trapezoid rule.  Otherwise the
    circle is cut at the singular angles, every arc is split into pieces of at
    most ``pi/16`` and each piece gets Gauss-Legendre nodes under a smoothstep
    substitution, which absorbs the square-root behaviour at tangent rays.
    """
    if not singular:
        theta = 2 * np.pi * np.arange(n_rays) / n_rays
        return theta, np.full(n_rays, math.log(2 * math.pi / n_rays))
    cuts = np.sort(np.mod(np.asarray(singular, dtype=float), 2 * np.pi))
    cuts = cuts[np.concatenate([[True], np.diff(cuts) > 1e-12])]
    edges = np.concatenate([cuts, [cuts[0] + 2 * np.pi]])
    q = max(16, n_rays // 16)
    xg, wg = _gauss(q)
    s = 0.5 * (xg + 1.0)
    ws = 0.5 * wg
    phi = 3 * s**2 - 2 * s**3
    dphi = 6 * s * (1 - s)
    th, lw = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        k = max(_ARC_PIECES, int(math.ceil((b - a) / (np.pi / 16))))
        for j in range(k):
            lo = a + (b - a) * j / k
            h = (b - a) / k
            th.append(lo + h * phi)
            lw.append(np.log(h * dphi * ws))
    return np.mod(np.concatenate(th), 2 * np.pi), np.concatenate(lw)


def _reference_grid(breaks: np.ndarray) -> np.ndarray:
    pts = [breaks[:1]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        k = max(1, int(math.ceil((b - a) / _REF_STEP)))
        pts.append(np.linspace(a, b, k + 1)[1:])
    return np.concatenate(pts)


def _assemble(center, kind, rho, n_rays, t_lo, t_struct, t_hi, global_breaks, ray_breaks, kinks,
              window: Callable[[Nodes], np.ndarray], region: Region | None, n_gauss: int,
              spec: QuadratureSpec, window_circles=()) -> Rule:
    if n_rays == 1:
        cos, sin, lw_theta = np.array([1.0]), np.array([0.0]), np.array([math.log(2 * math.pi)])
    else:
        singular = [a for k in kinks for a in k.singular_angles(center, window_circles)]
        singular += [a for q, r in window_circles for a in _tangent_angles(center, q, r)]
        theta, lw_theta = _theta_rule(n_rays, singular)
        cos, sin = np.cos(theta), np.sin(theta)
        n_rays = theta.size
    ray_breaks = ray_breaks(cos, sin)
    gb = np.asarray(global_breaks, dtype=float)
    gb = np.unique(np.clip(gb[np.isfinite(gb)], t_lo, t_hi))
    gb = np.union1d(gb, [t_lo, t_hi])
    ref = _reference_grid(gb)
    cross, _ = _find_crossings(kinks, center, cos, sin, ref)
    xg, wg = _gauss(n_gauss)

    ts, rays, logws = [], [], []
    for i in range(n_rays):
        pts = [gb, cross[i]]
        for rb in ray_breaks:
            row = rb[i] if rb.shape[0] == n_rays else rb[0]
            pts.append(row[np.isfinite(row)])
        br = np.unique(np.clip(np.concatenate(pts), t_lo, t_hi))
        if br.size > 1:
            keep = np.concatenate([[True], np.diff(br) > 1e-12 * np.maximum(1.0, np.abs(br[1:]))])
            br = br[keep]
        a, b = br[:-1], br[1:]
        mid = 0.5 * (a + b)
        ci, si = np.full(mid.size, cos[i]), np.full(mid.size, sin[i])
        wmid = window(Nodes(center, mid, ci, si))
        wa = window(Nodes(center, a, ci, si))
        wb = window(Nodes(center, b, ci, si))
        live = (wmid > 0) | (wa > 0) | (wb > 0)
        spread = np.maximum(np.maximum(wa, wb), wmid) - np.minimum(np.minimum(wa, wb), wmid)
        trans = live & (spread > 1e-3)
        nsub = np.where(a < t_struct - 1e-12, np.maximum(1, np.ceil((b - a) / spec.panel_width)), 1).astype(int)
        nsub = np.where(trans, np.maximum(nsub, _TRANSITION_SUB), nsub)
        a, b, nsub = a[live], b[live], nsub[live]
        if a.size == 0:
            continue
        starts = np.repeat(a, nsub)
        widths = np.repeat((b - a) / nsub, nsub)
        k = np.arange(nsub.sum()) - np.repeat(np.cumsum(nsub) - nsub, nsub)
        lo = starts + k * widths
        t = (lo[:, None] + 0.5 * widths[:, None] * (xg[None, :] + 1.0)).ravel()
        lw = (np.log(0.5 * widths)[:, None] + np.log(wg)[None, :]).ravel() + lw_theta[i] - 2.0 * t
        ts.append(t)
        logws.append(lw)
        rays.append(np.full(t.size, i))
    if ts:
        t = np.concatenate(ts)
        ray = np.concatenate(rays)
        lw = np.concatenate(logws)
    else:
        t, ray, lw = np.empty(0), np.empty(0, int), np.empty(0)
    nodes = Nodes(center, t, cos[ray], sin[ray])
    w = window(nodes)
    with np.errstate(divide="ignore"):
        lw = lw + np.log(w)
    if region is not None:
        lw = np.where(region.mask(nodes), lw, -np.inf)
    keep = np.isfinite(lw)
    return Rule(center, kind, t[keep], cos[ray][keep], sin[ray][keep], lw[keep], n_rays, rho)


def build_rules(fields: Sequence[BaseField], spec: QuadratureSpec, region: Region | None = None,
                extra_kinks: Sequence[Kink] = ()) -> list[Rule]:
    """Build the quadrature rules shared by ``fields``."""
    points = _dedupe([c for f in fields for c in f.centers()])
    support = max((f.support_radius for f in fields), default=1.0)
    rules: list[Rule] = []
    if not points:
        root_c = (0.0, 0.0)
    elif len(points) == 1:
        root_c = points[0]
    else:
        root_c = tuple(np.mean(np.asarray(points), axis=0))
    r_out = support + math.hypot(*root_c)

    def all_kinks(c, radial: bool):
        ks = [k for f in fields for k in f.kinks(c)]
        ks.extend(extra_kinks)
        if region is not None:
            ks.extend(region.kinks())
        if not radial or (c[0] == 0.0 and c[1] == 0.0):
            ks.append(Kink(lambda n: IDENTITY.offset(n, (0.0, 0.0))[0], np.array([math.log(support)]),
                           circle=((0.0, 0.0), [support])))
        return ks

    def is_radial(c) -> bool:
        if not all(f.radial_about(c) for f in fields):
            return False
        return region is None or region.radial_about(c)

    def leaf(c, rho, parent_window, root: bool):
        radial = is_radial(c) and not extra_kinks_nonradial(c)
        t_lo = -math.log(rho)
        depth = max((f.depth(c) for f in fields), default=-math.inf)
        t_struct = max(depth, t_lo + math.log(2.0) + _LEAF_MIN_DEPTH)
        t_hi = t_struct + spec.tail
        gb = [t_lo, t_lo + math.log(2.0), t_struct] + [t_struct + d for d in _TAIL if d <= spec.tail]
        gb.extend(b for f in fields for b in f.radial_breaks(c, radial))
        gb.extend(np.arange(math.ceil(t_lo), math.floor(t_struct)))
        n_rays = 1 if radial else spec.theta_nodes
        rb = lambda cos, sin: [b for f in fields for b in f.ray_breaks(c, cos, sin)]  # noqa: E731
        circles = [] if root else [(c, rho / 2), (c, rho)]
        return _assemble(c, "root-leaf" if root else "leaf", rho, n_rays, t_lo, t_struct, t_hi, np.asarray(gb), rb,
                         all_kinks(c, radial), parent_window, region, spec.y_nodes, spec, circles)

    def extra_kinks_nonradial(c) -> bool:
        # level-set kinks are radial exactly when the fields are
        return False

    def node(pts: np.ndarray, c, rho, root: bool):
        c = (float(c[0]), float(c[1]))
        if root:
            def win(n):
                return np.ones(n.size)
        else:
            def win(n, c=c, rho=rho):
                return _chi(IDENTITY.offset(n, c)[0], rho)
        if len(pts) == 1:
            rules.append(leaf(c, rho, win, root))
            return
        kids = _children(pts)
        kid_c = [(float(k[1][0]), float(k[1][1])) for k in kids]
        kid_rho = [k[2] for k in kids]

        def gap_win(n, win=win, kid_c=kid_c, kid_rho=kid_rho):
            w = win(n)
            s = np.zeros(n.size)
            for kc, kr in zip(kid_c, kid_rho):
                s += _chi(IDENTITY.offset(n, kc)[0], kr)
            return w * np.clip(1.0 - s, 0.0, 1.0)

        t_lo = -math.log(rho)
        gb = [t_lo, t_lo + math.log(2.0)] if not root else [t_lo]
        r_struct = math.inf
        inner_cut = None
        for kc, kr in zip(kid_c, kid_rho):
            delta = math.hypot(kc[0] - c[0], kc[1] - c[1])
            for r in (delta + kr, delta + kr / 2, delta - kr / 2, delta - kr, delta):
                if r > 0:
                    gb.append(-math.log(r))
            if delta < kr / 2:
                inner_cut = -math.log(kr / 2 - delta) if inner_cut is None else max(inner_cut, -math.log(kr / 2 - delta))
            r_struct = min(r_struct, max(delta - kr, 0.0) or kr)
        if inner_cut is not None:
            t_hi = t_struct = inner_cut
        else:
            t_struct = max(-math.log(r_struct), t_lo + 1.0)
            gb.extend([t_struct] + [t_struct + d for d in _TAIL if d <= spec.tail])
            t_hi = t_struct + spec.tail
        gb.extend(np.arange(math.ceil(t_lo), math.floor(t_struct)))
        n_rays = min(spec.theta_nodes * spec.gap_theta_factor, spec.max_gap_theta)
        kinks = all_kinks(c, False)
        kinks += [Kink(lambda n, kc=kc: IDENTITY.offset(n, kc)[0], np.log([kr / 2, kr]), transition=True)
                  for kc, kr in zip(kid_c, kid_rho)]
        if not root:
            kinks.append(Kink(lambda n: IDENTITY.offset(n, c)[0], np.log([rho / 2, rho]), transition=True))
        rb = lambda cos, sin: [b for f in fields for b in f.ray_breaks(c, cos, sin)]  # noqa: E731
        circles = [] if root else [(c, rho / 2), (c, rho)]
        circles += [(kc, r) for kc, kr in zip(kid_c, kid_rho) for r in (kr / 2, kr)]
        rules.append(_assemble(c, "root-gap" if root else "gap", rho, n_rays, t_lo, t_struct, t_hi, np.asarray(gb), rb,
                               kinks, gap_win, region, spec.far_field_nodes, spec, circles))
        for idx, kc, kr in zip((k[0] for k in kids), kid_c, kid_rho):
            node(pts[idx], kc, kr, False)

    pts = np.asarray(points if points else [root_c], dtype=float)
    node(pts, root_c, r_out, True)
    return rules


# ---------------------------------------------------------------------------
# sampling and accumulation

def sample(fields: Sequence[BaseField], spec: QuadratureSpec | None = None, grad: bool = False,
           region: Region | None = None, extra_kinks: Sequence[Kink] = ()) -> Sample:
    """Evaluate ``fields`` on the shared quadrature nodes."""
    spec = spec or QuadratureSpec.from_env()
    fields = list(fields)
    rules = build_rules(fields, spec, region, extra_kinks)
    values: list[list[np.ndarray]] = [[] for _ in fields]
    grads: list[list[tuple[np.ndarray, np.ndarray]]] = [[] for _ in fields]
    for rule in rules:
        nodes = rule.nodes
        for k, f in enumerate(fields):
            if grad:
                u, gx, gy = f.eval(nodes, True)
                values[k].append(u)
                grads[k].append((gx, gy))
            else:
                values[k].append(f.eval(nodes))
    cat = lambda parts: np.concatenate(parts) if parts else np.empty(0)
    vals = [cat(v) for v in values]
    gr = [(cat([g[0] for g in gs]), cat([g[1] for g in gs])) for gs in grads] if grad else None
    rule_id = cat([np.full(r.size, i) for i, r in enumerate(rules)]).astype(int)
    logger.debug("quadrature sample: %d rules, %d nodes", len(rules), rule_id.size)
    return Sample(rules, cat([r.log_w for r in rules]), cat([r.t for r in rules]),
                  cat([r.cos for r in rules]), cat([r.sin for r in rules]), rule_id, vals, gr, spec)


def logsumexp_signed(log_abs: np.ndarray, sign: np.ndarray, floor: float) -> tuple[float, float]:
    """Return ``(log|S|, sign(S))`` of ``S = sum sign * exp(log_abs)``, dropping terms ``floor`` below the max."""
    log_abs = np.asarray(log_abs, dtype=float)
    ok = np.isfinite(log_abs) & (sign != 0)
    if np.any(np.isnan(log_abs)):
        raise OverflowDominant(float("nan"))
    if not np.any(ok):
        return -math.inf, 0.0
    la = log_abs[ok]
    sg = np.asarray(sign, dtype=float)[ok] if np.ndim(sign) else np.full(la.size, float(sign))
    m = float(la.max())
    if not np.isfinite(m):
        raise OverflowDominant(m)
    keep = la >= m - floor
    s = float(np.sum(sg[keep] * np.exp(la[keep] - m)))
    if s == 0.0:
        return -math.inf, 0.0
    return m + math.log(abs(s)), math.copysign(1.0, s)


def _as_log(res):
    if isinstance(res, tuple):
        la, sg = res
        return np.asarray(la, dtype=float), np.asarray(sg, dtype=float)
    v = np.asarray(res, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(v)), np.sign(v)


def integrate(F: Callable[[Sample], object], fields: Sequence[BaseField], spec: QuadratureSpec | None = None,
              region: Region | None = None, grad: bool = False, sampled: Sample | None = None) -> float:
    """Integrate a pointwise functional over the plane.

    ``F(sample)`` returns either linear values at the nodes or a pair
    ``(log|f|, sign)``.  Raises :class:`OverflowDominant` if the result does
    not fit in a double.
    """
    smp = sampled if sampled is not None else sample(fields, spec, grad=grad, region=region)
    la, sg = _as_log(F(smp))
    lv, s = logsumexp_signed(la + smp.log_w, sg, smp.spec.weight_floor)
    if lv > _LOG_MAX:
        raise OverflowDominant(lv)
    return s * math.exp(lv) if s else 0.0


def integrate_log(F: Callable[[Sample], object], fields: Sequence[BaseField], spec: QuadratureSpec | None = None,
                  region: Region | None = None, grad: bool = False, sampled: Sample | None = None) -> float:
    """Logarithm of the integral of a nonnegative functional (``-inf`` for zero)."""
    smp = sampled if sampled is not None else sample(fields, spec, grad=grad, region=region)
    la, sg = _as_log(F(smp))
    lv, s = logsumexp_signed(la + smp.log_w, np.where(sg != 0, 1.0, 0.0), smp.spec.weight_floor)
    return lv
