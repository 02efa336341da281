"""Profile decomposition of a single field.

Each step finds a scale from the rearrangement, localizes a core from the
high-level set of a cut-off copy of the field, reads the profile off angular
averages around the core, and subtracts the recovered concentration from the
original field.  The loop stops once the Orlicz norm of the remainder is small.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, NamedTuple

import numpy as np

from .bubbles import apply_cutoff, profile_sup_ratio
from .errors import BadInput, NoScale, ScatteredMass, ZeroField
from .field import BaseField, Exterior, Field, Nodes, QuadratureSpec, SumField, _scaled_offset
from .orlicz import OrliczConfig, dirichlet_energy, log_expm1, orlicz_norm
from .profile import Profile, Triplet, as_point
from .quadrature import _gauss, bump, integrate, integrate_log, logsumexp_signed, sample
from .rearrange import RadialDecreasing, _level_kink, schwarz_rearrange

logger = logging.getLogger(__name__)

__all__ = ["ExtractionConfig", "DecompositionReport", "ScaleScan", "LevelSet", "Orthogonality", "TestFunction",
           "scale_scan", "detect_scale", "level_set_measure", "detect_core", "extract_profile", "subtract",
           "classify_orthogonality", "gradient_cross_term", "normalized_cross_term", "decompose",
           "mass_fraction", "defect_measure_check", "away_compactness_check"]


@dataclass(frozen=True)
class ExtractionConfig:
    eps0: float = 0.1
    delta0: float = 0.05
    cutoff_a: float = 0.05
    cutoff_M: float = 10.0
    remainder_tol: float = 0.05
    max_profiles: int = 8
    theta_nodes: int = 256
    scale_orth_threshold: float = 2.9
    vanish_tol: float = 0.02
    profile_s_max: float = 5.0
    profile_step: float = 1.0 / 512
    scale_tie: float = 0.1

    def __post_init__(self):
        if not 0 < self.eps0 < 0.5:
            raise BadInput("eps0 must lie in (0, 1/2)")
        if not 0 < self.cutoff_a < self.cutoff_M:
            raise BadInput("need 0 < cutoff_a < cutoff_M")
        if self.delta0 <= 0 or self.remainder_tol <= 0 or self.vanish_tol <= 0:
            raise BadInput("delta0, remainder_tol and vanish_tol must be positive")
        if self.max_profiles < 1 or self.theta_nodes < 4:
            raise BadInput("max_profiles >= 1 and theta_nodes >= 4 required")
        if not 0 <= self.scale_tie < 1:
            raise BadInput("scale_tie must lie in [0, 1)")

    @property
    def ball_exponent(self) -> float:
        return 1.0 - 2.0 * self.eps0

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "ExtractionConfig":
        known = {k: obj[k] for k in cls.__dataclass_fields__ if k in obj}
        return cls(**known)


# ---------------------------------------------------------------------------
# scale

class ScaleScan(NamedTuple):
    alpha_hat: float
    A0: float
    peak: float
    rearranged: RadialDecreasing


def _ratio_scan(ustar: RadialDecreasing):
    """``u*(e^-s)^2 / s`` on the knots of ``u*`` and a dense grid, for ``s > 0``."""
    s_hi = float(ustar.s[-1])
    if s_hi <= 0:
        return np.empty(0), np.empty(0)
    dense = np.linspace(max(float(ustar.s[0]), 0.0), s_hi, 8193)
    s = np.unique(np.concatenate([ustar.s[ustar.s > 0], dense[dense > 0]]))
    v = np.interp(s, ustar.s, ustar.values)
    return s, v * v / s


def scale_scan(field: BaseField, spec: QuadratureSpec | None = None, cfg: ExtractionConfig | None = None,
               orlicz: OrliczConfig | None = None) -> ScaleScan:
    """Scale estimate with the rearrangement it came from.

    Local maxima of the ratio within ``scale_tie`` of the global one count as
    ties, and the coarsest of them (smallest ``s``) is chosen: the coarse
    bubble's slowly varying tail would otherwise leak into the angular averages
    taken around a finer one.
    """
    cfg = cfg or ExtractionConfig()
    if field.is_zero():
        raise ZeroField("field is identically zero")
    A0 = orlicz_norm(field, orlicz, spec)
    if A0 == 0.0:
        raise ZeroField("field has zero norm")
    ustar = schwarz_rearrange(field, spec)
    s, ratio = _ratio_scan(ustar)
    if s.size == 0 or not np.max(ratio) > 0.1 * A0 * A0:
        raise NoScale(f"scale objective never exceeds 0.1 A0^2 = {0.1 * A0 * A0:.3g}")
    alpha = _pick_scale(s, ratio, cfg.scale_tie)
    # second pass: dense levels around the chosen value pin the kink of u* there
    peak = float(np.interp(alpha, ustar.s, ustar.values))
    ustar = schwarz_rearrange(field, spec, extra_levels=peak * (1.0 + np.linspace(-0.05, 0.05, 101)))
    s, ratio = _ratio_scan(ustar)
    alpha = _pick_scale(s, ratio, cfg.scale_tie)
    peak = float(np.interp(alpha, ustar.s, ustar.values))
    return ScaleScan(alpha, A0, peak, ustar)


def _pick_scale(s: np.ndarray, ratio: np.ndarray, tie: float) -> float:
    top = float(np.max(ratio))
    local = np.zeros(ratio.size, dtype=bool)
    if ratio.size > 2:
        local[1:-1] = (ratio[1:-1] >= ratio[:-2]) & (ratio[1:-1] >= ratio[2:])
    local[-1] = ratio.size == 1 or ratio[-1] >= ratio[-2]
    cand = np.flatnonzero(local & (ratio >= (1.0 - tie) * top))
    return float(s[cand[0] if cand.size else int(np.argmax(ratio))])


def detect_scale(field: BaseField, spec: QuadratureSpec | None = None,
                 cfg: ExtractionConfig | None = None) -> tuple[float, float]:
    """``(alpha_hat, A0)``: argmax of ``u*(e^-s)^2 / s`` and the Orlicz norm."""
    sc = scale_scan(field, spec, cfg)
    return sc.alpha_hat, sc.A0


# ---------------------------------------------------------------------------
# high-level set and core

@dataclass
class LevelSet:
    """``{|u| >= threshold}`` as quadrature cells, positions kept relative to rule centers."""

    threshold: float
    log_measure: float
    centers: np.ndarray
    t: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    log_w: np.ndarray

    @property
    def measure(self) -> float:
        return math.exp(self.log_measure) if np.isfinite(self.log_measure) else 0.0

    @property
    def size(self) -> int:
        return int(self.t.size)


def level_set_measure(field: BaseField, threshold: float, spec: QuadratureSpec | None = None) -> LevelSet:
    if not threshold > 0:
        raise BadInput("threshold must be positive")
    smp = sample([field], spec, extra_kinks=[_level_kink(field, [-threshold, threshold])])
    inside = np.abs(smp.values[0]) >= threshold
    idx = np.flatnonzero(inside & np.isfinite(smp.log_w))
    lm, _ = logsumexp_signed(smp.log_w[idx], np.ones(idx.size), smp.spec.weight_floor) if idx.size else (-math.inf, 0)
    centers = np.array([smp.rules[k].center for k in smp.rule_id[idx]]).reshape(-1, 2)
    return LevelSet(threshold, lm, centers, smp.t[idx], smp.cos[idx], smp.sin[idx], smp.log_w[idx])


def _log_dist(E: LevelSet, base, delta) -> np.ndarray:
    """``log|p - (base + delta)|`` for every cell, exact when ``delta`` is far below double spacing of ``base``."""
    out = np.empty(E.size)
    for c in np.unique(E.centers, axis=0):
        sel = np.all(E.centers == c, axis=1)
        if c[0] == base[0] and c[1] == base[1]:
            Dx, Dy = -delta[0], -delta[1]
        else:
            Dx, Dy = c[0] - base[0] - delta[0], c[1] - base[1] - delta[1]
        nD = math.hypot(Dx, Dy)
        logD = math.log(nD) if nD > 0 else -np.inf
        dx, dy = (Dx / nD, Dy / nD) if nD > 0 else (0.0, 0.0)
        out[sel] = _scaled_offset(logD, dx, dy, -E.t[sel], E.cos[sel], E.sin[sel])[0]
    return out


def _captured(E: LevelSet, base, delta, log_rad: float) -> float:
    near = _log_dist(E, base, delta) < log_rad
    if not np.any(near):
        return 0.0
    la, _ = logsumexp_signed(E.log_w[near], np.ones(int(near.sum())), 745.0)
    return math.exp(la - E.log_measure)


def _threshold(alpha: float, A0: float, cfg: ExtractionConfig, level: float | None) -> float:
    thr = math.sqrt(2.0 * alpha) * A0
    if level is not None and level > 0:
        thr = min(thr, level)
    return (1.0 - cfg.eps0 / 10.0) * thr


class CoreResult(NamedTuple):
    core: tuple[float, float]
    fraction: float
    threshold: float


def _locate_core(field: BaseField, alpha: float, A0: float, cfg: ExtractionConfig, spec=None,
                 level: float | None = None) -> CoreResult:
    if not (alpha > 0 and A0 > 0):
        raise BadInput("need alpha > 0 and A0 > 0")
    if level is None:
        level = float(np.max(np.abs(sample([field], spec).values[0])))
    thr = _threshold(alpha, A0, cfg, level)
    E = level_set_measure(field, thr, spec)
    need = cfg.delta0 * A0 * A0
    if E.size == 0 or not np.isfinite(E.log_measure):
        raise ScatteredMass(f"level set at {thr:.6g} is empty")
    log_rad = -cfg.ball_exponent * alpha
    # candidates: rule centers holding E cells and the measure centroid of each
    cands = []
    for c in np.unique(E.centers, axis=0):
        sel = np.all(E.centers == c, axis=1)
        lw = E.log_w[sel] - E.t[sel]
        m = float(np.max(E.log_w[sel]))
        wsum = float(np.sum(np.exp(E.log_w[sel] - m)))
        off = np.exp(lw - m) / wsum
        cands.append(((float(c[0]), float(c[1])), (0.0, 0.0)))
        cands.append(((float(c[0]), float(c[1])), (float(np.sum(off * E.cos[sel])), float(np.sum(off * E.sin[sel])))))
    scored = [(_captured(E, b, d, log_rad), b, d) for b, d in cands]
    best, base, delta = max(scored, key=lambda x: x[0])
    # hill-climb on the lattice of pitch e^{-b alpha}/4
    pitch = 0.25 * math.exp(log_rad)
    for _ in range(64):
        moves = [(_captured(E, base, (delta[0] + i * pitch, delta[1] + j * pitch), log_rad),
                  (delta[0] + i * pitch, delta[1] + j * pitch))
                 for i in (-1, 0, 1) for j in (-1, 0, 1) if i or j]
        f, d = max(moves, key=lambda x: x[0])
        if f <= best:
            break
        best, delta = f, d
    core = (base[0] + delta[0], base[1] + delta[1])
    logger.debug("core %s captures %.4g of E (need %.4g)", core, best, need)
    if best < need:
        raise ScatteredMass(f"best ball captures {best:.3g} of the level set, below delta0 A0^2 = {need:.3g}")
    return CoreResult(core, best, thr)


def detect_core(field: BaseField, alpha: float, A0: float, cfg: ExtractionConfig | None = None,
                spec: QuadratureSpec | None = None, level: float | None = None) -> tuple[float, float]:
    """Center of the ball of radius ``e^{-b alpha}`` holding the largest share of the high-level set.

    The set is ``{|u| >= (1 - eps0/10) sqrt(2 alpha) A0}``; when ``level``
    (the rearrangement at radius ``e^{-alpha}``, by default the sampled
    maximum of ``|u|``) is lower than ``sqrt(2 alpha) A0`` it replaces it,
    since at finite scale the norm exceeds its limiting value and would push
    the threshold above the bubble.
    """
    return _locate_core(field, alpha, A0, cfg or ExtractionConfig(), spec, level).core


# ---------------------------------------------------------------------------
# profile

def profile_grid(cfg: ExtractionConfig) -> np.ndarray:
    n = int(round(cfg.profile_s_max / cfg.profile_step))
    return np.linspace(0.0, cfg.profile_s_max, n + 1)


def angular_average(field: BaseField, alpha: float, core, y: np.ndarray, theta_nodes: int) -> np.ndarray:
    """``(1/2pi) sum_theta sqrt(2pi/alpha) u(core + e^{-alpha y}(cos, sin))``."""
    th = 2.0 * math.pi * np.arange(theta_nodes) / theta_nodes
    T, TH = np.meshgrid(alpha * np.asarray(y, dtype=float), th, indexing="ij")
    nodes = Nodes(as_point(core), T.ravel(), np.cos(TH).ravel(), np.sin(TH).ravel())
    u = field.eval(nodes).reshape(T.shape)
    return math.sqrt(2.0 * math.pi / alpha) * u.mean(axis=1)


def extract_profile(field: BaseField, alpha: float, core, cfg: ExtractionConfig | None = None) -> Profile:
    """Angular averages on the profile grid, with the value at 0 removed over the first cell."""
    cfg = cfg or ExtractionConfig()
    if not alpha > 0:
        raise BadInput("alpha must be positive")
    y = profile_grid(cfg)
    vals = angular_average(field, alpha, core, y, cfg.theta_nodes)
    vals[0] = 0.0
    return Profile.from_values(y, vals)


def subtract(field: BaseField, triplet: Triplet) -> BaseField:
    """Lazy ``u - g_triplet``."""
    return SumField([field, Field([triplet])], [1.0, -1.0])


# ---------------------------------------------------------------------------
# orthogonality

@dataclass(frozen=True)
class Orthogonality:
    kind: str                     # "ScaleOrthogonal", "SameScaleOrthogonal" or "NotOrthogonal"
    a: float | None = None

    def to_json(self):
        return {"kind": self.kind, "a": self.a}


def _vanishes_on(psi: Profile, upto: float, tol: float) -> bool:
    if psi.is_zero():
        return True
    if upto <= 0:
        return False
    ref = profile_sup_ratio(psi).value
    pts = np.concatenate([psi.knots[psi.knots <= upto], [upto]])
    return float(np.max(np.abs(psi(pts)))) <= tol * ref


def classify_orthogonality(t1: Triplet, t2: Triplet, cfg: ExtractionConfig | None = None) -> Orthogonality:
    cfg = cfg or ExtractionConfig()
    if abs(math.log(t2.alpha / t1.alpha)) >= cfg.scale_orth_threshold:
        return Orthogonality("ScaleOrthogonal")
    d = math.hypot(t1.core[0] - t2.core[0], t1.core[1] - t2.core[1])
    a = -math.log(d) / min(t1.alpha, t2.alpha) if d > 0 else math.inf
    a = max(a, 0.0)
    upto = a - cfg.vanish_tol * a if np.isfinite(a) else max(t1.profile.s_max, t2.profile.s_max)
    if _vanishes_on(t1.profile, upto, cfg.vanish_tol) or _vanishes_on(t2.profile, upto, cfg.vanish_tol):
        return Orthogonality("SameScaleOrthogonal", a)
    return Orthogonality("NotOrthogonal", a)


def gradient_cross_term(t1: Triplet, t2: Triplet, spec: QuadratureSpec | None = None) -> float:
    """``int grad g1 . grad g2``."""
    f1, f2 = Field([t1]), Field([t2])
    smp = sample([f1, f2], spec, grad=True)
    (ax, ay), (bx, by) = smp.grads
    dot = ax * bx + ay * by                      # r^2 grad . grad
    with np.errstate(divide="ignore"):
        la = np.log(np.abs(dot)) + 2.0 * smp.t
    return integrate(lambda s: (la, np.sign(dot)), [], sampled=smp)


def normalized_cross_term(t1: Triplet, t2: Triplet, spec: QuadratureSpec | None = None) -> float:
    den = math.sqrt(t1.energy() * t2.energy())
    return gradient_cross_term(t1, t2, spec) / den if den > 0 else 0.0


# ---------------------------------------------------------------------------
# pipeline

@dataclass
class DecompositionReport:
    triplets: list[Triplet] = field(default_factory=list)
    A_values: list[float] = field(default_factory=list)
    orthogonality: list[list[Orthogonality | None]] = field(default_factory=list)
    energy_ledger: dict[str, float] = field(default_factory=dict)
    diagnostics: list[dict[str, Any]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "triplets": [{"alpha": t.alpha, "core": list(t.core), "profile_ref": i,
                          "profile": t.profile.to_json()} for i, t in enumerate(self.triplets)],
            "A_values": list(self.A_values),
            "orthogonality": [[o.to_json() if o is not None else None for o in row] for row in self.orthogonality],
            "ledger": dict(self.energy_ledger),
            "diagnostics": self.diagnostics,
            "flags": list(self.flags),
        }


def decompose(field: BaseField, cfg: ExtractionConfig | None = None,
              spec: QuadratureSpec | None = None) -> DecompositionReport:
    cfg = cfg or ExtractionConfig()
    rep = DecompositionReport()
    if field.is_zero():
        rep.A_values.append(0.0)
        rep.energy_ledger = {"input": 0.0, "profiles_sum": 0.0, "remainder": 0.0, "residual": 0.0}
        return rep
    remainder = field
    A = orlicz_norm(field, spec=spec)
    rep.A_values.append(A)
    while A > cfg.remainder_tol and len(rep.triplets) < cfg.max_profiles:
        try:
            sc = scale_scan(remainder, spec, cfg)
            cut = apply_cutoff(remainder, sc.alpha_hat, cfg.cutoff_a, cfg.cutoff_M)
            loc = _locate_core(cut, sc.alpha_hat, sc.A0, cfg, spec, level=sc.peak)
        except ScatteredMass as exc:
            rep.flags.append("scattered_mass")
            rep.diagnostics.append({"step": len(rep.triplets), "stop": str(exc)})
            break
        except (NoScale, ZeroField) as exc:
            rep.flags.append("no_scale")
            rep.diagnostics.append({"step": len(rep.triplets), "stop": str(exc)})
            break
        psi = extract_profile(remainder, sc.alpha_hat, loc.core, cfg)
        if psi.is_zero():
            rep.flags.append("zero_profile")
            break
        tr = Triplet(sc.alpha_hat, loc.core, psi)
        nxt = subtract(remainder, tr)
        A_new = orlicz_norm(nxt, spec=spec)
        step = {"step": len(rep.triplets), "alpha": sc.alpha_hat, "core": list(loc.core), "A": A,
                "threshold": loc.threshold, "captured": loc.fraction, "profile_energy": psi.energy(),
                "A_after": A_new}
        if psi.energy() < (0.1 * A) ** 2:
            rep.flags.append(f"weak_profile_{len(rep.triplets)}")
        if not A_new < A:
            step["rejected"] = True
            rep.diagnostics.append(step)
            rep.flags.append("non_decreasing_remainder")
            break
        rep.diagnostics.append(step)
        rep.triplets.append(tr)
        remainder, A = nxt, A_new
        rep.A_values.append(A)
    n = len(rep.triplets)
    rep.orthogonality = [[None if i == j else classify_orthogonality(rep.triplets[i], rep.triplets[j], cfg)
                          for j in range(n)] for i in range(n)]
    e_in = dirichlet_energy(field, spec)
    e_prof = sum(t.energy() for t in rep.triplets)
    e_rem = dirichlet_energy(remainder, spec)
    rep.energy_ledger = {"input": e_in, "profiles_sum": e_prof, "remainder": e_rem,
                         "residual": abs(e_in - e_prof - e_rem)}
    return rep


# ---------------------------------------------------------------------------
# audits

def mass_fraction(field: BaseField, alpha: float, core, constant_C: float, t_span: float = 20.0,
                  theta_nodes: int = 256, panel_nodes: int = 16) -> float:
    """Share of ``B(core, e^{-alpha})`` where ``|u| >= C sqrt(alpha)`` (polar Gauss rule about ``core``)."""
    if not constant_C > 0:
        raise BadInput("constant_C must be positive")
    if field.is_zero():
        return 0.0
    xg, wg = _gauss(panel_nodes)
    edges = alpha + np.linspace(0.0, t_span, int(4 * t_span) + 1)
    h = np.diff(edges)
    t = (edges[:-1, None] + 0.5 * h[:, None] * (xg[None, :] + 1.0)).ravel()
    lw_t = (np.log(0.5 * h)[:, None] + np.log(wg)[None, :]).ravel() - 2.0 * t
    th = 2.0 * math.pi * np.arange(theta_nodes) / theta_nodes
    T, TH = np.meshgrid(t, th, indexing="ij")
    u = field.eval(Nodes(as_point(core), T.ravel(), np.cos(TH).ravel(), np.sin(TH).ravel())).reshape(T.shape)
    frac_t = np.mean(np.abs(u) >= constant_C * math.sqrt(alpha), axis=1)
    w = np.exp(lw_t - lw_t.max())
    return float(np.sum(w * frac_t) / np.sum(w))


@dataclass(frozen=True)
class TestFunction:
    """Built-in smooth test functions: ``gaussian`` ``exp(-|x-c|^2/w^2)``, ``cosine``
    ``cos^2(pi |x-c| / 2w)`` on ``|x-c| < w``, and ``plateau`` (1 on ``B(c, w)``, smooth to 0 at ``2w``)."""

    __test__ = False
    kind: str = "gaussian"
    width: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("gaussian", "cosine", "plateau") or not self.width > 0:
            raise BadInput(f"unknown test function {self.kind!r} or bad width")

    def __call__(self, x, y):
        r = np.hypot(np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]) / self.width
        if self.kind == "gaussian":
            return np.exp(-r * r)
        if self.kind == "cosine":
            return np.where(r < 1, np.cos(0.5 * np.pi * np.minimum(r, 1.0)) ** 2, 0.0)
        return bump(r - 1.0)


def defect_measure_check(triplet: Triplet, test_fn: Callable | TestFunction,
                         spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """``(int |grad g|^2 phi, int psi'^2 phi(core))``."""
    g = Field([triplet])
    smp = sample([g], spec, grad=True)
    x, y = [], []
    for r in smp.rules:
        px, py = r.nodes.cartesian()
        x.append(px)
        y.append(py)
    phi = np.asarray(test_fn(np.concatenate(x), np.concatenate(y)), dtype=float)
    with np.errstate(divide="ignore"):
        la = smp.grad_log_sq(0) + 2.0 * smp.t + np.log(np.abs(phi))
    lhs = integrate(lambda s: (la, np.sign(phi)), [], sampled=smp)
    rhs = triplet.energy() * float(np.asarray(test_fn(np.array([triplet.core[0]]), np.array([triplet.core[1]])))[0])
    return lhs, rhs


def away_compactness_check(field: BaseField, x0, M: float, amp: float = 1.0,
                           spec: QuadratureSpec | None = None) -> float:
    """``int_{|x - x0| > M} (exp((amp u)^2) - 1)``."""
    if not M > 0:
        raise BadInput("M must be positive")
    if field.is_zero():
        return 0.0
    smp = sample([field], spec, region=Exterior(as_point(x0), float(M)))
    x2 = (amp * smp.values[0]) ** 2
    lv = integrate_log(lambda s: (log_expm1(x2), np.ones(x2.size)), [], sampled=smp)
    return math.exp(lv) if np.isfinite(lv) else 0.0
