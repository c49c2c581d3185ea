"""Curvature integrals behind the epsilon-regularity quantity I_{X0,t0} of
the self-similar flow sqrt(-t) M, annulus profiles, the curvature-estimate
ratio scan and volume growth of ends."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConvergenceError, DomainError
from .geom.base import QuadratureSpec, Region, Resolution
from .geom.ops import require_shrinker


class AnnulusMissNotice(UserWarning):
    """An integration region does not meet the surface."""


# -- region integrals ----------------------------------------------------------

def _region_integral(surface, integrand, region, tol=1e-6, max_level=16):
    """Unweighted int_{M cap region} integrand dmu.

    Analytic product surfaces only refine the angular rule: the integrands
    here are constant along the flat factor, so two Gauss points integrate
    the s^(j-1) line weight exactly.
    """
    if surface.discrete:
        ss = surface.samples(region)
        return ss.integrate(integrand(ss)) if len(ss) else 0.0
    history = []
    calm = 0
    for level in range(max_level + 1):
        ss = surface.samples(region, Resolution(16 * 2 ** level, 2, 1))
        val = ss.integrate(integrand(ss)) if len(ss) else 0.0
        if history:
            calm = calm + 1 if abs(val - history[-1]) <= tol * max(abs(val), 1e-300) else 0
            if calm == 2:
                return val
        history.append(val)
    raise ConvergenceError(f"integral over {region} on {surface.describe()} did not settle "
                           f"to rel tol {tol}", history=history)


def _curvature_power(p):
    return lambda ss: ss.B_norm ** p


def _mean_curvature_power(p):
    return lambda ss: np.linalg.norm(ss.H, axis=1) ** p


# -- annulus profiles ------------------------------------------------------------

@dataclass(frozen=True)
class AnnulusCurvatureProfile:
    """int_{M cap (B_2r minus B_r)} |B|^p for each r, with the tail sup."""

    p: float
    radii: np.ndarray
    values: np.ndarray

    @property
    def running_sup(self):
        """sup over r' >= r of the annulus values, per r."""
        return np.maximum.accumulate(self.values[::-1])[::-1]

    def sup_from(self, r1):
        sel = self.radii >= r1
        if not np.any(sel):
            raise DomainError(f"profile has no radius >= {r1}")
        return float(self.values[sel].max())

    @property
    def decaying(self):
        """Numerical reading of 'annulus integrals tend to 0'.

        True when all values are roundoff (below 1e-20), or the maximum
        sits before the last radius and the last value is at most half of it.
        """
        top = float(self.values.max())
        if top <= 1e-20:
            return True
        return bool(int(np.argmax(self.values)) < len(self.values) - 1
                    and self.values[-1] <= 0.5 * top)

    def rows(self):
        return [(float(r), float(v), float(s))
                for r, v, s in zip(self.radii, self.values, self.running_sup)]


def _check_radii(radii):
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise DomainError("radii must be positive and strictly ascending")
    return radii


def annulus_profile(surface, p, radii, quad=None, integrand=None):
    """|B|^p (or ``integrand``) integrated over each annulus r <= |X| <= 2r."""
    n = surface.n
    if not n <= p <= n + 2:
        raise DomainError(f"p={p} outside [n, n+2] = [{n}, {n + 2}]")
    radii = _check_radii(radii)
    quad = quad or QuadratureSpec()
    f = integrand or _curvature_power(p)
    vals = []
    for r in radii:
        region = Region.annulus(r, 2 * r)
        v = _region_integral(surface, f, region, tol=max(quad.tol, 1e-8))
        if not surface.discrete and len(surface.samples(region, Resolution(8, 2, 1))) == 0:
            warnings.warn(f"annulus [{r:g}, {2 * r:g}] misses {surface.describe()}",
                          AnnulusMissNotice, stacklevel=2)
        vals.append(v)
    return AnnulusCurvatureProfile(float(p), radii, np.array(vals))


# -- the quantity I_{X0,t0} --------------------------------------------------------

@dataclass(frozen=True)
class IResult:
    value: float
    rho: float
    rho_prime: float
    grid_size: int
    history: list
    chain_bound: float
    containment: bool
    specialized: bool
    params: dict = field(default_factory=dict)

    @property
    def chain_holds(self):
        return self.value <= self.chain_bound * (1 + self.params.get("tol", 1e-6))

    def record(self):
        return {"value": self.value, "rho": self.rho, "rho_prime": self.rho_prime,
                "grid_size": self.grid_size, "history": list(self.history),
                "chain_bound": self.chain_bound, "containment": self.containment,
                "specialized": self.specialized, **self.params}


def _pair_sup(G, rhos, alpha, diag):
    """sup over rho < rho' in ``rhos`` of 2 (rho'^2 - rho^2)^-alpha (G(1/rho) - G(1/rho'))."""
    Gi = G(1.0 / rhos)
    i, j = np.triu_indices(len(rhos), k=1)
    J = Gi[i] - Gi[j]
    vals = 2 * (rhos[j] ** 2 - rhos[i] ** 2) ** (-alpha) * J
    best = int(np.argmax(vals))
    out = (float(vals[best]), float(rhos[i[best]]), float(rhos[j[best]]))
    if diag is not None:
        d = diag(rhos)
        k = int(np.argmax(d))
        if d[k] > out[0]:
            out = (float(d[k]), float(rhos[k]), float(rhos[k]))
    return out


def eval_I(surface, X0, t0, p, grid=17, r_count=129, tol=1e-3, max_refinements=7,
           inner_tol=1e-6, quad=None):
    """I_{X0,t0} for the flow sqrt(-t) M, written through M itself.

    sup over sqrt(-t0) <= rho < rho' <= 2 of
    2 (rho'^2 - rho^2)^{-(n+2-p)/2} int_{1/rho'}^{1/rho} r^{p-n-3} A(r) dr
    with A(r) = int_{M cap B_2r(r X0)} |B|^p. A is tabulated on ``r_count``
    geometric radii and splined; the (rho, rho') grid doubles until the sup
    moves by less than ``tol`` (relative).
    """
    n = surface.n
    if not -1 <= t0 < 0:
        raise DomainError(f"t0 must lie in [-1, 0), got {t0}")
    if not n <= p <= n + 2:
        raise DomainError(f"p={p} outside [n, n+2]")
    X0 = np.asarray(X0, dtype=float)
    if X0.shape != (surface.ambient_dim,):
        raise DomainError(f"X0 must have shape ({surface.ambient_dim},)")
    require_shrinker(surface, quad)
    alpha = (n + 2 - p) / 2
    rho_min = math.sqrt(-t0)
    r_lo, r_hi = 0.5, 1.0 / rho_min
    f = _curvature_power(p)
    r_nodes = np.geomspace(r_lo, r_hi, r_count)
    A = np.array([_region_integral(surface, f, Region.ball(2 * r, center=r * X0), inner_tol)
                  for r in r_nodes])
    g = r_nodes ** (p - n - 3) * A
    spline = CubicSpline(r_nodes, g)
    G = spline.antiderivative()
    # only alpha = 1 has a nonzero limit on the diagonal rho' -> rho
    diag = (lambda rh: np.clip(spline(1.0 / rh), 0, None) / rh ** 3) if alpha == 1 else None
    history = []
    size = grid
    for _ in range(max_refinements + 1):
        val, rho, rho_p = _pair_sup(G, np.geomspace(rho_min, 2.0, size), alpha, diag)
        history.append(val)
        if len(history) > 1 and abs(val - history[-2]) <= tol * max(abs(val), 1e-300):
            break
        if val == 0 and len(history) > 1:
            break
        size = 2 * size - 1
    else:
        raise ConvergenceError(f"I_{{X0,t0}} sup did not stabilize within {tol}", history=history)
    norm_x0 = float(np.linalg.norm(X0))
    chain = _chain_bound(surface, p, norm_x0, r_lo, r_hi, inner_tol)
    params = {"p": p, "n": n, "t0": t0, "X0": X0.tolist(), "r_count": r_count, "tol": tol,
              "alpha": alpha}
    return IResult(val, rho, rho_p, size, history, chain,
                   containment=norm_x0 + 2 <= 2 * (norm_x0 - 2),
                   specialized=-0.25 < t0 < 0, params=params)


def _chain_bound(surface, p, norm_x0, r_lo, r_hi, tol, count=33):
    """(2/(2+n-p)) sup of |B|^p over annuli B_2s minus B_s for the s the balls reach.

    Balls B_2r(r X0) lie outside B_{(|X0|-2) r}, so s runs over
    [(|X0|-2) r_lo, (|X0|-2) r_hi].
    """
    n = surface.n
    if norm_x0 <= 2:
        return math.inf
    if p >= n + 2:
        return math.inf
    s = np.geomspace((norm_x0 - 2) * r_lo, (norm_x0 - 2) * r_hi, count)
    prof = annulus_profile(surface, p, s, QuadratureSpec(tol=tol))
    return 2.0 / (2 + n - p) * float(prof.values.max())


# -- the alpha supremum -------------------------------------------------------------

@dataclass(frozen=True)
class AlphaScan:
    alpha: float
    s: np.ndarray
    values: np.ndarray

    @property
    def sup(self):
        return float(self.values.max())

    @property
    def monotone(self):
        return bool(np.all(np.diff(self.values) >= -1e-15))


def _log_expm1(x):
    # log(e^x - 1) without overflow for large x
    return np.where(x > 30, x + np.log1p(-np.exp(-np.minimum(x, 700))), np.log(np.expm1(np.minimum(x, 30))))


def alpha_sup_scan(alpha, s_min=1 + 1e-6, s_max=None, count=2001, tol=1e-4):
    """(s^{2a} - 1) / (s^2 - 1)^a on a geometric grid of s >= 1.

    The default s_max = max(1e6, (10/tol)^{1/(2a)}) puts the tail gap
    s^{-2a} below tol/10, which small alpha needs.
    """
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if s_max is None:
        s_max = max(1e6, (10.0 / tol) ** (1.0 / (2 * alpha)))
    s = np.geomspace(s_min, s_max, count)
    L = np.log(s)
    vals = np.exp(_log_expm1(2 * alpha * L) - alpha * _log_expm1(2 * L))
    return AlphaScan(float(alpha), s, vals)


# -- curvature estimate ratio ----------------------------------------------------------

def _shell_width(surface, R):
    if not surface.discrete:
        return 1e-9 * R
    graph = getattr(surface, "graph", None)
    if graph is not None:
        return 0.75 * graph.h
    return 0.75 * surface.mesh_size


def sphere_sup_curvature(surface, R):
    """max |B| over samples within a thin shell around |X| = R."""
    w = _shell_width(surface, R)
    ss = surface.samples(Region.annulus(max(R - w, 0.0), R + w), Resolution(32, 4, 1))
    if len(ss) == 0:
        raise DomainError(f"{surface.describe()} does not meet the sphere |X| = {R:g}")
    return float(ss.B_norm.max())


@dataclass(frozen=True)
class CurvatureRatio:
    r: float
    t: float
    lhs: float
    rhs_core: float
    hypothesis_met: bool

    @property
    def ratio(self):
        if self.lhs == 0:
            return 0.0
        return self.lhs / self.rhs_core if self.rhs_core > 0 else math.inf


def curvature_estimate_ratio(surface, p, r, t, profile):
    """sup_{M cap dB_{(r+1)t}} |B| against (1/t)(sup_{s>=r} annulus |B|^p)^{1/p}."""
    if not t > 4:
        raise DomainError(f"t must exceed 4, got {t}")
    lhs = sphere_sup_curvature(surface, (r + 1) * t)
    core = profile.sup_from(r) ** (1.0 / p) / t
    return CurvatureRatio(float(r), float(t), lhs, core, profile.decaying)


@dataclass(frozen=True)
class RatioScan:
    entries: list

    @property
    def empirical_c(self):
        return max((e.ratio for e in self.entries), default=0.0)

    @property
    def hypothesis_met(self):
        return all(e.hypothesis_met for e in self.entries)


def curvature_ratio_scan(surface, p, rs, ts, profile):
    return RatioScan([curvature_estimate_ratio(surface, p, r, t, profile)
                      for r in rs for t in ts])


# -- volume growth of ends -------------------------------------------------------------

@dataclass(frozen=True)
class VolumeGrowthCurve:
    """V_s(r) = r^{s-n} area(E cap B_r) with the differential-inequality residual."""

    s: float
    p: float
    radii: np.ndarray
    values: np.ndarray
    areas: np.ndarray
    h_integrals: np.ndarray
    residuals: np.ndarray
    annulus_h: np.ndarray

    def log_slope(self, r_lo, r_hi):
        """Least-squares slope of log V_s against log r on [r_lo, r_hi]."""
        sel = (self.radii >= r_lo) & (self.radii <= r_hi)
        if np.count_nonzero(sel) < 2:
            raise DomainError("need at least two radii in the slope window")
        return float(np.polyfit(np.log(self.radii[sel]), np.log(self.values[sel]), 1)[0])

    def residual_ok(self, tol):
        return bool(np.all(self.residuals >= -tol))

    @property
    def hypothesis_met(self):
        """Whether annulus |H|^p integrals look bounded at large r.

        Judged by the log-log slope over the outer half of the radii; a
        slope above 0.25 reads as growth.
        """
        a = self.annulus_h
        if np.all(a <= 1e-300):
            return True
        half = len(a) // 2
        rr, aa = self.radii[half:], a[half:]
        if np.any(aa <= 0) or len(rr) < 2:
            return bool(aa[-1] <= aa.max())
        return float(np.polyfit(np.log(rr), np.log(aa), 1)[0]) <= 0.25


def volume_growth(surface, s, radii, p=2.0, quad=None):
    """Volume-growth curve of the end ``surface`` (its boundary inside radii[0])."""
    if not 0 <= s < 1:
        raise DomainError(f"shift s must lie in [0, 1), got {s}")
    if p < 2:
        raise DomainError("the mean-curvature exponent p must be >= 2")
    radii = _check_radii(radii)
    if len(radii) < 3:
        raise DomainError("need at least three radii for finite differences")
    if len(surface.boundary()) and surface.boundary_radius > radii[0]:
        raise DomainError(f"end boundary at radius {surface.boundary_radius:g} is not inside "
                          f"the smallest radius {radii[0]:g}")
    quad = quad or QuadratureSpec()
    tol = max(quad.tol, 1e-9)
    n = surface.n
    one = lambda ss: np.ones(len(ss))
    hp = _mean_curvature_power(p)
    areas, hints, ann = [], [], []
    for r in radii:
        a = _region_integral(surface, one, Region.ball(r), tol)
        if not a > 0:
            raise DomainError(f"end is empty inside radius {r:g}")
        areas.append(a)
        hints.append(_region_integral(surface, hp, Region.ball(r), tol))
        ann.append(_region_integral(surface, hp, Region.annulus(r, 2 * r), tol))
    areas, hints = np.array(areas), np.array(hints)
    V = radii ** (s - n) * areas
    # log V is close to affine in log r, so its spline derivative is accurate
    dV = V / radii * CubicSpline(np.log(radii), np.log(V)).derivative()(np.log(radii))
    ratio = np.where(areas > 0, (hints / areas) ** (2.0 / p), 0.0)
    res = dV - V / radii * (s - 2 * ratio)
    return VolumeGrowthCurve(float(s), float(p), radii, V, areas, hints, res, np.array(ann))
