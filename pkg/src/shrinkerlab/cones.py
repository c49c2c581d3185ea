"""Blow-down diagnostics: rescalings t^{-1} M, radial mass profiles and
cross-section comparison across scales."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError
from .functionals import bundled_test_functions, region_integral, xi_estimate, xi_integrand
from .geom.base import QuadratureSpec, Region


class SkippedRadiusNotice(UserWarning):
    """A profile radius lies inside the surface's inner radius."""


def rescale(surface, t):
    """The surface t^{-1} M."""
    return surface.rescale(t)


@dataclass(frozen=True)
class RadialProfile:
    phi: str
    radii: np.ndarray
    values: np.ndarray
    skipped: tuple = ()

    @property
    def spread(self):
        if len(self.values) == 0:
            return 0.0
        return float(np.max(self.values) - np.min(self.values))


def radial_mass_profile(surface, phi, radii, quad=None):
    """r^{-n} int_{M cap B_r} phi dmu for each radius."""
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise DomainError("radii must be positive and strictly ascending")
    inner = surface.inner_radius
    keep = radii > inner
    skipped = tuple(float(r) for r in radii[~keep])
    if skipped:
        warnings.warn(f"skipped radii {skipped} below inner radius {inner:.6g}",
                      SkippedRadiusNotice, stacklevel=2)
    f = xi_integrand(phi)
    vals = [region_integral(surface, f, Region.ball(r), quad).value / r ** surface.n
            for r in radii[keep]]
    return RadialProfile(phi.name, radii[keep], np.array(vals), skipped)


def normalized_cross_section(surface, scale, r, count=256, seed=None):
    """Points of (t^{-1} M cap dB_r) / r on the unit sphere."""
    pts = surface.rescale(scale).cross_section(r, count)
    if len(pts) == 0:
        raise DomainError(f"cross-section of the surface at scale {scale} and radius {r} is empty")
    if seed is not None and len(pts) > count:
        rng = np.random.default_rng(seed)
        pts = pts[np.sort(rng.choice(len(pts), size=count, replace=False))]
    return pts / r


def _hausdorff(a, b):
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def cone_deviation(surface, scales, r=1.0, count=256, seed=None):
    """Symmetric max-min distance between normalized cross-sections at two scales."""
    ta, tb = scales
    if not (ta > 0 and tb > 0):
        raise DomainError("scales must be positive")
    a = normalized_cross_section(surface, ta, r, count, seed)
    b = normalized_cross_section(surface, tb, r, count, seed)
    return _hausdorff(a, b)


@dataclass(frozen=True)
class XiConsistency:
    scales: list
    values: list
    tail_start: int

    @property
    def spread(self):
        tail = self.values[self.tail_start:]
        return float(max(tail) - min(tail)) if tail else 0.0


def xi_limit_consistency(surface, phi, scales, quad=None, tail_fraction=0.5):
    """Xi_1(t^{-1} M, phi) along ascending scales; spread is taken over the tail."""
    scales = [float(s) for s in scales]
    if any(b <= a for a, b in zip(scales, scales[1:])) or not scales or scales[0] <= 0:
        raise DomainError("scales must be positive and strictly ascending")
    vals = [xi_estimate(surface.rescale(s), phi, 1.0, quad).value for s in scales]
    start = min(len(scales) - 1, int(math.floor(len(scales) * (1 - tail_fraction))))
    return XiConsistency(scales, vals, start)


@dataclass
class ConeReport:
    scales: list
    r: float
    cross_sections: dict = field(default_factory=dict)
    profiles: list = field(default_factory=list)
    deviations: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def deviation(self):
        return max(self.deviations) if self.deviations else math.nan

    @property
    def profile_constant(self):
        return all(p.spread < 1e-8 for p in self.profiles)


def cone_report(surface, scales, r=1.0, profile_radii=None, phis=None, quad=None, count=256,
                seed=None):
    """Cross-sections, profiles and consecutive-scale deviations for one surface."""
    quad = quad or QuadratureSpec()
    phis = phis or bundled_test_functions(surface.ambient_dim)
    rep = ConeReport([float(s) for s in scales], float(r))
    for s in rep.scales:
        try:
            rep.cross_sections[s] = normalized_cross_section(surface, s, r, count, seed)
        except DomainError as exc:
            rep.errors.append(str(exc))
    have = [s for s in rep.scales if s in rep.cross_sections]
    rep.deviations = [_hausdorff(rep.cross_sections[a], rep.cross_sections[b])
                      for a, b in zip(have, have[1:])]
    if profile_radii is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SkippedRadiusNotice)
            rep.profiles = [radial_mass_profile(surface, phi, profile_radii, quad)
                            for phi in phis]
    return rep
