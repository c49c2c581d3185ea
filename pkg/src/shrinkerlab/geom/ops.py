"""Surface-level operations: pointwise geometry, shrinker and drift residuals."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, PreconditionError
from .base import DriftResidual, QuadratureSpec, Region, Resolution
from .graphpatch import GraphPatch

# Sup-norm of H + X^N/2 accepted as "numerically a shrinker" for meshes and
# graph grids, whose curvature carries discretization error.
DISCRETE_SHRINKER_TOL = 5e-2


@dataclass(frozen=True)
class ShrinkerResidual:
    sup: float
    l2: float
    samples: int

    def within(self, tol):
        return self.sup <= tol


def sample_geometry(surface, location):
    return surface.sample_geometry(location)


def refine(surface):
    return surface.refine()


def _residual_samples(surface, quad, resolution):
    if surface.discrete:
        # boundary vertices carry one-sided fits
        return surface.samples().subset(_interior_mask(surface))
    rho = quad.rho_for(1.0, surface.n)
    return surface.samples(Region.ball(rho), resolution or Resolution())


def interior_samples(surface, quad=None, resolution=None):
    """Samples away from the boundary: interior vertices, or the Phi_1 ball for analytic kinds."""
    return _residual_samples(surface, quad or QuadratureSpec(), resolution)


def shrinker_residual(surface, quad=None, resolution=None):
    """Sup and L^2(Phi_1) norms of the field H + X^N/2."""
    quad = quad or QuadratureSpec()
    ss = _residual_samples(surface, quad, resolution)
    if len(ss) == 0:
        raise DomainError(f"{surface.describe()} has no samples to evaluate")
    field = np.linalg.norm(ss.H + 0.5 * ss.XN, axis=1)
    phi = (4 * math.pi) ** (-surface.n / 2) * np.exp(-ss.radius ** 2 / 4)
    return ShrinkerResidual(sup=float(field.max()),
                            l2=math.sqrt(max(ss.integrate(field ** 2 * phi), 0.0)),
                            samples=len(ss))


def default_shrinker_tol(surface, quad=None):
    quad = quad or QuadratureSpec()
    return DISCRETE_SHRINKER_TOL if surface.discrete else quad.shrinker_tol


def require_shrinker(surface, quad=None, tol=None):
    """Raise PreconditionError unless ``surface`` is a shrinker to ``tol``."""
    tol = default_shrinker_tol(surface, quad) if tol is None else tol
    res = shrinker_residual(surface, quad)
    if not res.within(tol):
        raise PreconditionError(
            f"{surface.describe()} is not a self-shrinker: sup|H + X^N/2| = {res.sup:.3e} "
            f"exceeds {tol:.1e}", measured=res.sup)
    return res


def _interior_mask(surface):
    if isinstance(surface, GraphPatch):
        g = surface.graph
        mask = np.zeros((g.n_r + 1, g.n_theta), dtype=bool)
        mask[1:-1] = True
        return mask.ravel()
    mask = np.ones(len(surface.vertices), dtype=bool)
    if surface.kind == "TriangleMesh":
        mask[surface.boundary_vertices] = False
    elif not surface.closed:
        mask[[0, -1]] = False
    return mask


def drift_identity_residual(surface, quad=None, tol=None, resolution=None):
    """The field Laplacian|X|^2 + |X^N|^2 - 2n at interior sample points.

    Analytic kinds use Laplacian|X|^2 = 2n + 2<X, H>; discrete kinds use the
    Laplace-Beltrami of an independent local fit of |X|^2. Boundary vertices
    are excluded since their fits are one-sided.
    """
    require_shrinker(surface, quad, tol)
    n = surface.n
    if surface.discrete:
        geo = surface.geometry
        mask = _interior_mask(surface)
        X, XN, lap = geo["X"][mask], geo["XN"][mask], geo["lap_r2"][mask]
    else:
        ss = _residual_samples(surface, quad or QuadratureSpec(), resolution)
        X, XN = ss.X, ss.XN
        lap = 2 * n + 2 * np.einsum("ij,ij->i", X, ss.H)
    values = lap + np.einsum("ij,ij->i", XN, XN) - 2 * n
    return DriftResidual(points=X, values=values, laplacian=lap)
