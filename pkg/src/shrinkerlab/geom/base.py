"""Core geometry containers and the surface interface."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from .quadrature import fsum_dot


@dataclass(frozen=True)
class GeometrySample:
    """Pointwise geometric data at one point of a submanifold."""

    X: np.ndarray
    frame: np.ndarray  # (n, D) orthonormal rows spanning the tangent space
    XT: np.ndarray
    XN: np.ndarray
    H: np.ndarray
    B_norm: float
    weight: float

    @property
    def n(self):
        return self.frame.shape[0]


@dataclass(frozen=True)
class SampleSet:
    """Vectorized quadrature nodes carrying the same fields as GeometrySample.

    Integrals over the surface are ``fsum(values * weight)``.
    """

    X: np.ndarray
    XT: np.ndarray
    XN: np.ndarray
    H: np.ndarray
    B_norm: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return self.weight.shape[0]

    @property
    def radius(self):
        return np.linalg.norm(self.X, axis=1)

    def integrate(self, values=None):
        if values is None:
            return math.fsum(self.weight.tolist())
        return fsum_dot(values, self.weight)

    def subset(self, mask):
        return SampleSet(self.X[mask], self.XT[mask], self.XN[mask],
                         self.H[mask], self.B_norm[mask], self.weight[mask])


@dataclass(frozen=True)
class BoundarySet:
    """Quadrature nodes on the boundary with outward conormal ``nu``."""

    X: np.ndarray
    XT: np.ndarray
    nu: np.ndarray
    weight: np.ndarray

    def __len__(self):
        return self.weight.shape[0]

    def integrate(self, values=None):
        if values is None:
            return math.fsum(self.weight.tolist())
        return fsum_dot(values, self.weight)

    @property
    def measure(self):
        return self.integrate()


def empty_boundary(dim):
    z = np.zeros((0, dim))
    return BoundarySet(z, z, z, np.zeros(0))


@dataclass(frozen=True)
class Region:
    """The shell ``{X : r_inner <= |X - center| <= r_outer}``.

    ``center=None`` means the origin.
    """

    r_outer: float = math.inf
    r_inner: float = 0.0
    center: tuple = None

    def __post_init__(self):
        if self.r_inner < 0 or self.r_outer < self.r_inner:
            raise DomainError(f"bad region radii [{self.r_inner}, {self.r_outer}]")

    @classmethod
    def ball(cls, radius, center=None):
        return cls(r_outer=float(radius), center=None if center is None else tuple(center))

    @classmethod
    def annulus(cls, r_inner, r_outer):
        return cls(r_outer=float(r_outer), r_inner=float(r_inner))

    def center_array(self, dim):
        if self.center is None:
            return np.zeros(dim)
        c = np.asarray(self.center, dtype=float)
        if c.shape != (dim,):
            raise DomainError(f"region center has shape {c.shape}, expected ({dim},)")
        return c

    @property
    def origin_centered(self):
        return self.center is None or not np.any(self.center)

    def contains(self, X):
        c = self.center_array(X.shape[-1])
        d = np.linalg.norm(X - c, axis=-1)
        return (d >= self.r_inner) & (d <= self.r_outer)


def default_rho_max(t, n, tol):
    """Truncation radius making the Gaussian tail negligible at tolerance ``tol``."""
    return 2.0 * math.sqrt(t * (n + 2.0 * math.log(1.0 / tol)))


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation and accuracy settings for Gaussian-weighted integrals.

    ``shrinker_tol`` is the sup-norm threshold on ``H + X^N/2`` used wherever
    an operation needs the shrinker equation; discrete surfaces need a
    looser value than the analytic catalog.
    """

    rho_max: float = None
    tol: float = 1e-10
    max_depth: int = 6
    shrinker_tol: float = 1e-8

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("quadrature tolerance must be positive")
        if self.rho_max is not None and not self.rho_max > 0:
            raise DomainError("rho_max must be positive")

    def rho_for(self, t, n):
        if self.rho_max is not None:
            return float(self.rho_max)
        return default_rho_max(t, n, self.tol)


@dataclass(frozen=True)
class Resolution:
    """Node counts for analytic product quadrature; ``refined`` doubles them."""

    angular: int = 16
    radial: int = 16
    panels: int = 4

    def refined(self):
        return Resolution(self.angular * 2, self.radial * 2, self.panels)


def chart_geometry(p, dX, ddX, weight=1.0, n=None):
    """Geometry at the origin of a chart ``x -> X(x)`` with ``X(0) = p``.

    ``dX`` has shape (n, D) (tangent vectors X_i), ``ddX`` shape (n, n, D)
    (second derivatives X_ij). Works in any codimension. Returns a
    :class:`GeometrySample` plus the Christoffel symbols and metric used by
    the Laplace-Beltrami operator.
    """
    dX = np.atleast_2d(dX)
    g = dX @ dX.T
    ginv = np.linalg.inv(g)
    proj_T = dX.T @ ginv @ dX
    XT = proj_T @ p
    XN = p - XT
    B = ddX - np.einsum("ijd,de->ije", ddX, proj_T)
    H = np.einsum("ij,ijd->d", ginv, B)
    B2 = np.einsum("ik,jl,ijd,kld->", ginv, ginv, B, B)
    q, _ = np.linalg.qr(dX.T)
    frame = q.T
    sample = GeometrySample(X=np.asarray(p, dtype=float), frame=frame, XT=XT, XN=XN,
                            H=H, B_norm=math.sqrt(max(B2, 0.0)), weight=float(weight))
    return sample, g, ginv


def laplace_beltrami_at(g, ginv, dX, ddX, df, ddf):
    """Laplace-Beltrami of a scalar f at a chart origin, given its partials."""
    gamma = np.einsum("kl,ijd,ld->kij", ginv, ddX, dX)
    return float(np.einsum("ij,ij->", ginv, ddf - np.einsum("kij,k->ij", gamma, df)))


class Surface:
    """Interface shared by analytic and discrete immersed submanifolds.

    Subclasses set ``n`` (dimension), ``m`` (codimension), ``kind`` and
    ``boundary_radius`` (``None`` if the surface is complete without the
    exterior cut).
    """

    kind = "Surface"
    discrete = False
    n: int
    m: int
    boundary_radius = None

    @property
    def ambient_dim(self):
        return self.n + self.m

    def samples(self, region=None, resolution=None):
        raise NotImplementedError

    def boundary(self, resolution=None):
        raise NotImplementedError

    def sample_geometry(self, location):
        raise NotImplementedError

    def refine(self):
        raise NotImplementedError

    def rescale(self, t):
        raise NotImplementedError

    def cross_section(self, r, count=256):
        """Points of the surface on the sphere |X| = r (unnormalized)."""
        raise NotImplementedError

    @property
    def extent(self):
        """Largest |X| on the surface (``inf`` when unbounded)."""
        return math.inf

    @property
    def inner_radius(self):
        """Smallest |X| on the surface."""
        return 0.0

    def params(self):
        return {}

    def describe(self):
        items = ", ".join(f"{k}={_fmt(v)}" for k, v in self.params().items())
        return f"{self.kind}({items})"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


@dataclass(frozen=True)
class DriftResidual:
    """Field ``Laplacian|X|^2 + |X^N|^2 - 2n`` at sample points."""

    points: np.ndarray
    values: np.ndarray
    laplacian: np.ndarray = field(repr=False, default=None)

    @property
    def sup(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0
