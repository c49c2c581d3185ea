"""Exact catalog surfaces: planes, round spheres and round cylinders.

All three are products ``S^k(rho) x R^j`` embedded isometrically, with the
plane as the degenerate case without a sphere factor. Integrals over
origin-centred shells are cut exactly in the flat radial coordinate, so the
radial Gauss-Legendre rule sees a smooth integrand.
"""

import math
import warnings

import numpy as np
from scipy.linalg import null_space

from ..errors import DomainError
from .base import (BoundarySet, GeometrySample, Region, Resolution, SampleSet, Surface,
                   empty_boundary)
from .quadrature import gauss_legendre, sphere_rule


class RefinementNotice(UserWarning):
    """Emitted when refinement is requested on an analytic surface."""


def _orthonormal(basis, dim, name):
    Q = np.asarray(basis, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != dim:
        raise DomainError(f"{name} must be a ({dim}, r) array of column vectors")
    gram = Q.T @ Q
    if gram.size and np.max(np.abs(gram - np.eye(Q.shape[1]))) > 1e-12:
        raise DomainError(f"{name} is not orthonormal to 1e-12")
    return Q


def _shell_intervals(b, d, s_lo, r_in, r_out):
    """Sets {s >= s_lo : r_in^2 <= s^2 + 2bs + d <= r_out^2} as two intervals.

    Returns arrays (a1, b1, a2, b2); empty intervals have a >= b.
    """
    disc_out = b * b - d + r_out * r_out
    root_out = np.sqrt(np.clip(disc_out, 0.0, None))
    lo_out = np.where(disc_out >= 0, -b - root_out, np.inf)
    hi_out = np.where(disc_out >= 0, -b + root_out, -np.inf)
    lo = np.maximum(lo_out, s_lo)
    hi = hi_out
    if r_in > 0:
        disc_in = b * b - d + r_in * r_in
        root_in = np.sqrt(np.clip(disc_in, 0.0, None))
        has_hole = disc_in > 0
        hole_lo = np.where(has_hole, -b - root_in, np.inf)
        hole_hi = np.where(has_hole, -b + root_in, -np.inf)
        a1, b1 = lo, np.minimum(hi, hole_lo)
        a2, b2 = np.maximum(lo, hole_hi), hi
        # without a hole the second piece duplicates the first
        a2 = np.where(has_hole, a2, np.inf)
        b2 = np.where(has_hole, b2, -np.inf)
    else:
        a1, b1 = lo, hi
        a2 = np.full_like(lo, np.inf)
        b2 = np.full_like(lo, -np.inf)
    return a1, b1, a2, b2


class ProductSurface(Surface):
    """``rho * S^k x R^j`` inside ``R^{n+m}``, optionally cut to ``|X| >= R``.

    ``k=None`` gives the plane ``R^n``. ``sphere_basis`` (D x (k+1)) and
    ``flat_basis`` (D x j) are orthonormal column frames with orthogonal spans.
    """

    def __init__(self, n, m, k, rho, sphere_basis=None, flat_basis=None,
                 boundary_radius=None):
        n, m = int(n), int(m)
        if n < 1 or m < 1:
            raise DomainError("dimension and codimension must be >= 1")
        D = n + m
        j = n if k is None else n - int(k)
        if k is not None and not (0 <= int(k) <= n):
            raise DomainError(f"sphere factor dimension {k} not in [0, {n}]")
        if k is not None and k + 1 + j > D:
            raise DomainError("sphere factor and axis do not fit in the ambient space")
        if k is not None and not rho > 0:
            raise DomainError("radius must be strictly positive")
        self.n, self.m, self.k, self.j = n, m, (None if k is None else int(k)), j
        self.rho = 0.0 if k is None else float(rho)
        eye = np.eye(D)
        if k is None:
            self.Qs = np.zeros((D, 0))
            self.Qf = _orthonormal(eye[:, :n] if flat_basis is None else flat_basis, D,
                                   "plane basis")
        else:
            self.Qs = _orthonormal(eye[:, :k + 1] if sphere_basis is None else sphere_basis,
                                   D, "sphere basis")
            default_flat = eye[:, k + 1:k + 1 + j]
            self.Qf = _orthonormal(default_flat if flat_basis is None else flat_basis, D,
                                   "axis basis")
            if self.Qs.shape[1] != k + 1:
                raise DomainError("sphere basis needs k+1 columns")
            if j and np.max(np.abs(self.Qs.T @ self.Qf)) > 1e-12:
                raise DomainError("sphere and axis bases must be orthogonal")
        if self.Qf.shape[1] != j:
            raise DomainError(f"flat basis needs {j} columns")
        if boundary_radius is not None:
            boundary_radius = float(boundary_radius)
            if not boundary_radius > 0:
                raise DomainError("boundary radius must be positive")
            if j == 0 and boundary_radius > self.rho:
                raise DomainError("exterior cut removes the whole sphere")
        self.boundary_radius = boundary_radius
        self.s_lo = 0.0
        if boundary_radius is not None and boundary_radius > self.rho:
            self.s_lo = math.sqrt(boundary_radius ** 2 - self.rho ** 2)

    # -- bookkeeping -------------------------------------------------------
    @property
    def has_boundary(self):
        return self.j > 0 and self.s_lo > 0

    @property
    def extent(self):
        return math.inf if self.j > 0 else self.rho

    @property
    def inner_radius(self):
        return math.hypot(self.rho, self.s_lo)

    @property
    def exact_shrinker(self):
        if self.k is None:
            return True
        return abs(self.rho - math.sqrt(2.0 * self.k)) <= 1e-12 * self.rho

    @property
    def is_cone(self):
        return self.k is None and self.boundary_radius is None

    def params(self):
        out = {"n": self.n, "m": self.m}
        if self.k is not None:
            out["k"] = self.k
            out["rho"] = self.rho
        if self.boundary_radius is not None:
            out["boundary_radius"] = self.boundary_radius
        return out

    def _clone(self, **changes):
        kw = dict(n=self.n, m=self.m, k=self.k, rho=self.rho, sphere_basis=self.Qs,
                  flat_basis=self.Qf, boundary_radius=self.boundary_radius)
        kw.update(changes)
        if kw["k"] is None:
            kw["sphere_basis"] = None
        return ProductSurface(**kw)

    # -- pointwise geometry ------------------------------------------------
    def _sphere_nodes(self, order):
        if self.k is None:
            return np.zeros((1, 0)), np.ones(1)
        pts, w = sphere_rule(self.k, order)
        return pts, w * self.rho ** self.k

    def _geometry_arrays(self, omega, s_xi):
        """omega: (N, k+1) unit vectors; s_xi: (N, j) flat coordinates."""
        XN = self.rho * omega @ self.Qs.T if self.k is not None else np.zeros(
            (len(s_xi), self.ambient_dim))
        XT = s_xi @ self.Qf.T
        if self.k is None:
            H = np.zeros_like(XN)
            B = np.zeros(len(s_xi))
        else:
            H = -(self.k / self.rho) * (omega @ self.Qs.T)
            B = np.full(len(s_xi), math.sqrt(self.k) / self.rho)
        return XT + XN, XT, XN, H, B

    def samples(self, region=None, resolution=None):
        region = region or Region()
        res = resolution or Resolution()
        D = self.ambient_dim
        c = region.center_array(D)
        om, w_om = self._sphere_nodes(res.angular)
        if self.j == 0:
            X, XT, XN, H, B = self._geometry_arrays(om, np.zeros((len(om), 0)))
            mask = region.contains(X)
            return SampleSet(X[mask], XT[mask], XN[mask], H[mask], B[mask], w_om[mask])
        if not math.isfinite(region.r_outer):
            raise DomainError("an unbounded surface needs a finite outer region radius")
        xi, w_xi = sphere_rule(self.j - 1, res.angular)
        P = len(w_om) * len(w_xi)
        om_p = np.repeat(om, len(w_xi), axis=0)
        xi_p = np.tile(xi, (len(w_om), 1))
        w_p = np.repeat(w_om, len(w_xi)) * np.tile(w_xi, len(w_om))
        base = (self.rho * om_p @ self.Qs.T if self.k is not None else np.zeros((P, D))) - c
        direc = xi_p @ self.Qf.T
        b = np.einsum("ij,ij->i", direc, base)
        d = np.einsum("ij,ij->i", base, base)
        a1, b1, a2, b2 = _shell_intervals(b, d, self.s_lo, region.r_inner, region.r_outer)
        x, wx = gauss_legendre(-1.0, 1.0, res.radial, res.panels)
        chunks = []
        for lo, hi in ((a1, b1), (a2, b2)):
            ok = np.isfinite(lo) & np.isfinite(hi) & (hi > lo)
            if not np.any(ok):
                continue
            lo, hi = lo[ok], hi[ok]
            half = 0.5 * (hi - lo)
            s = (0.5 * (hi + lo))[:, None] + half[:, None] * x[None, :]
            ws = half[:, None] * wx[None, :] * s ** (self.j - 1) * w_p[ok][:, None]
            idx = np.repeat(np.nonzero(ok)[0], len(x))
            chunks.append((idx, s.ravel(), ws.ravel()))
        if not chunks:
            z = np.zeros((0, D))
            return SampleSet(z, z, z, z, np.zeros(0), np.zeros(0))
        idx = np.concatenate([ch[0] for ch in chunks])
        s = np.concatenate([ch[1] for ch in chunks])
        ws = np.concatenate([ch[2] for ch in chunks])
        X, XT, XN, H, B = self._geometry_arrays(om_p[idx], s[:, None] * xi_p[idx])
        return SampleSet(X, XT, XN, H, B, ws)

    def boundary(self, resolution=None):
        if not self.has_boundary:
            return empty_boundary(self.ambient_dim)
        res = resolution or Resolution()
        om, w_om = self._sphere_nodes(res.angular)
        xi, w_xi = sphere_rule(self.j - 1, res.angular)
        om_p = np.repeat(om, len(w_xi), axis=0)
        xi_p = np.tile(xi, (len(w_om), 1))
        w = np.repeat(w_om, len(w_xi)) * np.tile(w_xi, len(w_om)) * self.s_lo ** (self.j - 1)
        X, XT, _, _, _ = self._geometry_arrays(om_p, self.s_lo * xi_p)
        nu = -(xi_p @ self.Qf.T)
        return BoundarySet(X, XT, nu, w)

    def sample_geometry(self, location):
        X = np.asarray(location, dtype=float)
        D = self.ambient_dim
        if X.shape != (D,):
            raise DomainError(f"location must be a point of R^{D}")
        y = self.Qf.T @ X
        w = self.Qs.T @ X
        resid = X - self.Qf @ y - self.Qs @ w
        scale = max(1.0, float(np.linalg.norm(X)))
        if np.linalg.norm(resid) > 1e-9 * scale:
            raise DomainError(f"point {X} is off the surface (distance {np.linalg.norm(resid):.3e})")
        if self.k is not None and abs(np.linalg.norm(w) - self.rho) > 1e-9 * scale:
            raise DomainError(f"point {X} is off the round factor of radius {self.rho}")
        if self.boundary_radius is not None and np.linalg.norm(X) < self.boundary_radius - 1e-9 * scale:
            raise DomainError(f"point {X} lies inside the removed ball")
        if self.k is None:
            omega = np.zeros((1, 0))
            tangent_s = np.zeros((0, D))
        else:
            omega = (w / np.linalg.norm(w))[None, :]
            ns = null_space(omega)  # (k+1, k)
            tangent_s = (self.Qs @ ns).T
        X_, XT, XN, H, B = self._geometry_arrays(omega, y[None, :])
        frame = np.vstack([tangent_s, self.Qf.T])
        return GeometrySample(X=X, frame=frame, XT=XT[0], XN=XN[0], H=H[0],
                              B_norm=float(B[0]), weight=float("nan"))

    def cross_section(self, r, count=256):
        r = float(r)
        D = self.ambient_dim
        if self.j == 0:
            if abs(r - self.rho) > 1e-12 * max(1.0, r):
                return np.zeros((0, D))
            pts, _ = self._sphere_nodes(count)
            return self.rho * pts @ self.Qs.T
        if r < self.rho:
            return np.zeros((0, D))
        s = math.sqrt(max(r * r - self.rho ** 2, 0.0))
        if s < self.s_lo - 1e-12 * max(1.0, r):
            return np.zeros((0, D))
        om, _ = self._sphere_nodes(max(4, count))
        xi, _ = sphere_rule(self.j - 1, max(4, count))
        om_p = np.repeat(om, len(xi), axis=0)
        xi_p = np.tile(xi, (len(om), 1))
        X, _, _, _, _ = self._geometry_arrays(om_p, s * xi_p)
        return X

    # -- transformations ---------------------------------------------------
    def rescale(self, t):
        if not t > 0:
            raise DomainError("scale must be positive")
        R = None if self.boundary_radius is None else self.boundary_radius / t
        if self.k is None:
            return self._clone(boundary_radius=R)
        return self._clone(rho=self.rho / t, boundary_radius=R)

    def refine(self):
        warnings.warn(f"{self.kind} is analytic; refine() returns it unchanged",
                      RefinementNotice, stacklevel=2)
        return self


class Plane(ProductSurface):
    kind = "Plane"

    def __init__(self, n=2, m=1, basis=None, boundary_radius=None):
        super().__init__(n, m, None, 0.0, flat_basis=basis, boundary_radius=boundary_radius)

    def _clone(self, **changes):
        return Plane(self.n, self.m, basis=self.Qf,
                     boundary_radius=changes.get("boundary_radius", self.boundary_radius))


class RoundSphere(ProductSurface):
    kind = "RoundSphere"

    def __init__(self, n=2, rho=2.0, m=1, basis=None):
        super().__init__(n, m, n, rho, sphere_basis=basis)

    def _clone(self, **changes):
        return RoundSphere(self.n, changes.get("rho", self.rho), self.m, basis=self.Qs)


class RoundCylinder(ProductSurface):
    kind = "RoundCylinder"

    def __init__(self, k=1, n=2, rho=math.sqrt(2.0), m=1, sphere_basis=None, axis_basis=None,
                 boundary_radius=None):
        if not 1 <= int(k) < int(n):
            raise DomainError("cylinder sphere factor must satisfy 1 <= k < n")
        super().__init__(n, m, k, rho, sphere_basis=sphere_basis, flat_basis=axis_basis,
                         boundary_radius=boundary_radius)

    def _clone(self, **changes):
        return RoundCylinder(self.k, self.n, changes.get("rho", self.rho), self.m,
                             sphere_basis=self.Qs, axis_basis=self.Qf,
                             boundary_radius=changes.get("boundary_radius",
                                                         self.boundary_radius))
