"""Graphs of R^m-valued functions over a planar annulus {R <= |x| <= R_out}.

Values live on a polar tensor grid r_i = R + i*h, theta_j = 2*pi*j/N.
Radial derivatives are second-order finite differences (one-sided at the two
edge circles); angular derivatives are spectral, so functions that are
trigonometric polynomials of low degree in theta are differentiated exactly.
"""

import math
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import DomainError
from .base import BoundarySet, GeometrySample, SampleSet, Surface
from .discrete import _batched_chart


def radial_d1(u, h, axis=-2):
    u = np.moveaxis(u, axis, -1)
    d = np.empty_like(u)
    d[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (2 * h)
    d[..., 0] = (-3 * u[..., 0] + 4 * u[..., 1] - u[..., 2]) / (2 * h)
    d[..., -1] = (3 * u[..., -1] - 4 * u[..., -2] + u[..., -3]) / (2 * h)
    return np.moveaxis(d, -1, axis)


def radial_d2(u, h, axis=-2):
    u = np.moveaxis(u, axis, -1)
    d = np.empty_like(u)
    d[..., 1:-1] = (u[..., 2:] - 2 * u[..., 1:-1] + u[..., :-2]) / h ** 2
    d[..., 0] = (2 * u[..., 0] - 5 * u[..., 1] + 4 * u[..., 2] - u[..., 3]) / h ** 2
    d[..., -1] = (2 * u[..., -1] - 5 * u[..., -2] + 4 * u[..., -3] - u[..., -4]) / h ** 2
    return np.moveaxis(d, -1, axis)


def angular_derivative(u, order=1):
    """Spectral derivative along the last axis (periodic, length N)."""
    N = u.shape[-1]
    k = np.fft.rfftfreq(N, 1.0 / N)
    if order % 2 == 1 and N % 2 == 0:
        k = k.copy()
        k[-1] = 0.0
    return np.fft.irfft(np.fft.rfft(u, axis=-1) * (1j * k) ** order, n=N, axis=-1)


def _spectral_resample(u, n_new):
    N = u.shape[-1]
    c = np.fft.rfft(u, axis=-1)
    out = np.zeros(u.shape[:-1] + (n_new // 2 + 1,), dtype=complex)
    keep = min(c.shape[-1], out.shape[-1])
    out[..., :keep] = c[..., :keep]
    if N % 2 == 0 and keep == N // 2 + 1 and n_new > N:
        out[..., keep - 1] *= 0.5
    return np.fft.irfft(out, n=n_new, axis=-1) * (n_new / N)


class GraphFunction:
    """Components u^alpha on the polar grid of an annulus in R^2.

    ``values`` has shape (m, n_r + 1, n_theta).
    """

    n = 2

    def __init__(self, r_inner, r_outer, values):
        vals = np.array(values, dtype=float)
        if vals.ndim == 2:
            vals = vals[None]
        if not 0 < r_inner < r_outer:
            raise DomainError(f"annulus radii must satisfy 0 < R < R_out, got {r_inner}, {r_outer}")
        if vals.ndim != 3 or vals.shape[1] < 5 or vals.shape[2] < 4:
            raise DomainError("values must have shape (m, n_r + 1 >= 5, n_theta >= 4)")
        if not np.all(np.isfinite(vals)):
            raise DomainError("graph values must be finite")
        self.r_inner, self.r_outer = float(r_inner), float(r_outer)
        self.values = vals
        self.values.setflags(write=False)

    @classmethod
    def from_callable(cls, func, r_inner, r_outer, n_r, n_theta, m=1):
        """Sample ``func(x) -> (..., m)`` (or scalar when m=1) on the grid."""
        g = cls(r_inner, r_outer, np.zeros((m, n_r + 1, n_theta)))
        vals = np.asarray(func(g.nodes), dtype=float)
        if vals.ndim == 2:
            vals = vals[..., None]
        return cls(r_inner, r_outer, np.moveaxis(vals, -1, 0))

    @classmethod
    def zeros(cls, r_inner, r_outer, n_r, n_theta, m=1):
        return cls(r_inner, r_outer, np.zeros((m, n_r + 1, n_theta)))

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def n_r(self):
        return self.values.shape[1] - 1

    @property
    def n_theta(self):
        return self.values.shape[2]

    @property
    def h(self):
        return (self.r_outer - self.r_inner) / self.n_r

    @cached_property
    def r(self):
        return np.linspace(self.r_inner, self.r_outer, self.n_r + 1)

    @cached_property
    def theta(self):
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta

    @cached_property
    def nodes(self):
        r, th = self.r[:, None], self.theta[None, :]
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    def with_values(self, values):
        return GraphFunction(self.r_inner, self.r_outer, values)

    @cached_property
    def polar_derivatives(self):
        u, h = self.values, self.h
        return {
            "r": radial_d1(u, h), "rr": radial_d2(u, h),
            "t": angular_derivative(u, 1), "tt": angular_derivative(u, 2),
            "rt": radial_d1(angular_derivative(u, 1), h),
        }

    @cached_property
    def derivatives(self):
        """Cartesian (Du, D2u) with shapes (m, Nr+1, Nt, 2) and (m, Nr+1, Nt, 2, 2)."""
        p = self.polar_derivatives
        r = self.r[:, None]
        c, s = np.cos(self.theta)[None, :], np.sin(self.theta)[None, :]
        ur, ut, urr, utt, urt = p["r"], p["t"], p["rr"], p["tt"], p["rt"]
        ux = c * ur - s / r * ut
        uy = s * ur + c / r * ut
        uxx = (c * c * urr - 2 * c * s / r * urt + s * s / r * ur
               + s * s / r ** 2 * utt + 2 * c * s / r ** 2 * ut)
        uyy = (s * s * urr + 2 * c * s / r * urt + c * c / r * ur
               + c * c / r ** 2 * utt - 2 * c * s / r ** 2 * ut)
        uxy = (c * s * urr + (c * c - s * s) / r * urt - c * s / r * ur
               - c * s / r ** 2 * utt - (c * c - s * s) / r ** 2 * ut)
        Du = np.stack([ux, uy], axis=-1)
        D2u = np.stack([np.stack([uxx, uxy], -1), np.stack([uxy, uyy], -1)], -2)
        return Du, D2u

    @cached_property
    def metric(self):
        Du, _ = self.derivatives
        return np.eye(2) + np.einsum("anti,antj->ntij", Du, Du)

    @cached_property
    def metric_inverse(self):
        g = self.metric
        det = np.linalg.det(g)
        bad = np.argwhere(~(det > 1e-14))
        if bad.size:
            i, j = bad[0]
            raise DomainError(f"singular induced metric at node (r={self.r[i]:.6g}, "
                              f"theta index {j})")
        return np.linalg.inv(g)

    def radial_spline(self, values=None):
        """Not-a-knot cubic spline in r of every (component, theta) column."""
        v = self.values if values is None else values
        return CubicSpline(self.r, v, axis=1)

    def refine(self):
        """Halve the radial spacing and double the angular count."""
        r_new = np.linspace(self.r_inner, self.r_outer, 2 * self.n_r + 1)
        vals = self.radial_spline()(r_new)
        vals[:, ::2] = self.values
        return GraphFunction(self.r_inner, self.r_outer,
                             _spectral_resample(vals, 2 * self.n_theta))

    def restrict(self, r_outer):
        """Sub-annulus [R, r_outer]; ``r_outer`` must be a grid radius."""
        i = int(round((r_outer - self.r_inner) / self.h))
        if not math.isclose(self.r[i], r_outer, rel_tol=0, abs_tol=1e-9 * self.h):
            raise DomainError(f"{r_outer} is not a grid radius")
        return GraphFunction(self.r_inner, float(self.r[i]), self.values[:, :i + 1])


class GraphPatch(Surface):
    """The surface {(x, u(x))} in R^{2+m} over the annulus of a GraphFunction."""

    kind = "GraphPatch"
    discrete = True

    def __init__(self, graph, name=None):
        if not isinstance(graph, GraphFunction):
            raise DomainError("GraphPatch needs a GraphFunction")
        self.graph, self.name = graph, name
        self.n, self.m = 2, graph.m

    def params(self):
        g = self.graph
        return {"R": g.r_inner, "R_out": g.r_outer, "n_r": g.n_r, "n_theta": g.n_theta,
                "m": g.m}

    @cached_property
    def positions(self):
        g = self.graph
        return np.concatenate([g.nodes, np.moveaxis(g.values, 0, -1)], axis=-1)

    @property
    def extent(self):
        return float(np.max(np.linalg.norm(self.positions, axis=-1)))

    @property
    def inner_radius(self):
        return float(np.min(np.linalg.norm(self.positions, axis=-1)))

    @cached_property
    def geometry(self):
        g = self.graph
        Du, D2u = g.derivatives
        D = 2 + g.m
        P = self.positions.reshape(-1, D)
        dX = np.zeros(P.shape[:1] + (2, D))
        dX[:, 0, 0] = dX[:, 1, 1] = 1.0
        dX[:, :, 2:] = np.moveaxis(Du, 0, -1).reshape(-1, 2, g.m)
        ddX = np.zeros(P.shape[:1] + (2, 2, D))
        ddX[..., 2:] = np.moveaxis(D2u, 0, -1).reshape(-1, 2, 2, g.m)
        return _batched_chart(P, dX, ddX)

    @cached_property
    def node_weights(self):
        g = self.graph
        wr = np.full(g.n_r + 1, g.h)
        wr[[0, -1]] = 0.5 * g.h
        area = np.sqrt(np.linalg.det(g.metric))
        return (wr * g.r)[:, None] * (2 * np.pi / g.n_theta) * area

    def samples(self, region=None, resolution=None):
        geo = self.geometry
        ss = SampleSet(geo["X"], geo["XT"], geo["XN"], geo["H"], geo["B_norm"],
                       self.node_weights.ravel())
        return ss if region is None else ss.subset(region.contains(geo["X"]))

    def sample_geometry(self, location):
        g = self.graph
        try:
            i, j = (int(v) for v in location)
        except (TypeError, ValueError):
            raise DomainError("GraphPatch locations are (radial, angular) index pairs") from None
        if not (0 <= i <= g.n_r and 0 <= j < g.n_theta):
            raise DomainError(f"grid index {(i, j)} outside {g.n_r + 1}x{g.n_theta}")
        k = i * g.n_theta + j
        geo = self.geometry
        q, _ = np.linalg.qr(geo["dX"][k].T)
        return GeometrySample(X=geo["X"][k], frame=q.T, XT=geo["XT"][k], XN=geo["XN"][k],
                              H=geo["H"][k], B_norm=float(geo["B_norm"][k]),
                              weight=float(self.node_weights[i, j]))

    def boundary(self, resolution=None):
        """Both edge circles; conormals point away from the annulus."""
        g = self.graph
        D = 2 + g.m
        geo = self.geometry
        dX = geo["dX"].reshape(g.n_r + 1, g.n_theta, 2, D)
        c, s = np.cos(g.theta), np.sin(g.theta)
        pts, xts, nus, wts = [], [], [], []
        for i, sign in ((0, -1.0), (g.n_r, 1.0)):
            Xr = c[:, None] * dX[i, :, 0] + s[:, None] * dX[i, :, 1]
            Xt = g.r[i] * (-s[:, None] * dX[i, :, 0] + c[:, None] * dX[i, :, 1])
            tl = np.linalg.norm(Xt, axis=1)
            et = Xt / tl[:, None]
            nu = Xr - np.einsum("ij,ij->i", Xr, et)[:, None] * et
            nu = sign * nu / np.linalg.norm(nu, axis=1)[:, None]
            pts.append(self.positions[i])
            xts.append(geo["XT"].reshape(g.n_r + 1, g.n_theta, D)[i])
            nus.append(nu)
            wts.append(tl * 2 * np.pi / g.n_theta)
        return BoundarySet(np.vstack(pts), np.vstack(xts), np.vstack(nus), np.concatenate(wts))

    def cross_section(self, r, count=None):
        g = self.graph
        radius = np.linalg.norm(self.positions, axis=-1)
        vspline = g.radial_spline()
        out = []
        for j in range(g.n_theta):
            col = CubicSpline(g.r, radius[:, j])
            for rx in col.solve(r, extrapolate=False):
                u = vspline(rx)[:, j]
                out.append(np.concatenate([[rx * math.cos(g.theta[j]),
                                            rx * math.sin(g.theta[j])], u]))
        return np.array(out).reshape(-1, 2 + g.m)

    def refine(self):
        return GraphPatch(self.graph.refine(), name=self.name)

    def rescale(self, t):
        if not t > 0:
            raise DomainError("scale must be positive")
        g = self.graph
        return GraphPatch(GraphFunction(g.r_inner / t, g.r_outer / t, g.values / t),
                          name=self.name)
