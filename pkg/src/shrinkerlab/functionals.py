"""Gaussian-weighted functionals F_t, F'_t, G_t and Xi_t over a surface.

All integrals are (4 pi t)^(-n/2) * int f(X) exp(-|X|^2 / 4t) dmu truncated
to the ball of radius ``quad.rho_for(t, n)``. Analytic surfaces are resampled
at doubled resolution until the value settles to ``quad.tol``; discrete
surfaces use their vertex quadrature once.
"""

import math
import re
import warnings
import weakref
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, TruncationError
from .geom.base import QuadratureSpec, Region, Resolution
from .geom.ops import require_shrinker
from .geom.quadrature import geometric_grid

ORIGIN_CUTOFF = 1e-9


class OriginSampleWarning(UserWarning):
    """Samples too close to the origin were dropped from a Xi integral."""


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class HomogeneousTestFunction:
    """Degree-zero function phi(X) = f(X/|X|) with its xi-gradient and norms.

    ``func`` maps unit vectors (N, D) to values (N,); ``grad`` returns the
    partials d f / d xi_j as (N, D). ``norm0`` = sup|f| and ``norm1`` =
    sup |grad f| over the unit sphere.
    """

    name: str
    func: object
    grad: object
    norm0: float
    norm1: float

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r = np.linalg.norm(X, axis=1)
        return self.func(X / r[:, None])

    def ambient_gradient(self, X):
        """Euclidean gradient of X -> f(X/|X|)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r = np.linalg.norm(X, axis=1)
        xi = X / r[:, None]
        g = self.grad(xi)
        return (g - np.einsum("ij,ij->i", g, xi)[:, None] * xi) / r[:, None]

    def gradient_bound_gap(self, X):
        """max(|grad phi(X)| * |X| - norm1); nonpositive when the bound holds."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lhs = np.linalg.norm(self.ambient_gradient(X), axis=1) * np.linalg.norm(X, axis=1)
        return float(np.max(lhs - self.norm1))


def constant_function(value=1.0):
    v = float(value)
    return HomogeneousTestFunction(
        "const" if v == 1.0 else f"const({v:g})",
        lambda xi: np.full(len(xi), v), lambda xi: np.zeros_like(xi), abs(v), 0.0)


def coordinate_function(j):
    """xi_j (1-based index)."""
    i = int(j) - 1
    if i < 0:
        raise DomainError("coordinate index is 1-based")

    def grad(xi):
        g = np.zeros_like(xi)
        g[:, i] = 1.0
        return g
    return HomogeneousTestFunction(f"xi_{j}", lambda xi: xi[:, i], grad, 1.0, 1.0)


def quadratic_function(j):
    """xi_j^2 (1-based index)."""
    i = int(j) - 1
    if i < 0:
        raise DomainError("coordinate index is 1-based")

    def grad(xi):
        g = np.zeros_like(xi)
        g[:, i] = 2.0 * xi[:, i]
        return g
    return HomogeneousTestFunction(f"xi_{j}^2", lambda xi: xi[:, i] ** 2, grad, 1.0, 2.0)


def bundled_test_functions(dim):
    """Constant, every coordinate xi_j and every square xi_j^2 on S^(dim-1)."""
    out = [constant_function()]
    out += [coordinate_function(j) for j in range(1, dim + 1)]
    out += [quadratic_function(j) for j in range(1, dim + 1)]
    return out


_NAME = re.compile(r"^xi_(\d+)(\^2)?$")


def resolve_test_function(name):
    """Resolve a bundled test-function id such as ``const``, ``xi_3``, ``xi_1^2``."""
    if name == "const":
        return constant_function()
    m = _NAME.match(name)
    if not m or int(m.group(1)) < 1:
        raise DomainError(f"unknown test function {name!r}")
    j = int(m.group(1))
    return quadratic_function(j) if m.group(2) else coordinate_function(j)


def gaussian_kernel(X, t, n):
    """Phi_t(X) = (4 pi t)^(-n/2) exp(-|X|^2 / 4t)."""
    r2 = np.einsum("ij,ij->i", X, X)
    return (4 * math.pi * t) ** (-n / 2) * np.exp(-r2 / (4 * t))


# volume-growth constants are costly to measure and depend only on the surface
_C0_CACHE = weakref.WeakKeyDictionary()


def volume_growth_constant(surface, r_max=None, count=48):
    """Measured sup_r area(M cap B_r) / r^n over a geometric radius grid."""
    key = (r_max, count)
    cached = _C0_CACHE.get(surface, {})
    if key in cached:
        return cached[key]
    lo = max(surface.inner_radius, 1e-3)
    hi = r_max or max(4 * lo, 16.0)
    if math.isfinite(surface.extent):
        hi = min(hi, surface.extent) if surface.extent > lo else lo * 1.0001
    best = 0.0
    for r in geometric_grid(lo, max(hi, lo * 1.0001), count):
        area = surface.samples(Region.ball(r)).integrate()
        best = max(best, area / r ** surface.n)
    if not best > 0:
        raise DomainError(f"could not measure volume growth of {surface.describe()}")
    cached[key] = best
    _C0_CACHE[surface] = cached
    return best


def _check_tail(surface, t, rho, estimate, quad):
    """Compare the tail bound against the truncated Gaussian mass ``estimate``."""
    if surface.extent <= rho:
        return
    c0 = volume_growth_constant(surface, r_max=rho)
    n = surface.n
    tail = (4 * math.pi * t) ** (-n / 2) * c0 * rho ** n * math.exp(-rho * rho / (4 * t))
    if not tail < quad.tol * max(abs(estimate), quad.tol):
        suggested = quad.rho_for(t, n)
        while (4 * math.pi * t) ** (-n / 2) * c0 * suggested ** n * math.exp(
                -suggested ** 2 / (4 * t)) >= quad.tol * max(abs(estimate), quad.tol):
            suggested *= 1.25
        raise TruncationError(
            f"Gaussian tail beyond rho_max={rho:.4g} is {tail:.3e}, not below "
            f"tol x estimate; try rho_max >= {suggested:.4g}", suggested_rho_max=suggested)


def gaussian_integral(surface, integrand, t, quad=None, resolution=None):
    """Estimate of (4 pi t)^(-n/2) int integrand(samples) e^{-|X|^2/4t} dmu.

    ``integrand`` maps a SampleSet to per-sample values.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    quad = quad or QuadratureSpec()
    rho = quad.rho_for(t, surface.n)
    region = Region.ball(rho)

    def once(res):
        ss = surface.samples(region, res)
        if len(ss) == 0:
            return 0.0, 0.0, 0.0
        k = gaussian_kernel(ss.X, t, surface.n)
        f = np.asarray(integrand(ss), dtype=float)
        return ss.integrate(f * k), ss.integrate(np.abs(f) * k), ss.integrate(k)

    if surface.discrete:
        val, _, mass = once(None)
        _check_tail(surface, t, rho, mass, quad)
        return Estimate(val, math.nan)
    res = resolution or Resolution()
    val, scale, mass = once(res)
    history = [val]
    for _ in range(quad.max_depth):
        res = res.refined()
        new, scale, mass = once(res)
        history.append(new)
        err = abs(new - val)
        if err <= quad.tol * max(abs(new), scale, 1e-300):
            _check_tail(surface, t, rho, mass, quad)
            return Estimate(new, err)
        val = new
    raise ConvergenceError(f"Gaussian integral on {surface.describe()} at t={t} did not "
                           f"settle to rel tol {quad.tol}", history=history)


def boundary_integral(surface, integrand, t, quad=None, resolution=None):
    """(4 pi t)^(-n/2) int_{dM} integrand(bset) e^{-|X|^2/4t}, refined like the interior."""
    quad = quad or QuadratureSpec()

    def once(res):
        b = surface.boundary(res)
        if len(b) == 0:
            return 0.0
        return b.integrate(np.asarray(integrand(b)) * gaussian_kernel(b.X, t, surface.n))

    if surface.discrete:
        return Estimate(once(None), math.nan)
    res = resolution or Resolution()
    val = once(res)
    for _ in range(quad.max_depth):
        res = res.refined()
        new = once(res)
        if abs(new - val) <= quad.tol * max(abs(new), 1e-300):
            return Estimate(new, abs(new - val))
        val = new
    raise ConvergenceError(f"boundary integral on {surface.describe()} did not settle")


def eval_F(surface, t, quad=None):
    """Gaussian area F_t(M)."""
    return gaussian_integral(surface, lambda ss: np.ones(len(ss)), t, quad).value


def _normal_integral(surface, t, quad):
    return gaussian_integral(surface, lambda ss: np.einsum("ij,ij->i", ss.XN, ss.XN), t, quad)


def g_term(surface, t, quad=None):
    """Estimate of G_t(M) = -(1/4t)(1 - 1/t) int |X^N|^2 Phi_t dmu."""
    est = _normal_integral(surface, t, quad)
    c = -(1.0 / (4 * t)) * (1.0 - 1.0 / t)
    return Estimate(c * est.value, abs(c) * est.error)


def eval_G(surface, t, quad=None):
    return g_term(surface, t, quad).value


def boundary_term(surface, t, quad=None):
    """-(1/2t) int_{dM} <X^T, nu> Phi_t over the boundary with its own measure."""
    est = boundary_integral(surface, lambda b: np.einsum("ij,ij->i", b.XT, b.nu), t, quad)
    return Estimate(-est.value / (2 * t), est.error / (2 * t))


def eval_F_prime(surface, t, quad=None, shrinker_tol=None):
    """dF_t/dt from the boundary-corrected closed form valid on shrinkers."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    require_shrinker(surface, quad, shrinker_tol)
    return boundary_term(surface, t, quad).value + g_term(surface, t, quad).value


def _xi_integrand(phi):
    def f(ss):
        r = ss.radius
        out = np.zeros(len(ss))
        ok = r >= ORIGIN_CUTOFF
        if not np.all(ok):
            warnings.warn(f"dropped {np.count_nonzero(~ok)} samples within {ORIGIN_CUTOFF} "
                          "of the origin", OriginSampleWarning, stacklevel=4)
        out[ok] = phi.func(ss.X[ok] / r[ok, None])
        return out
    return f


def xi_estimate(surface, phi, t, quad=None):
    return gaussian_integral(surface, _xi_integrand(phi), t, quad)


def eval_Xi(surface, phi, t, quad=None):
    """Xi_t(M, phi) = (4 pi t)^(-n/2) int phi(X/|X|) e^{-|X|^2/4t} dmu."""
    return xi_estimate(surface, phi, t, quad).value


def region_integral(surface, integrand, region, quad=None, resolution=None):
    """Unweighted int_{M cap region} integrand dmu, refined like gaussian_integral."""
    quad = quad or QuadratureSpec()

    def once(res):
        ss = surface.samples(region, res)
        if len(ss) == 0:
            return 0.0, 0.0
        f = np.asarray(integrand(ss), dtype=float)
        return ss.integrate(f), ss.integrate(np.abs(f))

    if surface.discrete:
        return Estimate(once(None)[0], math.nan)
    res = resolution or Resolution()
    val, _ = once(res)
    history = [val]
    for _ in range(quad.max_depth):
        res = res.refined()
        new, scale = once(res)
        history.append(new)
        if abs(new - val) <= quad.tol * max(abs(new), scale, 1e-300):
            return Estimate(new, abs(new - val))
        val = new
    raise ConvergenceError(f"integral over {region} on {surface.describe()} did not settle",
                           history=history)


def xi_integrand(phi):
    """Per-sample phi(X/|X|), dropping samples at the origin."""
    return _xi_integrand(phi)
