"""Two-sided checks of the Gaussian-area monotonicity identity and of the
derivative bound for Xi_t with explicit constants."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .functionals import (boundary_term, constant_function, eval_F, g_term,
                          gaussian_integral, volume_growth_constant, xi_estimate)
from .geom.base import QuadratureSpec
from .geom.ops import require_shrinker
from .geom.quadrature import adaptive_simpson

T_GUARD = 0.05
C0_RADIUS = 1e3


@dataclass(frozen=True)
class MonotonicityLedger:
    """Both sides of F_{t2} - F_{t1} = boundary + normal, with error budgets."""

    t1: float
    t2: float
    F1: float
    F2: float
    lhs: float
    boundary: float
    normal: float
    errors: dict = field(default_factory=dict)

    @property
    def rhs(self):
        return self.boundary + self.normal

    @property
    def defect(self):
        return self.lhs - self.rhs

    @property
    def budget(self):
        """Combined error estimate; NaN when a term has no estimate (discrete input)."""
        return math.fsum(self.errors.values())

    def within(self, tol=None):
        limit = self.budget if tol is None else tol
        return abs(self.defect) <= limit

    def rows(self):
        return [
            ("F_t1", self.F1, self.errors.get("F1", math.nan)),
            ("F_t2", self.F2, self.errors.get("F2", math.nan)),
            ("lhs", self.lhs, self.errors.get("F1", 0.0) + self.errors.get("F2", 0.0)),
            ("boundary", self.boundary, self.errors.get("boundary", math.nan)),
            ("normal", self.normal, self.errors.get("normal", math.nan)),
            ("defect", self.defect, self.budget),
        ]


def _time_integral(fn, t1, t2, tol):
    """Adaptive Simpson of an Estimate-valued function of s; returns (value, error)."""
    qerr = []

    def f(s):
        est = fn(s)
        if math.isfinite(est.error):
            qerr.append(est.error)
        return est.value

    res = adaptive_simpson(f, t1, t2, tol=tol)
    # quadrature errors of individual evaluations propagate at most by (t2-t1)*max
    prop = (t2 - t1) * max(qerr, default=0.0)
    return res.value, res.error + prop


def verify_monotonicity(surface, t1, t2, quad=None, shrinker_tol=None):
    """Evaluate both sides of the monotonicity identity between t1 and t2."""
    quad = quad or QuadratureSpec()
    if not 0 < t1 <= t2 < math.inf:
        raise DomainError(f"need 0 < t1 <= t2 < inf, got {t1}, {t2}")
    require_shrinker(surface, quad, shrinker_tol)
    bset = surface.boundary()
    if len(bset) and not math.isfinite(bset.measure):
        raise DomainError("boundary has infinite measure")
    if t1 == t2:
        zero = {"F1": 0.0, "F2": 0.0, "boundary": 0.0, "normal": 0.0}
        F = eval_F(surface, t1, quad)
        return MonotonicityLedger(t1, t2, F, F, 0.0, 0.0, 0.0, zero)
    one = lambda ss: np.ones(len(ss))
    F1 = gaussian_integral(surface, one, t1, quad)
    F2 = gaussian_integral(surface, one, t2, quad)
    if len(bset):
        b_val, b_err = _time_integral(lambda s: boundary_term(surface, s, quad), t1, t2,
                                      quad.tol)
    else:
        b_val, b_err = 0.0, 0.0
    n_val, n_err = _time_integral(lambda s: g_term(surface, s, quad), t1, t2, quad.tol)
    errors = {"F1": F1.error, "F2": F2.error, "boundary": b_err, "normal": n_err}
    if not surface.discrete:
        # floor for roundoff in compensated sums of O(1) values
        errors["roundoff"] = 64 * np.finfo(float).eps * (abs(F1.value) + abs(F2.value))
    return MonotonicityLedger(t1, t2, F1.value, F2.value, F2.value - F1.value, b_val, n_val,
                              errors)


# -- derivative bound for Xi_t ----------------------------------------------

def dyadic_sums(n, t, R):
    """The two dyadic series bounding t^{-n/2} int t |X|^{-2} e^{-|X|^2/4t} / c0.

    Returns (S1, S2): S1 over the shells outside sqrt(t), S2 over the
    1 + floor(log_4(t / R^2)) shells between R and sqrt(t).
    """
    S1 = 0.0
    k = 0
    while True:
        term = 2.0 ** (k * (n - 2) + n) * math.exp(-4.0 ** (k - 1))
        S1 += term
        if term < 1e-17 * S1:
            break
        k += 1
    L = 1 + math.floor(math.log(t / R ** 2) / (2 * math.log(2)) + 1e-12)
    S2 = math.fsum(2.0 ** (-k * (n - 2) + n) for k in range(1, L + 1))
    return S1, S2


def c1_constant(n, c0, R, jumps=80):
    """sup over t >= R^2 of c0 (S1 + S2(t)) / ((4 pi)^{n/2} (1 + log t - 2 log R)).

    S2 is a step function of t, so the ratio peaks right at the jumps
    t = R^2 4^j.
    """
    best = 0.0
    for j in range(jumps):
        t = R * R * 4.0 ** j
        S1, S2 = dyadic_sums(n, t, R)
        ratio = c0 * (S1 + S2) / ((4 * math.pi) ** (n / 2) * (1 + math.log(t) - 2 * math.log(R)))
        best = max(best, ratio)
    return best


@dataclass(frozen=True)
class XiDerivativeBound:
    t: float
    numeric: float
    bound: float
    constants: dict
    numeric_error: float = 0.0

    @property
    def margin(self):
        return self.bound - self.numeric

    @property
    def holds(self):
        return self.numeric <= self.bound + self.numeric_error


def _centred4(f, t, h):
    v = [f(t + k * h) for k in (-2, -1, 1, 2)]
    return (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h)


def numeric_xi_derivative(surface, phi, t, quad=None, step=None):
    """Fourth-order centred difference of t -> Xi_t with an error estimate.

    The estimate compares steps h and 2h (Richardson, order 4).
    """
    h = step or 1e-3 * t
    if not t - 4 * h > 0:
        raise DomainError("difference step too large for t")
    f = lambda s: xi_estimate(surface, phi, s, quad).value
    d1, d2 = _centred4(f, t, h), _centred4(f, t, 2 * h)
    return d1, abs(d2 - d1) / 15 + 1e-14 * max(1.0, abs(f(t))) / h


def bound_constants(surface, phi, t, quad=None):
    """c_R, c0, c1 and the radius used for the dyadic sums."""
    n = surface.n
    bset = surface.boundary()
    R_bd = surface.boundary_radius
    HM = bset.measure if len(bset) else 0.0
    c_R = 0.0 if not len(bset) else 0.5 * (4 * math.pi) ** (-n / 2) * R_bd * HM
    const = {"c_R": c_R, "H_boundary": HM, "c0": math.nan, "c1": 0.0, "R_sum": math.nan}
    if phi.norm1 == 0:
        return const
    if n < 2:
        raise DomainError("the dyadic volume sums need n >= 2 when |phi|_1 > 0")
    inner = surface.inner_radius
    if inner < 1:
        # |X|^{-2} is not integrable near the origin for n <= 2
        const["c1"] = math.inf
        return const
    R_sum = max(1.0, min(inner, math.sqrt(t)))
    c0 = volume_growth_constant(surface, r_max=C0_RADIUS)
    const.update(c0=c0, R_sum=R_sum, c1=c1_constant(n, c0, R_sum))
    return const


def derivative_bound(surface, phi, t, quad=None):
    """Right-hand side of the Xi_t derivative bound and the constants used."""
    n = surface.n
    const = bound_constants(surface, phi, t, quad)
    G = abs(g_term(surface, t, quad).value)
    c1_part = 0.0
    if phi.norm1:
        c1_part = const["c1"] * (1 + math.log(t)) / (4 * t * (t - 1)) * phi.norm1
    bound = (c1_part + const["c_R"] * t ** (-(n / 2 + 1)) * phi.norm0
             + (phi.norm0 + phi.norm1) * G)
    return bound, dict(const, G=G, norm0=phi.norm0, norm1=phi.norm1)


def xi_derivative_bound(surface, phi=None, t=2.0, quad=None, delta=T_GUARD, shrinker_tol=None):
    """Numeric |d/dt Xi_t| next to the explicit upper bound."""
    phi = phi or constant_function()
    quad = quad or QuadratureSpec()
    if t < 1 + delta:
        raise DomainError(f"t={t} is within {delta} of 1 where the bound degenerates")
    require_shrinker(surface, quad, shrinker_tol)
    bound, const = derivative_bound(surface, phi, t, quad)
    d, err = numeric_xi_derivative(surface, phi, t, quad)
    return XiDerivativeBound(t, abs(d), bound, const, err)


@dataclass(frozen=True)
class XiLimitEcho:
    scales: list
    values: list
    increments: list
    integrated_bounds: list

    @property
    def dominated(self):
        return all(abs(d) <= b for d, b in zip(self.increments, self.integrated_bounds))


def xi_limit_increments(surface, phi, j_range=(1, 6), quad=None):
    """Xi at t = 2^j with each increment set against the integrated bound."""
    quad = quad or QuadratureSpec()
    require_shrinker(surface, quad)
    ts = [2.0 ** j for j in range(j_range[0], j_range[1] + 1)]
    vals = [xi_estimate(surface, phi, t, quad).value for t in ts]
    incs, bounds = [], []
    for a, b, va, vb in zip(ts, ts[1:], vals, vals[1:]):
        lo = max(a, 1 + T_GUARD)
        res = adaptive_simpson(lambda s: derivative_bound(surface, phi, s, quad)[0],
                               lo, b, tol=1e-6 * (b - lo), min_depth=2)
        incs.append(vb - va)
        bounds.append(res.value + res.error)
    return XiLimitEcho(ts, vals, incs, bounds)
