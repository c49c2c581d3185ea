"""Quadrature primitives: sphere rules, Gauss-Legendre panels, adaptive Simpson.

All reductions go through :func:`fsum_dot`, which uses ``math.fsum`` so that
results do not depend on traversal order or thread count.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from ..errors import ConvergenceError


def fsum_dot(values, weights):
    """Correctly rounded sum of ``values * weights``."""
    prod = np.asarray(values, dtype=float) * np.asarray(weights, dtype=float)
    return math.fsum(prod.ravel().tolist())


@lru_cache(maxsize=64)
def _legendre(order):
    x, w = roots_legendre(order)
    return x, w


def gauss_legendre(a, b, order, panels=1):
    """Composite Gauss-Legendre nodes/weights on ``[a, b]``."""
    x, w = _legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@lru_cache(maxsize=64)
def _sphere_rule_cached(dim, order):
    if dim == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim == 1:
        theta = 2.0 * np.pi * (np.arange(order) + 0.5) / order
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        return pts, np.full(order, 2.0 * np.pi / order)
    # S^d = {(u, sqrt(1-u^2) * eta)}, measure (1-u^2)^{(d-2)/2} du dS^{d-1}
    a = 0.5 * (dim - 2)
    if a == 0.0:
        u, wu = roots_legendre(order)
    else:
        u, wu = roots_jacobi(order, a, a)
    sub_pts, sub_w = _sphere_rule_cached(dim - 1, order)
    rad = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    pts = np.concatenate(
        [u[:, None, None].repeat(len(sub_w), axis=1),
         rad[:, None, None] * sub_pts[None, :, :]], axis=2)
    pts = pts.reshape(-1, dim + 1)
    w = (wu[:, None] * sub_w[None, :]).ravel()
    return pts, w


def sphere_rule(dim, order):
    """Product quadrature on the unit sphere S^dim in R^{dim+1}.

    ``order`` is the number of trapezoid points on circles and the number of
    Gauss points per polar coordinate. Weights sum to the sphere's area.
    """
    if dim < 0:
        raise ValueError("sphere dimension must be >= 0")
    pts, w = _sphere_rule_cached(int(dim), int(order))
    return pts.copy(), w.copy()


def sphere_area(dim):
    """Area of the unit sphere S^dim."""
    return 2.0 * math.pi ** ((dim + 1) / 2.0) / math.gamma((dim + 1) / 2.0)


def ball_volume(n):
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass
class SimpsonResult:
    value: float
    error: float
    evaluations: int


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=40, min_depth=3):
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``.

    Returns a :class:`SimpsonResult`; ``error`` is the accumulated
    Richardson estimate. Raises :class:`ConvergenceError` if the recursion
    depth is exhausted before the local tolerance is met.
    """
    if a == b:
        return SimpsonResult(0.0, 0.0, 0)
    cache = {}

    def ev(x):
        if x not in cache:
            cache[x] = float(f(x))
        return cache[x]

    parts = []
    errs = []
    failed = []

    # explicit stack, left-to-right traversal for reproducibility
    fa, fb = ev(a), ev(b)
    m = 0.5 * (a + b)
    fm = ev(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = ev(lm), ev(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        if depth >= min_depth and abs(delta) <= 15.0 * eps:
            parts.append(left + right + delta / 15.0)
            errs.append(abs(delta) / 15.0)
            continue
        if depth >= max_depth:
            failed.append((lo, hi))
            parts.append(left + right + delta / 15.0)
            errs.append(abs(delta) / 15.0)
            continue
        # push right first so the left half is processed first
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    if failed:
        raise ConvergenceError(
            f"adaptive Simpson hit max depth {max_depth} on {len(failed)} "
            f"subintervals, first at {failed[0]}", history=errs)
    return SimpsonResult(math.fsum(parts), math.fsum(errs), len(cache))


def geometric_grid(lo, hi, num):
    """``num`` logarithmically spaced points from ``lo`` to ``hi``."""
    return np.geomspace(lo, hi, num)
