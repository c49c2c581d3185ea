"""Graphical self-shrinkers over planar annuli: the graph equation, decay
constants, a Newton solver and the rescaled backward-heat inequality."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, DomainError, PreconditionError
from .geom.graphpatch import GraphFunction, GraphPatch, angular_derivative
from .regularity import annulus_profile

NEWTON_TOL = 1e-10


# -- residual -------------------------------------------------------------------

@dataclass(frozen=True)
class GraphResidual:
    """Per-node g^{ij} u_ij - (-u + x.Du)/2, shape (m, Nr+1, Nt)."""

    field: np.ndarray

    @property
    def interior(self):
        return self.field[:, 1:-1]

    @property
    def sup(self):
        """Sup over interior rings; the edge rings carry Dirichlet data."""
        return float(np.max(np.abs(self.interior))) if self.interior.size else 0.0

    @property
    def sup_all(self):
        return float(np.max(np.abs(self.field)))


def _residual_field(u):
    Du, D2u = u.derivatives
    ginv = u.metric_inverse
    x = u.nodes
    trace = np.einsum("ntij,antij->ant", ginv, D2u)
    drift = -u.values + np.einsum("nti,anti->ant", x, Du)
    return trace - 0.5 * drift


def graph_residual(u):
    return GraphResidual(_residual_field(u))


# -- decay constants ---------------------------------------------------------------

@dataclass(frozen=True)
class DecayConstants:
    """Smallest c_j with |D^j u| <= c_j |x|^{1-j} on the grid, j = 0, 1, 2.

    Norms are Euclidean over components and Frobenius over derivative
    indices. ``where`` holds the node radius attaining each constant.
    """

    c: tuple
    where: tuple

    @property
    def c_M(self):
        return max(self.c)


def decay_constants(u):
    if u.r_inner < 1:
        raise DomainError(f"decay constants need inner radius >= 1, got {u.r_inner}")
    Du, D2u = u.derivatives
    r = np.broadcast_to(u.r[:, None], (u.n_r + 1, u.n_theta))
    q0 = np.sqrt(np.einsum("ant,ant->nt", u.values, u.values)) / r
    q1 = np.sqrt(np.einsum("anti,anti->nt", Du, Du))
    q2 = np.sqrt(np.einsum("antij,antij->nt", D2u, D2u)) * r
    cs, where = [], []
    for q in (q0, q1, q2):
        k = np.unravel_index(int(np.argmax(q)), q.shape)
        cs.append(float(q[k]))
        where.append(float(r[k]))
    return DecayConstants(tuple(cs), tuple(where))


# -- Newton solver ---------------------------------------------------------------

class _PolarOperators:
    """Sparse Cartesian derivative matrices acting on one flattened component."""

    def __init__(self, g):
        nr1, nt, h = g.n_r + 1, g.n_theta, g.h
        D1 = sparse.diags([-1, 0, 1], [-1, 0, 1], shape=(nr1, nr1), format="lil") / (2 * h)
        D1[0, :3] = np.array([-3, 4, -1]) / (2 * h)
        D1[-1, -3:] = np.array([1, -4, 3]) / (2 * h)
        D2 = sparse.diags([1, -2, 1], [-1, 0, 1], shape=(nr1, nr1), format="lil") / h ** 2
        D2[0, :4] = np.array([2, -5, 4, -1]) / h ** 2
        D2[-1, -4:] = np.array([-1, 4, -5, 2]) / h ** 2
        eye_t = np.eye(nt)
        # rows of the spectral derivative matrices: differentiate the identity
        S1 = angular_derivative(eye_t, 1).T
        S2 = angular_derivative(eye_t, 2).T
        Ir, It = sparse.identity(nr1), sparse.identity(nt)
        ur = sparse.kron(D1.tocsr(), It)
        urr = sparse.kron(D2.tocsr(), It)
        ut = sparse.kron(Ir, sparse.csr_matrix(S1))
        utt = sparse.kron(Ir, sparse.csr_matrix(S2))
        urt = sparse.kron(D1.tocsr(), sparse.csr_matrix(S1))
        r = np.repeat(g.r, nt)
        th = np.tile(g.theta, nr1)
        c, s = np.cos(th), np.sin(th)
        d = sparse.diags
        self.Dx = (d(c) @ ur - d(s / r) @ ut).tocsr()
        self.Dy = (d(s) @ ur + d(c / r) @ ut).tocsr()
        self.Dxx = (d(c * c) @ urr - d(2 * c * s / r) @ urt + d(s * s / r) @ ur
                    + d(s * s / r ** 2) @ utt + d(2 * c * s / r ** 2) @ ut).tocsr()
        self.Dyy = (d(s * s) @ urr + d(2 * c * s / r) @ urt + d(c * c / r) @ ur
                    + d(c * c / r ** 2) @ utt - d(2 * c * s / r ** 2) @ ut).tocsr()
        self.Dxy = (d(c * s) @ urr + d((c * c - s * s) / r) @ urt - d(c * s / r) @ ur
                    - d(c * s / r ** 2) @ utt - d((c * c - s * s) / r ** 2) @ ut).tocsr()
        self.x, self.y = r * c, r * s
        self.size = nr1 * nt


def _jacobian(u, ops):
    """Exact derivative of the discrete residual with respect to all node values."""
    m, N = u.m, ops.size
    Du, D2u = u.derivatives
    ginv = u.metric_inverse.reshape(N, 2, 2)
    p = Du.reshape(m, N, 2)
    hess = D2u.reshape(m, N, 2, 2)
    d = sparse.diags
    D = (ops.Dx, ops.Dy)
    base = (d(ginv[:, 0, 0]) @ ops.Dxx + d(2 * ginv[:, 0, 1]) @ ops.Dxy
            + d(ginv[:, 1, 1]) @ ops.Dyy + 0.5 * sparse.identity(N)
            - 0.5 * (d(ops.x) @ ops.Dx + d(ops.y) @ ops.Dy))
    # d g^{ij} / d p^beta_k contracted with u^alpha_ij = -2 (g^-1 U^alpha g^-1 p^beta)_k
    w = np.einsum("nij,bnj->bni", ginv, p)
    blocks = [[None] * m for _ in range(m)]
    for a in range(m):
        gu = np.einsum("nij,njk->nik", ginv, hess[a])
        for b in range(m):
            coef = -2 * np.einsum("nik,bnk->bni", gu, w[b:b + 1])[0]
            blk = d(coef[:, 0]) @ D[0] + d(coef[:, 1]) @ D[1]
            blocks[a][b] = blk + base if a == b else blk
    return sparse.bmat(blocks, format="csc")


@dataclass(frozen=True)
class NewtonReport:
    graph: GraphFunction
    history: list
    steps: int

    @property
    def residual(self):
        return self.history[-1]


def _interpolated_guess(inner, outer, r_inner, r_outer, n_r):
    s = np.linspace(0.0, 1.0, n_r + 1)[None, :, None]
    return (1 - s) * inner[:, None, :] + s * outer[:, None, :]


def solve_graph_shrinker(inner, outer, r_inner, r_outer, n_r, guess=None, tol=NEWTON_TOL,
                         max_iter=40):
    """Damped Newton for graph_residual = 0 with Dirichlet data on both circles.

    ``inner`` and ``outer`` have shape (m, n_theta). The default initial
    guess interpolates them linearly in r.
    """
    inner = np.atleast_2d(np.asarray(inner, dtype=float))
    outer = np.atleast_2d(np.asarray(outer, dtype=float))
    if inner.shape != outer.shape:
        raise DomainError("inner and outer boundary data must have the same shape")
    if not (np.all(np.isfinite(inner)) and np.all(np.isfinite(outer))):
        raise DomainError("boundary data must be finite")
    m, nt = inner.shape
    vals = (_interpolated_guess(inner, outer, r_inner, r_outer, n_r) if guess is None
            else np.array(guess.values, dtype=float))
    if vals.shape != (m, n_r + 1, nt):
        raise DomainError(f"initial guess has shape {vals.shape}, expected {(m, n_r + 1, nt)}")
    vals[:, 0], vals[:, -1] = inner, outer
    u = GraphFunction(r_inner, r_outer, vals)
    _ = u.metric_inverse  # raises on a degenerate initial guess
    ops = _PolarOperators(u)
    free = np.zeros((m, n_r + 1, nt), dtype=bool)
    free[:, 1:-1] = True
    free = free.ravel()
    history = [graph_residual(u).sup]
    steps = 0
    while history[-1] >= tol:
        if steps == max_iter:
            raise ConvergenceError(f"Newton did not reach {tol:g} in {max_iter} steps",
                                   history=history)
        F = _residual_field(u).ravel()[free]
        J = _jacobian(u, ops)[free][:, free]
        lu = splu(J.tocsc())
        delta = lu.solve(-F)
        # the growing drift mode makes J badly conditioned; refine the solve
        for _ in range(2):
            delta += lu.solve(-F - J @ delta)
        # backtrack on the L2 merit; the sup norm may rise on a good step
        merit = np.linalg.norm(F)
        lam = 1.0
        while True:
            trial = u.values.ravel().copy()
            trial[free] += lam * delta
            cand = u.with_values(trial.reshape(u.values.shape))
            try:
                field_new = _residual_field(cand)
            except DomainError:
                field_new = None
            if field_new is not None and (
                    np.linalg.norm(field_new.ravel()[free]) < merit or lam < 1e-4):
                break
            if field_new is None and lam < 1e-4:
                raise ConvergenceError("Newton step left the region of positive metrics",
                                       history=history)
            lam *= 0.5
        u = cand
        history.append(GraphResidual(field_new).sup)
        steps += 1
    return NewtonReport(u, history, steps)


def boundary_data(func, r_inner, r_outer, n_theta, m=1):
    """Sample ``func(x) -> (..., m)`` on both circles; returns (inner, outer)."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    out = []
    for r in (r_inner, r_outer):
        x = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        v = np.asarray(func(x), dtype=float)
        out.append(v.reshape(n_theta, m).T if v.ndim > 1 or m > 1 else v[None])
    return out[0], out[1]


def perturbed_linear_data(A=(0.2, 0.1), amplitude=0.05, mode=2, radius=None):
    """Boundary function A.x + amplitude cos(mode theta) for one component.

    With ``radius`` the perturbation is scaled by |x|/radius, the degree-one
    extension that solutions approach far out.
    """
    A = np.asarray(A, dtype=float)

    def func(x):
        th = np.arctan2(x[..., 1], x[..., 0])
        scale = 1.0 if radius is None else np.linalg.norm(x, axis=-1) / radius
        return x @ A + amplitude * scale * np.cos(mode * th)
    return func


def solve_fixture(r_inner=4.0, r_outer=16.0, h=0.125, n_theta=32, A=(0.2, 0.1),
                  amplitude=0.05, r_extended=24.0):
    """Shrinker graph over [r_inner, r_outer] with perturbed linear inner data.

    The drift term pushes a boundary layer against the outer circle, so the
    solve runs on [r_inner, r_extended], with the degree-one extension of the
    perturbation as outer data, and the result is cut back to ``r_outer``.
    """
    n_r = int(round((r_extended - r_inner) / h))
    inner, _ = boundary_data(perturbed_linear_data(A, amplitude), r_inner, r_extended, n_theta)
    _, outer = boundary_data(perturbed_linear_data(A, amplitude, radius=r_inner), r_inner,
                             r_extended, n_theta)
    rep = solve_graph_shrinker(inner, outer, r_inner, r_extended, n_r)
    return NewtonReport(rep.graph.restrict(r_outer), rep.history, rep.steps)


# -- rescaled backward-heat inequality ------------------------------------------------

def _frobenius(a, axes):
    return np.sqrt(np.sum(a * a, axis=axes))


@dataclass(frozen=True)
class HeatCheck:
    """Per time slice, over interior rings: |dU/dt + Laplacian U| two ways and
    the bound (c2/|x|) sum_beta |grad U^beta|.

    Route (a) is NaN on rings whose time-shifted rays would leave the
    annulus.
    """

    times: list
    radii: np.ndarray
    route_a: list
    route_b: list
    bounds: list
    c2: float
    c1_prime: float
    c_M: float
    constants: dict = field(default_factory=dict)

    @property
    def violations(self):
        count = 0
        for a, b, bd in zip(self.route_a, self.route_b, self.bounds):
            limit = bd * (1 + 1e-9)
            count += np.count_nonzero(b > limit)
            count += np.count_nonzero(np.nan_to_num(a, nan=-np.inf) > limit)
        return int(count)

    @property
    def route_gap(self):
        """Sup over nodes and times of |route (a) - route (b)|."""
        return max(float(np.nanmax(np.abs(a - b))) for a, b in zip(self.route_a, self.route_b))

    @property
    def min_margin(self):
        return min(float(np.min(bd - np.fmax(a, b)))
                   for a, b, bd in zip(self.route_a, self.route_b, self.bounds))

    def rows(self):
        for t, a, b, bd in zip(self.times, self.route_a, self.route_b, self.bounds):
            for r, va, vb, vbd in zip(self.radii, a.max(axis=1), b.max(axis=1), bd.min(axis=1)):
                yield float(t), float(r), float(va), float(vb), float(vbd)


def heat_constants(u):
    """c1' = L/(1 - L^2) with L = max sum_beta |Du^beta|, and c2 = c1' c_M."""
    Du, _ = u.derivatives
    S = np.sum(_frobenius(Du, -1), axis=0)
    L = float(S.max())
    if L >= 0.5:
        raise PreconditionError(f"sum_beta |Du^beta| reaches {L:.3g}; the Neumann bound "
                                "needs it below 1/2", measured=L)
    c1p = L / (1 - L * L)
    dc = decay_constants(u)
    return c1p, dc.c_M, c1p * dc.c_M


def rescaled_heat_check(u, times=(0.5, 1.0, 2.0, 4.0), dt_scale=1.0, tol=1e-6, edge=1.0):
    """Check |dU/dt + Laplacian U| <= (c2/|x|) sum_beta |grad U^beta| for U = sqrt(t) u(x/sqrt(t)).

    Nodes are x = sqrt(t) y over the interior grid nodes y of u. Route (b)
    is t^{-1/2}(delta - g^{-1}) : D^2u at y. Route (a) differences U in time
    at fixed x, reading u along the ray from a radial cubic spline, and adds
    the Laplacian on the scaled grid; it skips rings closer than ``edge`` to
    either circle so the band it covers is the same at every resolution.
    """
    res = graph_residual(u)
    if res.sup > tol:
        raise PreconditionError(f"graph residual {res.sup:.3e} exceeds {tol:g}; not a shrinker "
                                "graph", measured=res.sup)
    c1p, c_M, c2 = heat_constants(u)
    Du, D2u = u.derivatives
    ginv = u.metric_inverse
    lap = D2u[..., 0, 0] + D2u[..., 1, 1]
    Qb = np.einsum("ntij,antij->ant", np.eye(2) - ginv, D2u)
    S = np.sum(_frobenius(Du, -1), axis=0)
    spline = u.radial_spline()
    h = u.h
    inner = slice(1, u.n_r)
    r = u.r[inner]
    band = max(int(math.ceil(edge / h - 1e-9)), 3)
    if 2 * band >= u.n_r:
        raise DomainError(f"edge band {edge} leaves no rings for route (a)")
    rows = slice(band - 1, u.n_r - band)  # relative to the interior rings
    ra = r[rows]
    route_a, route_b, bounds = [], [], []
    for t in times:
        if not t > 0:
            raise DomainError(f"times must be positive, got {t}")
        dt = dt_scale * h / (u.r_outer - u.r_inner) * t

        def U_at(tp):
            # at fixed x = sqrt(t) y, u is read at radius |y| sqrt(t / t')
            rr = ra * math.sqrt(t / tp)
            if rr.min() < u.r_inner or rr.max() > u.r_outer:
                raise DomainError("time step moves nodes outside the annulus; widen the edge band")
            return math.sqrt(tp) * spline(rr)

        dU = (-U_at(t + 2 * dt) + 8 * U_at(t + dt) - 8 * U_at(t - dt) + U_at(t - 2 * dt)) / (12 * dt)
        a = np.full((len(r), u.n_theta), np.nan)
        a[rows] = np.max(np.abs(dU + lap[:, 1:-1][:, rows] / math.sqrt(t)), axis=0)
        route_a.append(a)
        route_b.append(np.max(np.abs(Qb[:, inner] / math.sqrt(t)), axis=0))
        bounds.append(c2 * S[inner] / (math.sqrt(t) * r[:, None]))
    return HeatCheck(list(times), r, route_a, route_b, bounds, c2, c1p, c_M,
                     {"residual": res.sup, "edge": edge})


def heat_route_order(graphs, times=(0.5, 1.0, 2.0, 4.0), edge=1.0):
    """Observed order of the route (a)/(b) gap over successively refined solutions."""
    gaps = [rescaled_heat_check(g, times, edge=edge).route_gap for g in graphs]
    hs = [g.h for g in graphs]
    orders = [math.log(g0 / g1) / math.log(h0 / h1)
              for g0, g1, h0, h1 in zip(gaps, gaps[1:], hs, hs[1:])]
    return gaps, orders


# -- rigidity echo ------------------------------------------------------------------

def linear_fit(u):
    """Least-squares A with u(x) ~ A x; returns (A, sup misfit)."""
    X = u.nodes.reshape(-1, 2)
    Y = u.values.reshape(u.m, -1).T
    A, *_ = np.linalg.lstsq(X, Y, rcond=None)
    return A.T, float(np.max(np.abs(X @ A - Y)))


@dataclass(frozen=True)
class RigidityEcho:
    """Diagnostic only: decaying annulus |B|^n integrals should come with a linear graph."""

    decaying: bool
    linear: bool
    fit_sup: float
    A: np.ndarray
    profile: object

    @property
    def consistent(self):
        return self.linear or not self.decaying


def rigidity_echo(u, count=5, fit_tol=1e-6):
    """Annulus |B|^2 profile of graph u next to its best linear fit."""
    patch = GraphPatch(u)
    radii = np.geomspace(patch.inner_radius, patch.extent / 2, count)
    profile = annulus_profile(patch, 2, radii)
    A, sup = linear_fit(u)
    return RigidityEcho(profile.decaying, sup <= fit_tol, sup, A, profile)
