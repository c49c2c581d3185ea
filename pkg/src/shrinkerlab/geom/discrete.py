"""Discrete surfaces (triangle meshes, polylines) with fitted pointwise geometry.

Curvature comes from a local polynomial fit over the 2-ring of each vertex:
the neighborhood is written as a height graph over a PCA tangent plane and
the second derivatives of the fit give B. The fit is vectorized over all
vertices by padding neighborhoods to a common size.
"""

import itertools
import math
from functools import cached_property

import numpy as np
from scipy import sparse

from ..errors import DomainError, FitError
from .base import BoundarySet, GeometrySample, SampleSet, Surface, empty_boundary


def _monomials(n, degree):
    exps = []
    for d in range(1, degree + 1):
        for e in itertools.product(range(d + 1), repeat=n):
            if sum(e) == d:
                exps.append(e)
    return exps


def _derivative_maps(n, exps):
    """Row selectors turning monomial coefficients into gradient and Hessian."""
    grad = np.zeros((n, len(exps)))
    hess = np.zeros((n, n, len(exps)))
    for col, e in enumerate(exps):
        if sum(e) == 1:
            grad[e.index(1), col] = 1.0
        elif sum(e) == 2:
            if 2 in e:
                i = e.index(2)
                hess[i, i, col] = 2.0
            else:
                i, j = [a for a, v in enumerate(e) if v == 1]
                hess[i, j, col] = hess[j, i, col] = 1.0
    return grad, hess


def _fit_rows(P, C, nbr, n, exps):
    """Monomial least-squares fits centered at the points ``C``.

    ``nbr`` indexes into ``P``. Returns (coef, hs, T, N, cond).
    """
    V = len(C)
    mask = nbr >= 0
    safe = np.where(mask, nbr, 0)
    off = (P[safe] - C[:, None, :]) * mask[..., None]
    counts = mask.sum(axis=1)
    _, _, vt = np.linalg.svd(off, full_matrices=True)
    T, N = vt[:, :n, :], vt[:, n:, :]
    x = np.einsum("vkd,vnd->vkn", off, T)
    hs = np.sqrt((x ** 2).sum(axis=(1, 2)) / np.maximum(counts, 1))
    xs = x / hs[:, None, None]
    A = np.ones((V, nbr.shape[1], len(exps)))
    for col, e in enumerate(exps):
        for i, p in enumerate(e):
            if p:
                A[:, :, col] *= xs[:, :, i] ** p
    A *= mask[..., None]
    sv = np.linalg.svd(A, compute_uv=False)
    cond = np.where(counts >= len(exps), sv[:, -1] / sv[:, 0], 0.0)
    heights = np.einsum("vkd,vad->vka", off, N)
    r2 = np.einsum("vkd,vkd->vk", P[safe], P[safe]) - np.einsum("vd,vd->v", C, C)[:, None]
    rhs = np.concatenate([heights, (r2 * mask)[..., None]], axis=2)
    coef = np.linalg.pinv(A) @ rhs
    return coef, hs, T, N, cond


def fit_local_geometry(points, neighborhoods, n, degree=4, max_rings=4, labels=None):
    """Batched local fit at every point.

    ``neighborhoods(rings)`` returns a (V, K) index array padded with -1.
    Vertices whose 2-ring is too small or rank-deficient for the requested
    degree (typically near a boundary) are refit on wider rings. Returns a
    dict of arrays: X, XT, XN, H, B_norm, dX, g and lap_r2, the
    Laplace-Beltrami of |X|^2 from a separate fit of that scalar.
    """
    P = np.asarray(points, dtype=float)
    exps = _monomials(n, degree)
    coef, hs, T, N, cond = _fit_rows(P, P, neighborhoods(2), n, exps)
    rings = 2
    todo = np.nonzero(cond < 1e-8)[0]
    while todo.size and rings < max_rings:
        rings += 1
        nbr = neighborhoods(rings)[todo]
        nbr = nbr[:, :max(1, int((nbr >= 0).sum(axis=1).max()))]
        c2, h2, T2, N2, k2 = _fit_rows(P, P[todo], nbr, n, exps)
        coef[todo], hs[todo], T[todo], N[todo], cond[todo] = c2, h2, T2, N2, k2
        todo = todo[k2 < 1e-8]
    if todo.size:
        el = int(todo[0]) if labels is None else labels[todo[0]]
        raise FitError(f"rank-deficient neighborhood at element {el} for a degree-{degree} "
                       f"fit", element=el)
    gsel, hsel = _derivative_maps(n, exps)
    grad = np.einsum("im,vma->via", gsel, coef) / hs[:, None, None]
    hess = np.einsum("ijm,vma->vija", hsel, coef) / (hs ** 2)[:, None, None, None]
    dh, ddh = grad[..., :-1], hess[..., :-1]
    df, ddf = grad[..., -1], hess[..., -1]
    dX = T + np.einsum("via,vad->vid", dh, N)
    ddX = np.einsum("vija,vad->vijd", ddh, N)
    return _batched_chart(P, dX, ddX, df, ddf)


def _batched_chart(P, dX, ddX, df=None, ddf=None):
    g = np.einsum("vid,vjd->vij", dX, dX)
    ginv = np.linalg.inv(g)
    projT = np.einsum("vid,vij,vje->vde", dX, ginv, dX)
    XT = np.einsum("vde,ve->vd", projT, P)
    XN = P - XT
    B = ddX - np.einsum("vijd,vde->vije", ddX, projT)
    H = np.einsum("vij,vijd->vd", ginv, B)
    B2 = np.einsum("vik,vjl,vijd,vkld->v", ginv, ginv, B, B)
    out = {"X": P, "XT": XT, "XN": XN, "H": H, "B_norm": np.sqrt(np.clip(B2, 0, None)),
           "dX": dX, "g": g}
    if df is None:
        # |X|^2 differentiated through the chart itself
        df = 2 * np.einsum("vd,vid->vi", P, dX)
        ddf = 2 * g + 2 * np.einsum("vd,vijd->vij", P, ddX)
    gamma = np.einsum("vkl,vijd,vld->vkij", ginv, ddX, dX)
    out["lap_r2"] = np.einsum("vij,vij->v", ginv, ddf - np.einsum("vkij,vk->vij", gamma, df))
    return out


def _pad(rows):
    K = max(len(r) for r in rows)
    out = np.full((len(rows), K), -1, dtype=int)
    for i, r in enumerate(rows):
        out[i, :len(r)] = r
    return out


class _DiscreteSurface(Surface):
    discrete = True
    fit_degree = 4

    def _freeze(self):
        self.vertices.setflags(write=False)

    @property
    def extent(self):
        return float(np.max(np.linalg.norm(self.vertices, axis=1)))

    @property
    def inner_radius(self):
        return float(np.min(np.linalg.norm(self.vertices, axis=1)))

    @cached_property
    def geometry(self):
        return fit_local_geometry(self.vertices, self.neighborhoods, self.n,
                                  degree=self.fit_degree)

    @cached_property
    def frames(self):
        q, _ = np.linalg.qr(np.transpose(self.geometry["dX"], (0, 2, 1)))
        return np.transpose(q, (0, 2, 1))

    def samples(self, region=None, resolution=None):
        geo = self.geometry
        ss = SampleSet(geo["X"], geo["XT"], geo["XN"], geo["H"], geo["B_norm"],
                       self.vertex_weights)
        if region is None:
            return ss
        return ss.subset(region.contains(geo["X"]))

    def sample_geometry(self, location):
        if not isinstance(location, (int, np.integer)):
            raise DomainError(f"{self.kind} locations are vertex indices")
        if not 0 <= location < len(self.vertices):
            raise DomainError(f"vertex {location} out of range [0, {len(self.vertices)})")
        geo = self.geometry
        i = int(location)
        return GeometrySample(X=geo["X"][i].copy(), frame=self.frames[i], XT=geo["XT"][i],
                              XN=geo["XN"][i], H=geo["H"][i], B_norm=float(geo["B_norm"][i]),
                              weight=float(self.vertex_weights[i]))

    def _snapped(self, pts):
        return pts if self.snap is None else np.asarray(self.snap(pts), dtype=float)

    def _scaled_snap(self, t):
        if self.snap is None:
            return None
        snap = self.snap
        return lambda pts: np.asarray(snap(np.asarray(pts) * t)) / t

    @property
    def mesh_size(self):
        e = self.edges
        return float(np.max(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]],
                                           axis=1)))

    def cross_section(self, r, count=None):
        e = self.edges
        a, b = self.vertices[e[:, 0]], self.vertices[e[:, 1]]
        ra, rb = np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)
        hit = (ra - r) * (rb - r) <= 0
        a, b = a[hit], b[hit]
        d = b - a
        # |a + l d|^2 = r^2
        qa = np.einsum("ij,ij->i", d, d)
        qb = 2 * np.einsum("ij,ij->i", a, d)
        qc = np.einsum("ij,ij->i", a, a) - r * r
        disc = np.sqrt(np.clip(qb * qb - 4 * qa * qc, 0, None))
        l1 = (-qb + disc) / (2 * qa)
        l2 = (-qb - disc) / (2 * qa)
        lam = np.where((l1 >= -1e-12) & (l1 <= 1 + 1e-12), l1, l2)
        return a + lam[:, None] * d


class TriangleMesh(_DiscreteSurface):
    """Triangulated 2-surface in R^{2+m}.

    ``snap`` optionally maps points back onto an underlying smooth surface
    and is applied to new vertices during refinement.
    """

    kind = "TriangleMesh"

    def __init__(self, vertices, faces, snap=None, name=None):
        V = np.array(vertices, dtype=float)
        F = np.array(faces, dtype=int)
        if V.ndim != 2 or V.shape[1] < 3:
            raise DomainError("mesh vertices must be an (N, D) array with D >= 3")
        if F.ndim != 2 or F.shape[1] != 3:
            raise DomainError("faces must be an (F, 3) index array")
        if F.size and (F.min() < 0 or F.max() >= len(V)):
            raise DomainError("face index out of range")
        self.n, self.m = 2, V.shape[1] - 2
        self.vertices, self.faces, self.snap, self.name = V, F, snap, name
        scale2 = float(np.sum((V.max(axis=0) - V.min(axis=0)) ** 2))
        areas = self.face_areas
        bad = np.nonzero(areas <= 1e-14 * scale2)[0]
        if bad.size:
            raise DomainError(f"degenerate face {int(bad[0])} (area {areas[bad[0]]:.3e})")
        self._freeze()
        self.faces.setflags(write=False)

    def params(self):
        return {"vertices": len(self.vertices), "faces": len(self.faces), "D": self.ambient_dim}

    @cached_property
    def face_areas(self):
        a, b, c = (self.vertices[self.faces[:, i]] for i in range(3))
        u, v = b - a, c - a
        uu, vv, uv = (np.einsum("ij,ij->i", x, y) for x, y in ((u, u), (v, v), (u, v)))
        return 0.5 * np.sqrt(np.clip(uu * vv - uv * uv, 0, None))

    @cached_property
    def vertex_weights(self):
        w = np.zeros(len(self.vertices))
        np.add.at(w, self.faces.ravel(), np.repeat(self.face_areas / 3.0, 3))
        return w

    @cached_property
    def _edge_faces(self):
        F = self.faces
        e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        opp = np.concatenate([F[:, 2], F[:, 0], F[:, 1]])
        key = np.sort(e, axis=1)
        uniq, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return e, opp, uniq, inv.ravel(), cnt

    @property
    def edges(self):
        return self._edge_faces[2]

    @cached_property
    def adjacency(self):
        e = self.edges
        nv = len(self.vertices)
        A = sparse.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]],
                                                        np.r_[e[:, 1], e[:, 0]])),
                              shape=(nv, nv)).tocsr()
        A.data[:] = 1.0
        return A

    def neighborhoods(self, rings=2):
        A = self.adjacency
        R = A.copy()
        for _ in range(rings - 1):
            R = R + R @ A
        R = R.tolil()
        rows = [[j for j in R.rows[i] if j != i] for i in range(R.shape[0])]
        return _pad(rows)

    @cached_property
    def boundary_edges(self):
        e, opp, _, inv, cnt = self._edge_faces
        once = cnt[inv] == 1
        return e[once], opp[once]

    @property
    def boundary_vertices(self):
        be, _ = self.boundary_edges
        return np.unique(be.ravel())

    def boundary(self, resolution=None):
        be, opp = self.boundary_edges
        if len(be) == 0:
            return empty_boundary(self.ambient_dim)
        V = self.vertices
        a, b, c = V[be[:, 0]], V[be[:, 1]], V[opp]
        d = b - a
        length = np.linalg.norm(d, axis=1)
        e = d / length[:, None]
        w = (c - a) - np.einsum("ij,ij->i", c - a, e)[:, None] * e
        conormal = -w / np.linalg.norm(w, axis=1)[:, None]
        verts = np.unique(be.ravel())
        pos = {v: i for i, v in enumerate(verts)}
        nu = np.zeros((len(verts), V.shape[1]))
        wt = np.zeros(len(verts))
        for k, (i, j) in enumerate(be):
            for v in (i, j):
                nu[pos[v]] += length[k] * conormal[k]
                wt[pos[v]] += 0.5 * length[k]
        geo = self.geometry
        dX = geo["dX"][verts]
        g = np.einsum("vid,vjd->vij", dX, dX)
        projT = np.einsum("vid,vij,vje->vde", dX, np.linalg.inv(g), dX)
        nu = np.einsum("vde,ve->vd", projT, nu)
        nu /= np.linalg.norm(nu, axis=1)[:, None]
        return BoundarySet(V[verts], geo["XT"][verts], nu, wt)

    def refine(self):
        V, F = self.vertices, self.faces
        e, _, uniq, inv, _ = self._edge_faces
        mid = self._snapped(0.5 * (V[uniq[:, 0]] + V[uniq[:, 1]]))
        nv = len(V)
        nf = len(F)
        m01 = nv + inv[:nf]
        m12 = nv + inv[nf:2 * nf]
        m20 = nv + inv[2 * nf:]
        newF = np.concatenate([
            np.column_stack([F[:, 0], m01, m20]),
            np.column_stack([F[:, 1], m12, m01]),
            np.column_stack([F[:, 2], m20, m12]),
            np.column_stack([m01, m12, m20]),
        ])
        return TriangleMesh(np.vstack([V, mid]), newF, snap=self.snap, name=self.name)

    def rescale(self, t):
        if not t > 0:
            raise DomainError("scale must be positive")
        return TriangleMesh(self.vertices / t, self.faces, snap=self._scaled_snap(t),
                            name=self.name)


class PolylineCurve(_DiscreteSurface):
    """Polygonal curve in R^{1+m}; closed curves wrap around."""

    kind = "PolylineCurve"

    def __init__(self, vertices, closed=True, snap=None, name=None):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] < 2:
            raise DomainError("curve vertices must be an (N, D) array with D >= 2")
        if len(V) < 3:
            raise DomainError("a curve needs at least three vertices")
        self.n, self.m = 1, V.shape[1] - 1
        self.vertices, self.closed, self.snap, self.name = V, bool(closed), snap, name
        seg = self.segment_lengths
        if np.any(seg <= 0):
            raise DomainError(f"segment {int(np.argmin(seg))} has zero length")
        self._freeze()

    def params(self):
        return {"vertices": len(self.vertices), "closed": self.closed, "D": self.ambient_dim}

    @property
    def edges(self):
        nv = len(self.vertices)
        i = np.arange(nv if self.closed else nv - 1)
        return np.column_stack([i, (i + 1) % nv])

    @cached_property
    def segment_lengths(self):
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    @cached_property
    def vertex_weights(self):
        w = np.zeros(len(self.vertices))
        e = self.edges
        np.add.at(w, e[:, 0], 0.5 * self.segment_lengths)
        np.add.at(w, e[:, 1], 0.5 * self.segment_lengths)
        return w

    def neighborhoods(self, rings=2):
        nv = len(self.vertices)
        rows = []
        for i in range(nv):
            cand = [i + d for d in range(-rings, rings + 1) if d]
            if self.closed:
                rows.append([c % nv for c in cand])
            else:
                lo, hi = max(0, i - rings), min(nv - 1, i + rings)
                # keep the stencil width at the ends
                if lo == 0:
                    hi = min(nv - 1, 2 * rings)
                if hi == nv - 1:
                    lo = max(0, nv - 1 - 2 * rings)
                rows.append([c for c in range(lo, hi + 1) if c != i])
        return _pad(rows)

    def boundary(self, resolution=None):
        if self.closed:
            return empty_boundary(self.ambient_dim)
        V = self.vertices
        idx = np.array([0, len(V) - 1])
        nu = np.vstack([V[0] - V[1], V[-1] - V[-2]])
        nu /= np.linalg.norm(nu, axis=1)[:, None]
        geo = self.geometry
        return BoundarySet(V[idx], geo["XT"][idx], nu, np.ones(2))

    def refine(self):
        V = self.vertices
        e = self.edges
        mid = self._snapped(0.5 * (V[e[:, 0]] + V[e[:, 1]]))
        nv = len(V)
        out = np.empty((nv + len(mid), V.shape[1]))
        out[0::2][:nv] = V
        out[1::2][:len(mid)] = mid
        if not self.closed:
            out = out[:2 * nv - 1]
        return PolylineCurve(out, closed=self.closed, snap=self.snap, name=self.name)

    def rescale(self, t):
        if not t > 0:
            raise DomainError("scale must be positive")
        return PolylineCurve(self.vertices / t, closed=self.closed, snap=self._scaled_snap(t),
                             name=self.name)
