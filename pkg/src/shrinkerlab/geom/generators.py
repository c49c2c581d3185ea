"""Discretizations of the catalog shrinkers, with projectors for refinement."""

import math

import numpy as np

from ..errors import DomainError
from .discrete import PolylineCurve, TriangleMesh


def sphere_projector(rho, center=None):
    c = np.zeros(3) if center is None else np.asarray(center, dtype=float)

    def snap(pts):
        d = np.asarray(pts) - c
        return c + rho * d / np.linalg.norm(d, axis=1)[:, None]
    return snap


def cylinder_projector(rho):
    """Radial projection onto {x^2 + y^2 = rho^2} in R^3, keeping z."""

    def snap(pts):
        p = np.array(pts, dtype=float)
        r = np.linalg.norm(p[:, :2], axis=1)
        p[:, :2] *= (rho / r)[:, None]
        return p
    return snap


def icosphere(rho=2.0, level=2):
    """Icosahedron subdivided ``level`` times and projected to radius ``rho``."""
    if rho <= 0:
        raise DomainError("sphere radius must be positive")
    g = (1 + math.sqrt(5)) / 2
    v = np.array([[-1, g, 0], [1, g, 0], [-1, -g, 0], [1, -g, 0],
                  [0, -1, g], [0, 1, g], [0, -1, -g], [0, 1, -g],
                  [g, 0, -1], [g, 0, 1], [-g, 0, -1], [-g, 0, 1]], dtype=float)
    f = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    snap = sphere_projector(rho)
    mesh = TriangleMesh(snap(v), f, snap=snap, name=f"icosphere(rho={rho:g})")
    for _ in range(level):
        mesh = mesh.refine()
    return mesh


def cylinder_mesh(rho=math.sqrt(2.0), half_length=3.0, n_theta=16, n_z=None):
    """Truncated round cylinder ``|z| <= half_length`` from a staggered grid.

    Rows alternate a half-step angular offset so that triangles are close to
    equilateral when ``n_z`` is left to default.
    """
    if rho <= 0:
        raise DomainError("cylinder radius must be positive")
    dtheta = 2 * math.pi / n_theta
    if n_z is None:
        n_z = max(2, round(2 * half_length / (rho * dtheta * math.sqrt(3) / 2)))
    z = np.linspace(-half_length, half_length, n_z + 1)
    rows = []
    for i, zi in enumerate(z):
        th = dtheta * (np.arange(n_theta) + 0.5 * (i % 2))
        rows.append(np.column_stack([rho * np.cos(th), rho * np.sin(th), np.full(n_theta, zi)]))
    verts = np.vstack(rows)
    faces = []
    for i in range(n_z):
        a0, b0 = i * n_theta, (i + 1) * n_theta
        for j in range(n_theta):
            j1 = (j + 1) % n_theta
            if i % 2 == 0:
                faces.append([a0 + j, a0 + j1, b0 + j])
                faces.append([a0 + j1, b0 + j1, b0 + j])
            else:
                faces.append([a0 + j, b0 + j1, b0 + j])
                faces.append([a0 + j, a0 + j1, b0 + j1])
    return TriangleMesh(verts, faces, snap=cylinder_projector(rho),
                        name=f"cylinder(rho={rho:g}, |z|<={half_length:g})")


def circle_polyline(rho=math.sqrt(2.0), count=64):
    th = 2 * math.pi * np.arange(count) / count
    pts = rho * np.column_stack([np.cos(th), np.sin(th)])

    def snap(p):
        p = np.asarray(p)
        return rho * p / np.linalg.norm(p, axis=1)[:, None]
    return PolylineCurve(pts, closed=True, snap=snap, name=f"circle(rho={rho:g})")
