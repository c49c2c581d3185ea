import math

import numpy as np
import pytest

from shrinkerlab.errors import DomainError, PreconditionError
from shrinkerlab.geom import (GraphFunction, GraphPatch, Plane, QuadratureSpec, Region,
                              RoundCylinder, RoundSphere, TriangleMesh, circle_polyline,
                              cylinder_mesh, drift_identity_residual, icosphere, interior_samples,
                              read_graph_table, read_mesh, read_surface, refine, require_shrinker,
                              sample_geometry, shrinker_residual, surface_from_dict,
                              write_graph_table)
from shrinkerlab.geom.io import write_mesh


def _check_sample_invariants(g):
    X = g.X
    assert np.allclose(g.XT + g.XN, X, rtol=0, atol=1e-10 * max(1, np.linalg.norm(X)))
    assert math.isclose(g.XT @ g.XT + g.XN @ g.XN, X @ X, rel_tol=1e-10, abs_tol=1e-12)
    assert np.allclose(g.frame @ g.frame.T, np.eye(g.n), atol=1e-10)
    assert np.all(np.abs(g.frame @ g.H) <= 1e-8 * max(np.linalg.norm(g.H), 1e-300) + 1e-14)


@pytest.mark.parametrize("surface, point, H_norm, B_norm", [
    (RoundSphere(n=2, rho=2.0), [0.0, 0.0, 2.0], 1.0, math.sqrt(0.5)),
    (RoundCylinder(k=1, n=2, rho=math.sqrt(2)), [math.sqrt(2), 0.0, 3.0], 1 / math.sqrt(2),
     1 / math.sqrt(2)),
    (Plane(n=2, m=1), [1.5, -2.0, 0.0], 0.0, 0.0),
    (RoundSphere(n=1, rho=math.sqrt(2)), [1.0, 1.0], 1 / math.sqrt(2), 1 / math.sqrt(2)),
])
def test_analytic_pointwise_geometry(surface, point, H_norm, B_norm):
    g = sample_geometry(surface, point)
    _check_sample_invariants(g)
    assert math.isclose(np.linalg.norm(g.H), H_norm, abs_tol=1e-12)
    assert math.isclose(g.B_norm, B_norm, abs_tol=1e-12)
    # shrinker equation H = -X^N / 2
    assert np.allclose(g.H, -0.5 * g.XN, atol=1e-12)


def test_off_surface_point_rejected():
    with pytest.raises(DomainError):
        sample_geometry(RoundSphere(n=2, rho=2.0), [0.0, 0.0, 1.0])
    with pytest.raises(DomainError):
        sample_geometry(Plane(n=2, m=1, boundary_radius=1.0), [0.5, 0.0, 0.0])


def test_sample_sets_integrate_area():
    s = RoundSphere(n=2, rho=2.0)
    assert math.isclose(s.samples().integrate(), 16 * math.pi, rel_tol=1e-12)
    plane = Plane(n=2, m=1)
    assert math.isclose(plane.samples(Region.ball(3.0)).integrate(), 9 * math.pi, rel_tol=1e-10)
    ext = Plane(n=2, m=1, boundary_radius=1.0)
    assert math.isclose(ext.samples(Region.ball(3.0)).integrate(), 8 * math.pi, rel_tol=1e-10)


def test_exterior_plane_boundary_normal_points_inward_to_hole():
    b = Plane(n=2, m=1, boundary_radius=1.0).boundary()
    assert math.isclose(b.measure, 2 * math.pi, rel_tol=1e-12)
    # <X^T, nu> = -1 on the unit circle: nu points toward the removed disc
    assert np.allclose(np.einsum("ij,ij->i", b.XT, b.nu), -1.0)


@pytest.mark.parametrize("surface", [
    Plane(n=2, m=1), RoundSphere(n=2, rho=2.0), RoundCylinder(k=1, n=2, rho=math.sqrt(2)),
    RoundSphere(n=1, rho=math.sqrt(2)), RoundCylinder(k=1, n=3, rho=math.sqrt(2)),
])
def test_catalog_shrinkers_have_zero_residual(surface):
    assert shrinker_residual(surface).sup < 1e-12
    assert drift_identity_residual(surface).sup < 1e-10


def test_non_shrinker_sphere_is_rejected():
    s = RoundSphere(n=2, rho=1.0)
    res = shrinker_residual(s)
    # |H + X^N/2| = 2 - 1/2 on the unit sphere
    assert math.isclose(res.sup, 1.5, rel_tol=1e-12)
    with pytest.raises(PreconditionError) as exc:
        require_shrinker(s)
    assert math.isclose(exc.value.measured, 1.5)


def test_icosphere_curvature_converges():
    errs = []
    for level in (2, 3, 4):
        ss = interior_samples(icosphere(rho=2.0, level=level))
        errs.append(float(np.max(np.abs(ss.B_norm ** 2 - 0.5))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


def test_cylinder_mesh_drift_order():
    s = cylinder_mesh(n_theta=32)
    sups = []
    for _ in range(3):
        sups.append(drift_identity_residual(s).sup)
        s = refine(s)
    orders = [math.log2(a / b) for a, b in zip(sups, sups[1:])]
    assert min(orders) >= 1.9
    assert sups[-1] < 1e-3


def test_mesh_vertex_geometry_invariants():
    s = icosphere(rho=2.0, level=3)
    for i in (0, 17, 300):
        _check_sample_invariants(sample_geometry(s, i))
    with pytest.raises(DomainError):
        sample_geometry(s, len(s.vertices))


def test_polyline_circle_is_numerical_shrinker():
    c = circle_polyline(count=256)
    assert shrinker_residual(c).sup < 1e-3
    assert math.isclose(c.samples().integrate(), 2 * math.pi * math.sqrt(2), rel_tol=1e-4)


def test_mesh_roundtrip(tmp_path):
    s = icosphere(rho=2.0, level=1)
    path = tmp_path / "ico.mesh"
    write_mesh(path, s.vertices, s.faces)
    V, F, closed = read_mesh(path)
    assert np.array_equal(V, s.vertices) and np.array_equal(F, s.faces) and closed
    surf = surface_from_dict({"kind": "TriangleMesh", "mesh": "ico.mesh"}, base_dir=tmp_path)
    assert isinstance(surf, TriangleMesh)


def test_surface_file(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text('kind = "RoundCylinder"\nk = 1\nn = 2\nboundary_radius = 2.0\n')
    s = read_surface(p)
    assert isinstance(s, RoundCylinder) and s.boundary_radius == 2.0
    p.write_text('kind = "Torus"\n')
    with pytest.raises(DomainError):
        read_surface(p)
    p.write_text('kind = \n')
    with pytest.raises(DomainError, match="line 1"):
        read_surface(p)


def test_graph_table_roundtrip(tmp_path):
    g = GraphFunction.from_callable(lambda x: 0.3 * x[..., 0] - 0.1 * x[..., 1], 2.0, 6.0, 16, 12)
    path = tmp_path / "g.graph"
    write_graph_table(path, g, comment="linear")
    back = read_graph_table(path)
    assert np.array_equal(back.values, g.values)
    assert (back.r_inner, back.r_outer, back.n_r, back.n_theta) == (2.0, 6.0, 16, 12)
    patch = GraphPatch(back)
    assert patch.n == 2 and patch.ambient_dim == 3


def test_rescale_maps_sphere_radius():
    s = RoundSphere(n=2, rho=2.0).rescale(4.0)
    assert math.isclose(s.rho, 0.5)


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(tol=0)
    with pytest.raises(DomainError):
        QuadratureSpec(rho_max=-1.0)
