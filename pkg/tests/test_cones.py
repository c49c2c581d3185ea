import math
import warnings

import numpy as np
import pytest

from shrinkerlab.cones import (SkippedRadiusNotice, cone_deviation, cone_report,
                               normalized_cross_section, radial_mass_profile, rescale,
                               xi_limit_consistency)
from shrinkerlab.errors import DomainError
from shrinkerlab.functionals import bundled_test_functions, constant_function, eval_Xi
from shrinkerlab.geom import Plane, RoundCylinder, RoundSphere, cylinder_mesh

PLANE = Plane(n=2, m=1)
CYLINDER = RoundCylinder(k=1, n=2, rho=math.sqrt(2))


def test_plane_profiles_are_constant_for_every_bundled_phi():
    radii = [0.5, 1.0, 2.0, 4.0, 8.0]
    expected = {"const": math.pi, "xi_1": 0.0, "xi_2": 0.0, "xi_3": 0.0,
                "xi_1^2": math.pi / 2, "xi_2^2": math.pi / 2, "xi_3^2": 0.0}
    for phi in bundled_test_functions(3):
        prof = radial_mass_profile(PLANE, phi, radii)
        assert prof.spread < 1e-8
        assert np.allclose(prof.values, expected[phi.name], atol=1e-10)


@pytest.mark.parametrize("t", [0.25, 0.5, 2.0, 4.0, 16.0])
def test_xi_scale_invariance_on_plane(t):
    for phi in bundled_test_functions(3):
        assert abs(eval_Xi(PLANE, phi, t) - eval_Xi(PLANE, phi, 1.0)) < 1e-8


def test_radii_inside_the_hole_are_skipped():
    ext = Plane(n=2, m=1, boundary_radius=1.0)
    with pytest.warns(SkippedRadiusNotice):
        prof = radial_mass_profile(ext, constant_function(), [0.5, 2.0, 4.0])
    assert list(prof.radii) == [2.0, 4.0]
    assert np.allclose(prof.values, [math.pi * (1 - 1 / 4), math.pi * (1 - 1 / 16)])


def test_rescale_shrinks_the_sphere():
    assert math.isclose(rescale(RoundSphere(n=2, rho=2.0), 2.0).rho, 1.0)


def test_cross_sections_lie_on_unit_sphere():
    pts = normalized_cross_section(PLANE, 3.0, 1.0, count=64)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
    assert np.allclose(pts[:, 2], 0.0)


def test_cylinder_blow_downs_approach_a_line():
    d1 = cone_deviation(CYLINDER, (1.0, 2.0), r=4.0, count=128)
    d2 = cone_deviation(CYLINDER, (2.0, 4.0), r=4.0, count=128)
    assert d2 < d1
    assert cone_deviation(PLANE, (1.0, 5.0), r=1.0) < 1e-12


def test_empty_cross_section():
    with pytest.raises(DomainError):
        normalized_cross_section(RoundSphere(n=2, rho=2.0), 4.0, 1.0)


def test_mesh_cross_section_sampling_is_seeded():
    mesh = cylinder_mesh(n_theta=32)
    a = normalized_cross_section(mesh, 1.0, 2.0, count=16, seed=5)
    b = normalized_cross_section(mesh, 1.0, 2.0, count=16, seed=5)
    assert np.array_equal(a, b)


def test_xi_limit_consistency():
    c = xi_limit_consistency(PLANE, constant_function(), [1.0, 2.0, 4.0, 8.0])
    assert c.spread < 1e-10
    with pytest.raises(DomainError):
        xi_limit_consistency(PLANE, constant_function(), [2.0, 1.0])


def test_cone_report_collects_errors_and_profiles():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        # a centred sphere meets dB_r only when r equals its radius
        rep = cone_report(RoundSphere(n=2, rho=2.0), [1.0, 2.0], r=2.0,
                          profile_radii=[1.0, 2.0])
    assert len(rep.errors) == 1 and list(rep.cross_sections) == [1.0]
    plane = cone_report(PLANE, [1.0, 2.0], profile_radii=[1.0, 2.0, 3.0])
    assert plane.profile_constant and plane.deviation < 1e-12
