import math

import numpy as np
import pytest

from shrinkerlab.errors import DomainError, PreconditionError
from shrinkerlab.geom import Plane, RoundCylinder, RoundSphere
from shrinkerlab.regularity import (AnnulusMissNotice, alpha_sup_scan, annulus_profile,
                                    curvature_estimate_ratio, curvature_ratio_scan, eval_I,
                                    sphere_sup_curvature, volume_growth)

RHO = math.sqrt(2)
CYLINDER = RoundCylinder(k=1, n=2, rho=RHO)
PLANE = Plane(n=2, m=1)


def cylinder_ball_area(R):
    return 2 * math.pi * RHO * 2 * math.sqrt(R * R - RHO * RHO) if R > RHO else 0.0


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
def test_cylinder_annulus_closed_form(p):
    radii = [1.0, 2.0, 4.0, 8.0]
    prof = annulus_profile(CYLINDER, p, radii)
    # |B|^2 = 1/2 everywhere on the cylinder
    expected = [0.5 ** (p / 2) * (cylinder_ball_area(2 * r) - cylinder_ball_area(r))
                for r in radii]
    assert np.allclose(prof.values, expected, rtol=1e-6)
    assert np.array_equal(prof.running_sup, np.maximum.accumulate(prof.values[::-1])[::-1])
    assert not prof.decaying


def test_plane_profile_is_zero_and_decaying():
    prof = annulus_profile(PLANE, 2.0, [1.0, 2.0, 4.0])
    assert np.all(prof.values == 0) and prof.decaying


def test_profile_warns_when_annulus_misses():
    with pytest.warns(AnnulusMissNotice):
        annulus_profile(RoundSphere(n=2, rho=2.0), 2.0, [0.25, 1.5])


def test_profile_domain():
    with pytest.raises(DomainError):
        annulus_profile(PLANE, 1.0, [1.0, 2.0])
    with pytest.raises(DomainError):
        annulus_profile(PLANE, 2.0, [2.0, 1.0])


def test_eval_I_vanishes_on_plane():
    res = eval_I(PLANE, [4.0, 0.0, 0.0], -0.01, 2.0)
    assert res.value == 0.0
    assert res.specialized


def test_eval_I_obeys_chain_bound_on_cylinder():
    X0 = [RHO, 0.0, math.sqrt(14.0)]
    res = eval_I(CYLINDER, X0, -0.01, 2.0)
    assert res.value > 0
    assert res.chain_holds
    # |X0| = 4 is too close for the annulus containment argument
    assert not res.containment
    finer = eval_I(CYLINDER, X0, -0.01, 2.0, r_count=257)
    assert abs(finer.value - res.value) <= 1e-3 * res.value


def test_eval_I_preconditions():
    with pytest.raises(DomainError):
        eval_I(PLANE, [4.0, 0.0, 0.0], 0.0, 2.0)
    with pytest.raises(DomainError):
        eval_I(PLANE, [4.0, 0.0, 0.0], -0.5, 5.0)
    with pytest.raises(DomainError):
        eval_I(PLANE, [4.0, 0.0], -0.5, 2.0)
    with pytest.raises(PreconditionError):
        eval_I(RoundSphere(n=2, rho=1.0), [4.0, 0.0, 0.0], -0.5, 2.0)


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.5, 0.75, 1.0])
def test_alpha_supremum_is_one(alpha):
    scan = alpha_sup_scan(alpha)
    assert abs(scan.sup - 1.0) <= 1e-4
    assert scan.monotone
    assert scan.sup <= 1.0 + 1e-12


def test_alpha_domain():
    with pytest.raises(DomainError):
        alpha_sup_scan(1.5)


def test_exterior_plane_volume_growth_tends_to_pi():
    ext = Plane(n=2, m=1, boundary_radius=1.0)
    radii = [2.0, 4.0, 8.0, 16.0, 32.0, 50.0]
    c = volume_growth(ext, 0.0, radii)
    assert np.allclose(c.values, [math.pi * (1 - 1 / r ** 2) for r in radii], rtol=1e-8)
    assert abs(c.values[-1] / math.pi - 1) < 0.01
    assert c.residual_ok(1e-9)
    assert c.hypothesis_met


def test_volume_growth_slope_follows_s():
    ext = Plane(n=2, m=1, boundary_radius=1.0)
    radii = np.array([4.0, 8.0, 16.0, 32.0])
    c = volume_growth(ext, 0.5, radii)
    exact = np.polyfit(np.log(radii), np.log(np.sqrt(radii) * math.pi * (1 - radii ** -2)), 1)[0]
    assert abs(c.log_slope(4.0, 32.0) - exact) < 1e-8
    assert c.residual_ok(1e-9)


def test_cylinder_end_flags_unmet_hypothesis():
    end = RoundCylinder(k=1, n=2, rho=RHO, boundary_radius=2.0)
    c = volume_growth(end, 0.0, [4.0, 8.0, 16.0, 32.0, 50.0])
    assert not c.hypothesis_met
    assert c.residual_ok(1e-9)


def test_sphere_sup_curvature():
    assert math.isclose(sphere_sup_curvature(CYLINDER, 5.0), 1 / RHO, rel_tol=1e-9)
    assert sphere_sup_curvature(PLANE, 5.0) == 0.0


def test_curvature_ratio():
    prof = annulus_profile(PLANE, 2.0, [1.0, 2.0, 4.0])
    r = curvature_estimate_ratio(PLANE, 2.0, 1.0, 5.0, prof)
    assert r.ratio == 0.0 and r.hypothesis_met
    cyl = annulus_profile(CYLINDER, 2.0, [1.0, 2.0, 4.0, 8.0])
    scan = curvature_ratio_scan(CYLINDER, 2.0, [1.0], [5.0, 10.0], cyl)
    assert not scan.hypothesis_met and math.isfinite(scan.empirical_c)
    with pytest.raises(DomainError):
        curvature_estimate_ratio(PLANE, 2.0, 1.0, 3.0, prof)
