import math
import warnings

import numpy as np
import pytest

from shrinkerlab.errors import DomainError, PreconditionError, TruncationError
from shrinkerlab.functionals import (OriginSampleWarning, boundary_term, bundled_test_functions,
                                     constant_function, coordinate_function, eval_F, eval_F_prime,
                                     eval_G, eval_Xi, quadratic_function, resolve_test_function)
from shrinkerlab.geom import Plane, QuadratureSpec, RoundCylinder, RoundSphere

SPHERE = RoundSphere(n=2, rho=2.0)
CYLINDER = RoundCylinder(k=1, n=2, rho=math.sqrt(2))
PLANE = Plane(n=2, m=1)
EXTERIOR = Plane(n=2, m=1, boundary_radius=1.0)


def sphere_F(t, rho=2.0):
    return rho * rho / t * math.exp(-rho * rho / (4 * t))


def cylinder_F(t, rho=math.sqrt(2)):
    return rho * math.sqrt(math.pi / t) * math.exp(-rho * rho / (4 * t))


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 4.0])
def test_plane_has_unit_gaussian_area(t):
    assert abs(eval_F(PLANE, t) - 1.0) < 1e-8


@pytest.mark.parametrize("t", [0.25, 1.0, 3.0])
def test_closed_forms(t):
    assert math.isclose(eval_F(SPHERE, t), sphere_F(t), rel_tol=1e-10)
    assert math.isclose(eval_F(CYLINDER, t), cylinder_F(t), rel_tol=1e-10)
    assert math.isclose(eval_F(EXTERIOR, t), math.exp(-1 / (4 * t)), rel_tol=1e-10)


def test_F_prime_vanishes_at_critical_scale():
    for s in (SPHERE, CYLINDER):
        assert abs(eval_F_prime(s, 1.0)) < 1e-8
        assert eval_F_prime(s, 0.8) > 0 > eval_F_prime(s, 1.25)


@pytest.mark.parametrize("t", [0.5, 0.9, 1.7, 4.0])
def test_F_prime_matches_central_difference(t):
    dt = 1e-3
    for s in (SPHERE, CYLINDER, EXTERIOR):
        fd = (eval_F(s, t + dt) - eval_F(s, t - dt)) / (2 * dt)
        assert abs(eval_F_prime(s, t) - fd) <= max(1e-6, 10 * dt * dt)


def test_exterior_plane_boundary_term():
    assert math.isclose(boundary_term(EXTERIOR, 1.0).value, 0.25 * math.exp(-0.25),
                        rel_tol=1e-10)
    assert math.isclose(eval_F_prime(EXTERIOR, 1.0), 0.25 * math.exp(-0.25), rel_tol=1e-10)


def test_F_prime_requires_shrinker():
    with pytest.raises(PreconditionError):
        eval_F_prime(RoundSphere(n=2, rho=1.0), 1.0)
    # F itself is defined for any surface
    assert math.isclose(eval_F(RoundSphere(n=2, rho=1.0), 1.0), sphere_F(1.0, 1.0), rel_tol=1e-10)


def test_G_values_and_sign():
    assert eval_G(PLANE, 3.0) == 0.0
    assert eval_G(SPHERE, 1.0) == 0.0
    expected = -(1 / 16) * 0.75 * 4 * eval_F(SPHERE, 4.0)
    assert math.isclose(eval_G(SPHERE, 4.0), expected, rel_tol=1e-10)
    for s in (SPHERE, CYLINDER):
        for t in (0.25, 0.5, 2.0, 4.0):
            assert eval_G(s, t) * (t - 1) <= 0


def test_xi_with_constant_equals_F():
    for s in (SPHERE, CYLINDER, EXTERIOR):
        assert abs(eval_Xi(s, constant_function(), 1.5) - eval_F(s, 1.5)) < 1e-12


def test_xi_on_plane():
    phi = quadratic_function(1)
    vals = [eval_Xi(PLANE, phi, t) for t in (0.5, 1.0, 2.0)]
    assert all(abs(v - 0.5) < 1e-8 for v in vals)
    assert abs(eval_Xi(PLANE, quadratic_function(3), 1.0)) < 1e-15
    assert abs(eval_Xi(PLANE, coordinate_function(1), 1.0)) < 1e-12


def test_origin_samples_are_dropped_with_warning():
    from shrinkerlab.functionals import xi_integrand
    from shrinkerlab.geom.base import SampleSet

    X = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    ss = SampleSet(X=X, XT=X, XN=np.zeros_like(X), H=np.zeros_like(X),
                   B_norm=np.zeros(2), weight=np.ones(2))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        vals = xi_integrand(quadratic_function(1))(ss)
    assert list(vals) == [0.0, 1.0]
    assert any(issubclass(w.category, OriginSampleWarning) for w in caught)


def test_test_function_norms_bound_gradients():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(500, 3)) * rng.uniform(0.1, 10, size=(500, 1))
    for phi in bundled_test_functions(3):
        assert phi.gradient_bound_gap(X) <= 1e-12
    assert resolve_test_function("xi_2^2").name == "xi_2^2"
    with pytest.raises(DomainError):
        resolve_test_function("xi_0")


def test_truncation_error_suggests_radius():
    with pytest.raises(TruncationError) as exc:
        eval_F(PLANE, 1.0, QuadratureSpec(rho_max=3.0))
    assert exc.value.suggested_rho_max > 3.0
    ok = QuadratureSpec(rho_max=exc.value.suggested_rho_max * 1.5)
    assert abs(eval_F(PLANE, 1.0, ok) - 1.0) < 1e-8


def test_monotone_tail():
    base = eval_F(CYLINDER, 2.0)
    wider = eval_F(CYLINDER, 2.0, QuadratureSpec(rho_max=2 * QuadratureSpec().rho_for(2.0, 2)))
    assert abs(base - wider) < 1e-10


def test_bad_t():
    with pytest.raises(DomainError):
        eval_F(PLANE, 0.0)
