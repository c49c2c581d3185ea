import math

import pytest

from shrinkerlab.errors import DomainError, PreconditionError
from shrinkerlab.functionals import constant_function, eval_F, quadratic_function
from shrinkerlab.geom import Plane, RoundCylinder, RoundSphere
from shrinkerlab.monotonicity import (c1_constant, dyadic_sums, verify_monotonicity,
                                      xi_derivative_bound, xi_limit_increments)

EXTERIOR = Plane(n=2, m=1, boundary_radius=1.0)
CYLINDER = RoundCylinder(k=1, n=2, rho=math.sqrt(2))


def test_exterior_plane_ledger_matches_closed_form():
    led = verify_monotonicity(EXTERIOR, 1.0, 4.0)
    exact = math.exp(-1 / 16) - math.exp(-1 / 4)
    assert abs(led.lhs - exact) < 1e-6
    assert abs(led.boundary - exact) < 1e-6
    assert led.normal == 0.0
    assert abs(led.defect) < 1e-6
    assert led.within()
    assert [r[0] for r in led.rows()] == ["F_t1", "F_t2", "lhs", "boundary", "normal", "defect"]


@pytest.mark.parametrize("surface, t1, t2", [
    (RoundSphere(n=2, rho=2.0), 0.5, 2.0),
    (CYLINDER, 1.0, 3.0),
])
def test_closed_shrinkers_balance_with_normal_term(surface, t1, t2):
    led = verify_monotonicity(surface, t1, t2)
    assert led.boundary == 0.0
    assert math.isclose(led.lhs, eval_F(surface, t2) - eval_F(surface, t1), rel_tol=1e-12)
    assert abs(led.defect) <= max(led.budget, 1e-12)


def test_ledger_rejects_non_shrinker_and_bad_interval():
    with pytest.raises(PreconditionError):
        verify_monotonicity(RoundSphere(n=2, rho=1.0), 1.0, 2.0)
    with pytest.raises(DomainError):
        verify_monotonicity(EXTERIOR, 2.0, 1.0)


def test_dyadic_sums_closed_form():
    S1, S2 = dyadic_sums(2, 16.0, 1.0)
    # n = 2: every shell weight is 4, shells between R and sqrt(t) count 1 + log_4(t / R^2)
    expected = 4 * math.fsum(math.exp(-4.0 ** (k - 1)) for k in range(8))
    assert math.isclose(S1, expected, rel_tol=1e-15)
    assert S2 == 12.0


def test_c1_is_attained_at_jumps():
    c0, R = 1.0, 1.0
    best = c1_constant(2, c0, R)
    for t in (1.5, 3.0, 10.0, 100.0):
        S1, S2 = dyadic_sums(2, t, R)
        assert c0 * (S1 + S2) / (4 * math.pi * (1 + math.log(t))) <= best + 1e-15


@pytest.mark.parametrize("phi", [constant_function(), quadratic_function(3)])
def test_xi_derivative_bound_holds_on_cylinder(phi):
    for t in (1.5, 2.0, 4.0):
        b = xi_derivative_bound(CYLINDER, phi, t)
        # with phi = 1 and no boundary the bound is attained: |d/dt F_t| = |G_t|
        assert b.holds and b.margin >= -b.numeric_error


def test_xi_derivative_bound_rejects_t_near_one():
    with pytest.raises(DomainError):
        xi_derivative_bound(CYLINDER, constant_function(), 1.01)


def test_xi_increments_dominated():
    echo = xi_limit_increments(CYLINDER, constant_function(), (1, 4))
    assert echo.scales == [2.0, 4.0, 8.0, 16.0]
    assert echo.dominated
