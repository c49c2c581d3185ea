import math

import numpy as np
import pytest

from shrinkerlab.errors import ConvergenceError, DomainError, PreconditionError
from shrinkerlab.geom import GraphFunction
from shrinkerlab.graphs import (boundary_data, decay_constants, graph_residual, heat_constants,
                                linear_fit, perturbed_linear_data, rescaled_heat_check,
                                rigidity_echo, solve_fixture, solve_graph_shrinker)


def linear_graph(A, r_inner=4.0, r_outer=12.0, n_r=32, n_theta=24):
    A = np.atleast_2d(A)
    return GraphFunction.from_callable(lambda x: x @ A.T, r_inner, r_outer, n_r, n_theta,
                                       m=A.shape[0])


@pytest.fixture(scope="module")
def fixture_graph():
    return solve_fixture()


@pytest.mark.parametrize("A", [[0.2, 0.1], [[0.3, -0.2], [0.1, 0.4]]])
def test_linear_graphs_solve_the_system(A):
    assert graph_residual(linear_graph(A)).sup_all < 1e-12


def test_cone_residual_matches_closed_form():
    # u = a|x| is degree-one homogeneous, so only g^{ij} u_ij = a/|x| remains
    u = GraphFunction.from_callable(lambda x: 0.3 * np.linalg.norm(x, axis=-1), 2.0, 8.0, 48, 32)
    field = graph_residual(u).field[0]
    r = u.r[:, None]
    assert np.max(np.abs(field[1:-1] - (0.3 / r)[1:-1])) < 1e-6


def test_quadratic_residual_is_exact_on_any_grid():
    f = lambda x: np.einsum("...i,...i->...", x, x) / 100
    vals = []
    for n_r in (24, 48):
        u = GraphFunction.from_callable(f, 2.0, 6.0, n_r, 32)
        k = n_r // 2
        vals.append(graph_residual(u).field[0, k, 0])
    # u = a r^2: g^{ij} u_ij = 2a (1 + 1/(1 + 4a^2 r^2)) and -u + x.Du = a r^2
    a, r = 0.01, 4.0
    exact = 2 * a * (1 + 1 / (1 + 4 * a * a * r * r)) - 0.5 * a * r * r
    assert all(abs(v - exact) < 1e-9 for v in vals)


def test_decay_constants_of_linear_graph():
    A = np.array([0.2, 0.0])
    d = decay_constants(linear_graph(A))
    assert math.isclose(d.c[0], 0.2, rel_tol=1e-12)
    assert math.isclose(d.c[1], 0.2, rel_tol=1e-9)
    assert d.c[2] < 1e-10
    with pytest.raises(DomainError):
        decay_constants(linear_graph(A, r_inner=0.5))


def test_newton_fixture_converges(fixture_graph):
    rep = fixture_graph
    assert rep.residual < 1e-10
    assert rep.graph.r_inner == 4.0 and rep.graph.r_outer == 16.0
    assert graph_residual(rep.graph).sup < 1e-9
    # inner data are the perturbed linear function
    inner, _ = boundary_data(perturbed_linear_data(), 4.0, 16.0, rep.graph.n_theta)
    assert np.allclose(rep.graph.values[:, 0], inner)


def test_fixture_does_not_depend_on_extension():
    a = solve_fixture(h=0.25, r_extended=24.0).graph
    b = solve_fixture(h=0.25, r_extended=32.0).graph
    assert np.max(np.abs(a.values - b.values)) < 1e-6


def test_newton_reproduces_linear_solution():
    A = (0.2, -0.1)
    inner, outer = boundary_data(lambda x: x @ np.array(A), 4.0, 8.0, 16)
    rep = solve_graph_shrinker(inner, outer, 4.0, 8.0, 32)
    exact = linear_graph(A, 4.0, 8.0, 32, 16)
    assert np.max(np.abs(rep.graph.values - exact.values)) < 1e-10


def test_newton_reports_history_on_failure():
    inner, outer = boundary_data(perturbed_linear_data(), 4.0, 24.0, 32)
    with pytest.raises(ConvergenceError) as exc:
        solve_graph_shrinker(inner, outer, 4.0, 24.0, 160, max_iter=1)
    assert len(exc.value.history) == 2


def test_heat_check_on_fixture(fixture_graph):
    hc = rescaled_heat_check(fixture_graph.graph)
    assert hc.violations == 0
    assert hc.min_margin > 0
    assert hc.route_gap < 1e-4
    c1p, cM, c2 = heat_constants(fixture_graph.graph)
    assert math.isclose(c2, c1p * cM)


def test_heat_check_needs_small_gradient():
    with pytest.raises(PreconditionError):
        heat_constants(linear_graph([0.6, 0.0]))
    with pytest.raises(PreconditionError):
        rescaled_heat_check(GraphFunction.from_callable(
            lambda x: np.einsum("...i,...i->...", x, x) / 100, 4.0, 8.0, 16, 16))


def test_heat_check_on_linear_graph_is_trivial():
    hc = rescaled_heat_check(linear_graph([0.2, 0.1]))
    assert hc.violations == 0
    assert max(float(np.nanmax(b)) for b in hc.route_b) < 1e-12


def test_rigidity_echo():
    lin = rigidity_echo(linear_graph([0.2, 0.1]))
    assert lin.decaying and lin.linear and lin.consistent
    A, sup = linear_fit(linear_graph([0.2, 0.1]))
    assert np.allclose(A, [[0.2, 0.1]]) and sup < 1e-12


def test_rigidity_echo_on_fixture(fixture_graph):
    echo = rigidity_echo(fixture_graph.graph)
    assert not echo.linear and echo.consistent
