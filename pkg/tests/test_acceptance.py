"""Acceptance criteria AC1-AC12, one test each.

Every test prints a single ``ACn PASS|FAIL ...`` line with the measured
numbers before asserting, so the run log doubles as a scorecard.
"""
import math
import subprocess
import sys
import time
from importlib import resources

import numpy as np
import pytest

from shrinkerlab import catalog
from shrinkerlab.cones import radial_mass_profile
from shrinkerlab.functionals import bundled_test_functions, eval_F, eval_F_prime, eval_Xi
from shrinkerlab.geom import (GraphFunction, Plane, RoundCylinder, RoundSphere, cylinder_mesh,
                              drift_identity_residual, icosphere, interior_samples,
                              read_graph_table, refine)
from shrinkerlab.graphs import graph_residual, heat_route_order, rescaled_heat_check, solve_fixture
from shrinkerlab.moment import (MomentFunction, bump_fixture, constancy_test, laplace_asymptotic_I,
                                laplace_scan, moment_separation)
from shrinkerlab.monotonicity import verify_monotonicity
from shrinkerlab.regularity import alpha_sup_scan, eval_I, volume_growth

PLANE = Plane(n=2, m=1)
EXTERIOR = Plane(n=2, m=1, boundary_radius=1.0)
SPHERE = RoundSphere(n=2, rho=2.0)
CYLINDER = RoundCylinder(k=1, n=2, rho=math.sqrt(2))


@pytest.fixture
def verdict(capsys):
    def report(label, ok, detail):
        with capsys.disabled():
            print(f"\n{label} {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return report


def orders(sups):
    return [math.log2(a / b) for a, b in zip(sups, sups[1:])]


def test_ac01_gaussian_area_normalization(verdict):
    start = time.perf_counter()
    errs = [abs(eval_F(PLANE, t) - 1) for t in (0.5, 1.0, 2.0, 4.0)]
    elapsed = time.perf_counter() - start
    verdict("AC1", max(errs) < 1e-8 and elapsed < 1.0,
            f"max|F-1|={max(errs):.2e} runtime={elapsed:.3f}s")


def test_ac02_monotonicity_identity(verdict):
    exact = math.exp(-1 / 16) - math.exp(-1 / 4)
    start = time.perf_counter()
    led = verify_monotonicity(EXTERIOR, 1.0, 4.0)
    elapsed = time.perf_counter() - start
    ok = (abs(led.lhs - exact) < 1e-6 and abs(led.boundary - exact) < 1e-6
          and abs(led.defect) < 1e-6 and elapsed < 5.0)
    verdict("AC2", ok, f"lhs={led.lhs:.9f} boundary={led.boundary:.9f} exact={exact:.9f} "
                       f"defect={led.defect:.1e} runtime={elapsed:.2f}s")


def test_ac03_criticality_at_one(verdict):
    worst_crit, worst_fd, signs = 0.0, 0.0, True
    dt = 1e-3
    for s in (SPHERE, CYLINDER):
        worst_crit = max(worst_crit, abs(eval_F_prime(s, 1.0)))
        signs &= eval_F_prime(s, 0.9) > 0 > eval_F_prime(s, 1.1)
        for t in (0.5, 0.9, 1.0, 1.7, 4.0):
            fd = (eval_F(s, t + dt) - eval_F(s, t - dt)) / (2 * dt)
            worst_fd = max(worst_fd, abs(eval_F_prime(s, t) - fd))
    limit = max(1e-6, 10 * dt * dt)
    verdict("AC3", signs and worst_crit < 1e-8 and worst_fd <= limit,
            f"sign_change={signs} max|F'_1|={worst_crit:.1e} max|F'-fd|={worst_fd:.1e} "
            f"limit={limit:.0e}")


def test_ac04_drift_identity_convergence(verdict):
    sphere = [drift_identity_residual(icosphere(rho=2.0, level=lv)).sup for lv in (2, 3, 4)]
    cyl, s = [], cylinder_mesh(n_theta=32)
    for _ in range(3):
        cyl.append(drift_identity_residual(s).sup)
        s = refine(s)
    o_s, o_c = orders(sphere), orders(cyl)
    ok = min(o_s + o_c) >= 1.9 and sphere[-1] < 1e-3 and cyl[-1] < 1e-3
    fmt = lambda vals: ",".join(f"{v:.2g}" for v in vals)
    verdict("AC4", ok, f"sphere sups={fmt(sphere)} orders={fmt(o_s)}; "
                       f"cylinder sups={fmt(cyl)} orders={fmt(o_c)}")


def test_ac05_gap_threshold_values(verdict):
    sphere = interior_samples(icosphere(rho=2.0, level=4))
    cyl = interior_samples(refine(refine(cylinder_mesh(n_theta=32))))
    errs = [float(np.max(np.abs(ss.B_norm ** 2 - 0.5))) for ss in (sphere, cyl)]
    verdict("AC5", max(errs) < 1e-4,
            f"max||B|^2-0.5| sphere={errs[0]:.1e} cylinder={errs[1]:.1e}")


def test_ac06_cone_constancy(verdict):
    radii = [0.5, 1.0, 2.0, 4.0, 8.0]
    phis = bundled_test_functions(3)
    spread = max(radial_mass_profile(PLANE, phi, radii).spread for phi in phis)
    drift = max(abs(eval_Xi(PLANE, phi, t) - eval_Xi(PLANE, phi, 1.0))
                for phi in phis for t in np.geomspace(0.25, 16, 9))
    verdict("AC6", spread < 1e-8 and drift < 1e-8,
            f"profile spread={spread:.1e} max|Xi_t-Xi_1|={drift:.1e} over {len(phis)} phi")


def test_ac07_moment_lemma(verdict):
    details, ok = [], True
    for n, value in ((1, 0.5), (2, 1 / math.pi)):
        res = constancy_test(MomentFunction.power(n))
        err = float(np.max(np.abs(res.values - value)))
        ok &= res.spread < 1e-8 and err < 1e-8
        details.append(f"n={n} spread={res.spread:.1e} err={err:.1e}")
    for sign in (1, -1):
        V = bump_fixture(sign=sign)
        detected = not constancy_test(V).homogeneous
        got = moment_separation(V, [200], r_peak=2.0)[0].sign
        ok &= detected and got == sign
        details.append(f"bump{sign:+d} detected={detected} sign={got:+d}")
    verdict("AC7", ok, "; ".join(details))


def test_ac08_laplace_asymptotic(verdict):
    details, ok = [], True
    for p, bound in ((1e4, 0.02), (1e6, 0.002)):
        start = time.perf_counter()
        rel = abs(laplace_asymptotic_I(p) / math.sqrt(math.pi) - 1)
        elapsed = time.perf_counter() - start
        ok &= rel <= bound and elapsed < 1.0
        details.append(f"p={p:.0e} rel={rel:.2e} runtime={elapsed:.3f}s")
    _, monotone = laplace_scan([1e2, 1e3, 1e4, 1e5, 1e6])
    verdict("AC8", ok and monotone, "; ".join(details) + f"; monotone={monotone}")


def test_ac09_eps_regularity_quantity(verdict):
    plane = eval_I(PLANE, [4.0, 0.0, 0.0], -0.01, 2.0).value
    cyl = eval_I(CYLINDER, [math.sqrt(2), 0.0, math.sqrt(14.0)], -0.01, 2.0)
    alpha_err = max(abs(alpha_sup_scan(a).sup - 1) for a in (0.1, 0.25, 0.5, 0.75, 1.0))
    ok = plane == 0.0 and cyl.chain_holds and alpha_err <= 1e-4
    verdict("AC9", ok, f"I_plane={plane} I_cyl={cyl.value:.4e} chain={cyl.chain_bound:.4e} "
                       f"max|alpha sup-1|={alpha_err:.1e}")


def test_ac10_volume_growth(verdict):
    ext = volume_growth(EXTERIOR, 0.0, [2.0, 4.0, 8.0, 16.0, 32.0, 50.0])
    rel = abs(ext.values[-1] / math.pi - 1)
    end = volume_growth(RoundCylinder(k=1, n=2, rho=math.sqrt(2), boundary_radius=2.0),
                        0.0, [4.0, 8.0, 16.0, 32.0, 50.0])
    ok = rel < 0.01 and ext.hypothesis_met and not end.hypothesis_met
    verdict("AC10", ok, f"V0(50)/pi-1={rel:.2e} plane_hypothesis={ext.hypothesis_met} "
                        f"cylinder_hypothesis={end.hypothesis_met}")


def test_ac11_graph_system(verdict):
    linear = max(graph_residual(GraphFunction.from_callable(
        lambda x, A=np.atleast_2d(A): x @ A.T, 4.0, 12.0, 32, 24, m=len(A))).sup_all
        for A in ([[0.2, 0.1]], [[0.3, -0.2], [0.1, 0.4]]))
    newton = solve_fixture().residual
    fixtures = sorted(catalog.PACKAGE_FIXTURES.glob("*.graph"))
    violations = sum(rescaled_heat_check(read_graph_table(f)).violations for f in fixtures)
    _, route_orders = heat_route_order(
        [solve_fixture(h=h).graph for h in (0.25, 0.125, 0.0625)])
    ok = (linear < 1e-12 and newton < 1e-10 and len(fixtures) >= 1 and violations == 0
          and min(route_orders) >= 1.9)
    verdict("AC11", ok, f"linear={linear:.1e} newton={newton:.1e} "
                        f"violations={violations} on {len(fixtures)} fixtures "
                        f"route orders={[round(o, 2) for o in route_orders]}")


def _suite_bodies(out):
    return {p.name: p.read_text().splitlines()[1:] for p in sorted(out.glob("*.csv"))}


def test_ac12_determinism(verdict, tmp_path):
    config = resources.files("shrinkerlab") / "configs" / "full_suite.toml"
    bodies, codes = [], []
    for jobs in (1, 8):
        out = tmp_path / f"jobs{jobs}"
        proc = subprocess.run([sys.executable, "-m", "shrinkerlab", "run", "--config",
                               str(config), "--jobs", str(jobs), "--out-dir", str(out)],
                              capture_output=True, text=True)
        codes.append(proc.returncode)
        bodies.append(_suite_bodies(out))
    same = bodies[0] == bodies[1] and len(bodies[0]) > 1
    verdict("AC12", same and codes == [0, 0],
            f"exit codes={codes} csv files={len(bodies[0])} identical={same}")
