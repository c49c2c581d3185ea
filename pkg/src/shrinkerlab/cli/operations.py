"""Registry of scenario operations.

Each operation declares where its input comes from (a surface, a mass
function, a graph, or nothing), a typed parameter schema, optional
cross-parameter checks that run during validation, and a runner returning
an ``Outcome``. Checks are only declared when the scenario asks for them
(``expect``, ``max_*``, ``min_*``, ``require_*`` keys).
"""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import catalog
from ..errors import DomainError, ValidationError
from ..functionals import (bundled_test_functions, eval_F, eval_F_prime, eval_G, eval_Xi,
                           resolve_test_function)
from ..geom import (GraphFunction, GraphPatch, drift_identity_residual, interior_samples,
                    read_graph_table, read_surface, refine, shrinker_residual,
                    surface_from_dict)
from .params import REQUIRED, Param


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    limit: float


@dataclass
class Outcome:
    columns: list
    rows: list
    checks: list = field(default_factory=list)
    record: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Context:
    tol: float = 1e-8
    seed: int = 0
    base_dir: str = "."
    fixtures: str = None


@dataclass(frozen=True)
class Operation:
    name: str
    group: str
    anchor: str
    source: str  # surface, moment, graph, none
    params: dict
    run: object
    validate: object = None


REGISTRY = {}
GROUPS = ("functional", "monotonicity", "cone", "moment", "regularity", "graph")


def operation(name, group, anchor, source, params, validate=None):
    def deco(fn):
        REGISTRY[name] = Operation(name, group, anchor, source, params, fn, validate)
        return fn
    return deco


def tol_param(default=None):
    return Param("float", default, "positive", "check tolerance (defaults to --tol)")


def _tol(p, ctx):
    return p["tol"] if p.get("tol") is not None else ctx.tol


# -- sources -----------------------------------------------------------------------

def resolve_surface(ref, ctx):
    base = Path(ctx.base_dir)
    if isinstance(ref, dict):
        return surface_from_dict(ref, base_dir=base)
    if not isinstance(ref, str):
        raise ValidationError(f"surface must be an id, a file or a table, got {ref!r}")
    if ref.endswith(".toml"):
        return read_surface(base / ref)
    return catalog.lookup(ref, ("surface", "graph", "mesh"), ctx.fixtures).build()


def resolve_moment(ref, ctx):
    from ..moment import read_moment_function

    if isinstance(ref, str) and ref.endswith(".moment"):
        return read_moment_function(Path(ctx.base_dir) / ref)
    if not isinstance(ref, str):
        raise ValidationError(f"moment must be an id or a .moment file, got {ref!r}")
    return catalog.lookup(ref, ("moment",), ctx.fixtures).build()


def resolve_graph(ref, ctx):
    """A graph fixture id, a .graph file, or an inline linear graph table."""
    if isinstance(ref, dict):
        A = np.atleast_2d(np.asarray(ref.get("A", [0.0, 0.0]), dtype=float))
        if A.shape[1] != 2:
            raise ValidationError("linear graph needs A with two columns")
        try:
            shape = (float(ref["r_inner"]), float(ref["r_outer"]), int(ref["n_r"]),
                     int(ref["n_theta"]))
        except KeyError as exc:
            raise ValidationError(f"linear graph table is missing {exc.args[0]!r}") from None
        return GraphFunction.from_callable(lambda x: x @ A.T, *shape, m=A.shape[0])
    if not isinstance(ref, str):
        raise ValidationError(f"graph must be an id, a file or a table, got {ref!r}")
    if ref.endswith(".graph"):
        return read_graph_table(Path(ctx.base_dir) / ref)
    surface = catalog.lookup(ref, ("graph",), ctx.fixtures).build()
    if not isinstance(surface, GraphPatch):
        raise ValidationError(f"{ref!r} is not a graph fixture")
    return surface.graph


RESOLVERS = {"surface": resolve_surface, "moment": resolve_moment, "graph": resolve_graph}


def _phis(names, surface):
    if names is None:
        return bundled_test_functions(surface.ambient_dim)
    return [resolve_test_function(n) for n in names]


def _check_phis(src, p):
    for name in p.get("phi") or ():
        try:
            phi = resolve_test_function(name)
        except DomainError as exc:
            raise ValidationError(str(exc)) from None
        m = re.match(r"xi_(\d+)", name)
        if m and src is not None and int(m.group(1)) > src.ambient_dim:
            raise ValidationError(f"test function {phi.name} needs ambient dimension "
                                  f">= {m.group(1)}")


# -- functional ----------------------------------------------------------------------

@operation("eval_F", "functional", "Gaussian area F_t", "surface",
           {"t": Param("floats", REQUIRED, "positive"), "expect": Param("float"),
            "tol": tol_param()})
def op_eval_F(surface, p, ctx):
    vals = [eval_F(surface, t) for t in p["t"]]
    checks = []
    if p["expect"] is not None:
        err = max(abs(v - p["expect"]) for v in vals)
        checks.append(Check("F_t equals expect", err <= _tol(p, ctx), err, _tol(p, ctx)))
    return Outcome(["t", "F"], [(t, v) for t, v in zip(p["t"], vals)], checks)


def _validate_fd(src, p):
    if min(p["t"]) <= p["fd_step"]:
        raise ValidationError("every t must exceed fd_step")


@operation("eval_F_prime", "functional", "closed-form derivative dF_t/dt on shrinkers",
           "surface",
           {"t": Param("floats", REQUIRED, "ascending"), "fd_step": Param("float", 1e-3, "positive"),
            "require_fd_match": Param("bool", False), "require_criticality": Param("bool", False),
            "tol": tol_param()},
           validate=_validate_fd)
def op_eval_F_prime(surface, p, ctx):
    dt = p["fd_step"]
    limit = max(1e-6, 10 * dt * dt)
    rows, worst = [], 0.0
    for t in p["t"]:
        fp = eval_F_prime(surface, t)
        fd = (eval_F(surface, t + dt) - eval_F(surface, t - dt)) / (2 * dt)
        worst = max(worst, abs(fp - fd))
        rows.append((t, fp, fd, abs(fp - fd)))
    checks = []
    if p["require_fd_match"]:
        checks.append(Check("closed form matches central difference", worst <= limit, worst, limit))
    if p["require_criticality"]:
        tol = _tol(p, ctx)
        at1 = [abs(r[1]) for r in rows if r[0] == 1.0]
        ok = all(r[1] > 0 for r in rows if r[0] < 1) and all(r[1] < 0 for r in rows if r[0] > 1)
        ok = ok and any(r[0] < 1 for r in rows) and any(r[0] > 1 for r in rows)
        checks.append(Check("dF/dt changes sign across t=1", ok, float(ok), 1.0))
        if at1:
            checks.append(Check("|dF/dt| at t=1", at1[0] <= tol, at1[0], tol))
    return Outcome(["t", "F_prime", "F_prime_fd", "abs_diff"], rows, checks,
                   {"fd_step": dt, "fd_limit": limit})


@operation("eval_G", "functional", "normal-projection term G_t", "surface",
           {"t": Param("floats", REQUIRED, "positive"), "require_sign": Param("bool", False),
            "tol": tol_param()})
def op_eval_G(surface, p, ctx):
    rows = [(t, g, g * (t - 1)) for t in p["t"] for g in [eval_G(surface, t)]]
    checks = []
    if p["require_sign"]:
        worst = max(r[2] for r in rows)
        checks.append(Check("G_t (t - 1) <= 0", worst <= _tol(p, ctx), worst, _tol(p, ctx)))
    return Outcome(["t", "G", "G_times_t_minus_1"], rows, checks)


@operation("eval_Xi", "functional", "test-function weighted Gaussian area Xi_t", "surface",
           {"t": Param("floats", REQUIRED, "positive"), "phi": Param("strs"),
            "expect": Param("float"), "max_scale_drift": Param("float", rule="positive")},
           validate=_check_phis)
def op_eval_Xi(surface, p, ctx):
    rows, checks = [], []
    drift = 0.0
    for phi in _phis(p["phi"], surface):
        vals = [eval_Xi(surface, phi, t) for t in p["t"]]
        ref = vals[p["t"].index(1.0)] if 1.0 in p["t"] else vals[0]
        drift = max(drift, max(abs(v - ref) for v in vals))
        rows += [(phi.name, t, v, v - ref) for t, v in zip(p["t"], vals)]
    if p["expect"] is not None:
        err = max(abs(r[2] - p["expect"]) for r in rows)
        checks.append(Check("Xi_t equals expect", err <= ctx.tol, err, ctx.tol))
    if p["max_scale_drift"] is not None:
        checks.append(Check("Xi_t independent of t", drift <= p["max_scale_drift"], drift,
                            p["max_scale_drift"]))
    return Outcome(["phi", "t", "Xi", "Xi_minus_reference"], rows, checks)


@operation("shrinker_residual", "functional", "self-shrinker equation H + X^N/2 = 0", "surface",
           {"max_sup": Param("float", rule="positive")})
def op_shrinker_residual(surface, p, ctx):
    res = shrinker_residual(surface)
    checks = []
    if p["max_sup"] is not None:
        checks.append(Check("sup |H + X^N/2|", res.sup <= p["max_sup"], res.sup, p["max_sup"]))
    return Outcome(["sup", "l2", "samples"], [(res.sup, res.l2, res.samples)], checks)


def _levels(surface, count):
    out = [surface]
    for _ in range(count - 1):
        out.append(refine(out[-1]))
    return out


@operation("drift_identity", "functional", "drift identity for the Laplacian of |X|^2",
           "surface",
           {"levels": Param("int", 3, "positive"), "min_order": Param("float"),
            "max_finest": Param("float", rule="positive")})
def op_drift_identity(surface, p, ctx):
    rows, sups = [], []
    for lvl, s in enumerate(_levels(surface, p["levels"] if surface.discrete else 1)):
        res = drift_identity_residual(s)
        sup = float(np.max(np.abs(res.values)))
        order = math.log2(sups[-1] / sup) if sups and sup > 0 else math.nan
        sups.append(sup)
        rows.append((lvl, len(res.values), sup, order))
    checks = []
    if p["min_order"] is not None:
        orders = [r[3] for r in rows[1:]]
        worst = min(orders) if orders else math.nan
        checks.append(Check("observed order per refinement", bool(worst >= p["min_order"]),
                            worst, p["min_order"]))
    if p["max_finest"] is not None:
        checks.append(Check("finest-level sup", sups[-1] <= p["max_finest"], sups[-1],
                            p["max_finest"]))
    return Outcome(["level", "samples", "sup_abs_residual", "order"], rows, checks)


@operation("curvature_norm", "functional", "squared second fundamental form |B|^2", "surface",
           {"levels": Param("int", 1, "positive"), "expect": Param("float"), "tol": tol_param()})
def op_curvature_norm(surface, p, ctx):
    rows = []
    for lvl, s in enumerate(_levels(surface, p["levels"] if surface.discrete else 1)):
        b2 = interior_samples(s).B_norm ** 2
        err = float(np.max(np.abs(b2 - p["expect"]))) if p["expect"] is not None else math.nan
        rows.append((lvl, len(b2), float(b2.min()), float(b2.max()), err))
    checks = []
    if p["expect"] is not None:
        checks.append(Check("finest |B|^2 equals expect", rows[-1][4] <= _tol(p, ctx),
                            rows[-1][4], _tol(p, ctx)))
    return Outcome(["level", "samples", "min_B2", "max_B2", "max_abs_error"], rows, checks)


# -- monotonicity ------------------------------------------------------------------------

def _validate_interval(src, p):
    if not p["t2"] > p["t1"]:
        raise ValidationError("need t2 > t1")


@operation("verify_monotonicity", "monotonicity", "monotonicity identity for F_t with boundary",
           "surface",
           {"t1": Param("float", REQUIRED, "positive"), "t2": Param("float", REQUIRED, "positive"),
            "expect_lhs": Param("float"), "max_defect": Param("float", rule="positive"),
            "tol": tol_param()},
           validate=_validate_interval)
def op_verify_monotonicity(surface, p, ctx):
    from ..monotonicity import verify_monotonicity

    led = verify_monotonicity(surface, p["t1"], p["t2"])
    checks = []
    if p["max_defect"] is not None:
        d = abs(led.defect)
        checks.append(Check("|defect|", d <= p["max_defect"], d, p["max_defect"]))
    if p["expect_lhs"] is not None:
        tol = _tol(p, ctx)
        for name, v in (("lhs", led.lhs), ("boundary", led.boundary)):
            err = abs(v - p["expect_lhs"])
            checks.append(Check(f"{name} equals expect_lhs", err <= tol, err, tol))
    return Outcome(["quantity", "value", "error_estimate"], led.rows(), checks,
                   {"t1": led.t1, "t2": led.t2})


@operation("xi_derivative_bound", "monotonicity", "bound on |d/dt Xi_t| for t > 1",
           "surface",
           {"t": Param("floats", REQUIRED, "positive"), "phi": Param("strs", ["const"]),
            "require_bound": Param("bool", False)},
           validate=lambda s, p: (_check_phis(s, p), _check_above_one(p["t"])))
def op_xi_derivative_bound(surface, p, ctx):
    from ..monotonicity import xi_derivative_bound

    rows, ok = [], True
    for phi in _phis(p["phi"], surface):
        for t in p["t"]:
            b = xi_derivative_bound(surface, phi, t)
            ok = ok and b.holds
            rows.append((phi.name, t, b.numeric, b.bound, b.margin))
    checks = [Check("numeric derivative within bound", ok, min(r[4] for r in rows), 0.0)] \
        if p["require_bound"] else []
    return Outcome(["phi", "t", "numeric", "bound", "margin"], rows, checks)


def _check_above_one(ts):
    from ..monotonicity import T_GUARD

    if min(ts) < 1 + T_GUARD:
        raise ValidationError(f"t must be at least {1 + T_GUARD}")


@operation("xi_limit_increments", "monotonicity", "Cauchy increments of Xi_t along t = 2^j",
           "surface",
           {"phi": Param("strs", ["const"]), "j_min": Param("int", 1, "positive"),
            "j_max": Param("int", 6, "positive"), "require_dominated": Param("bool", False)},
           validate=lambda s, p: (_check_phis(s, p), _check_j(p)))
def op_xi_limit_increments(surface, p, ctx):
    from ..monotonicity import xi_limit_increments

    rows, ok = [], True
    for phi in _phis(p["phi"], surface):
        e = xi_limit_increments(surface, phi, (p["j_min"], p["j_max"]))
        ok = ok and e.dominated
        rows += [(phi.name, a, b, d, bd)
                 for a, b, d, bd in zip(e.scales, e.scales[1:], e.increments, e.integrated_bounds)]
    checks = [Check("increments dominated by integrated bound", ok, float(ok), 1.0)] \
        if p["require_dominated"] else []
    return Outcome(["phi", "t_a", "t_b", "increment", "integrated_bound"], rows, checks)


def _check_j(p):
    if p["j_max"] <= p["j_min"]:
        raise ValidationError("need j_max > j_min")


# -- cone ---------------------------------------------------------------------------

@operation("radial_mass_profile", "cone", "radial mass profile r^-n mass(B_r) for cones",
           "surface",
           {"radii": Param("floats", REQUIRED, "ascending"), "phi": Param("strs"),
            "max_spread": Param("float", rule="positive")},
           validate=_check_phis)
def op_radial_mass_profile(surface, p, ctx):
    from ..cones import radial_mass_profile

    rows, spread = [], 0.0
    for phi in _phis(p["phi"], surface):
        prof = radial_mass_profile(surface, phi, p["radii"])
        spread = max(spread, prof.spread)
        rows += [(phi.name, float(r), float(v)) for r, v in zip(prof.radii, prof.values)]
    checks = []
    if p["max_spread"] is not None:
        checks.append(Check("profile spread over r", spread <= p["max_spread"], spread,
                            p["max_spread"]))
    return Outcome(["phi", "r", "profile"], rows, checks)


@operation("cone_deviation", "cone", "cross-section distance between two blow-down scales",
           "surface",
           {"scales": Param("floats", REQUIRED, "ascending"), "r": Param("float", 1.0, "positive"),
            "count": Param("int", 256, "positive"),
            "max_deviation": Param("float", rule="positive")},
           validate=lambda s, p: _need_two(p["scales"]))
def op_cone_deviation(surface, p, ctx):
    from ..cones import cone_deviation

    sc = p["scales"]
    rows = [(a, b, cone_deviation(surface, (a, b), p["r"], p["count"], ctx.seed))
            for a, b in zip(sc, sc[1:])]
    checks = []
    if p["max_deviation"] is not None:
        worst = max(r[2] for r in rows)
        checks.append(Check("cross-section deviation", worst <= p["max_deviation"], worst,
                            p["max_deviation"]))
    return Outcome(["scale_a", "scale_b", "deviation"], rows, checks, {"seed": ctx.seed})


def _need_two(vals):
    if len(vals) < 2:
        raise ValidationError("need at least two scales")


@operation("xi_limit_consistency", "cone", "Xi_1 of blow-downs along increasing scales",
           "surface",
           {"scales": Param("floats", REQUIRED, "ascending"), "phi": Param("strs", ["const"]),
            "max_spread": Param("float", rule="positive")},
           validate=_check_phis)
def op_xi_limit_consistency(surface, p, ctx):
    from ..cones import xi_limit_consistency

    rows, spread = [], 0.0
    for phi in _phis(p["phi"], surface):
        c = xi_limit_consistency(surface, phi, p["scales"])
        spread = max(spread, c.spread)
        rows += [(phi.name, s, v) for s, v in zip(c.scales, c.values)]
    checks = []
    if p["max_spread"] is not None:
        checks.append(Check("tail spread of Xi_1", spread <= p["max_spread"], spread,
                            p["max_spread"]))
    return Outcome(["phi", "scale", "Xi"], rows, checks)


# -- moment ---------------------------------------------------------------------------

@operation("constancy_test", "moment", "moment lemma: t-independent Gaussian transform",
           "moment",
           {"t_min": Param("float", 1e-2, "positive"), "t_max": Param("float", 1e2, "positive"),
            "count": Param("int", 25, "positive"), "homogeneous_tol": Param("float", 1e-6, "positive"),
            "expect_homogeneous": Param("bool"), "expect_value": Param("float"),
            "max_spread": Param("float", rule="positive"), "tol": tol_param()},
           validate=lambda s, p: _check_t_span(p))
def op_constancy_test(V, p, ctx):
    from ..moment import constancy_test

    grid = np.geomspace(p["t_min"], p["t_max"], p["count"])
    res = constancy_test(V, grid, p["homogeneous_tol"])
    checks = []
    if p["expect_homogeneous"] is not None:
        checks.append(Check("homogeneity verdict", res.homogeneous == p["expect_homogeneous"],
                            res.spread, p["homogeneous_tol"]))
    if p["max_spread"] is not None:
        checks.append(Check("relative spread", res.spread <= p["max_spread"], res.spread,
                            p["max_spread"]))
    if p["expect_value"] is not None:
        err = float(np.max(np.abs(res.values - p["expect_value"])))
        checks.append(Check("transform equals expect_value", err <= _tol(p, ctx), err,
                            _tol(p, ctx)))
    return Outcome(["t", "transform"], [(float(t), float(v)) for t, v in zip(grid, res.values)],
                   checks, {"kappa1": res.kappa1, "spread": res.spread,
                            "homogeneous": res.homogeneous, "has_jumps": V.has_jumps})


def _check_t_span(p):
    if p["t_max"] < 100 * p["t_min"]:
        raise ValidationError("t range must span at least two decades")
    if p["count"] < 2:
        raise ValidationError("count must be at least 2")


@operation("moment_separation", "moment", "high moments of V - kappa r^n", "moment",
           {"k": Param("ints", REQUIRED), "r_peak": Param("float", 2.0, "positive"),
            "expect_sign": Param("int")},
           validate=lambda s, p: _check_sign(p))
def op_moment_separation(V, p, ctx):
    from ..moment import moment_separation

    seps = moment_separation(V, p["k"], r_peak=p["r_peak"])
    rows = [(s.k, s.t, s.scaled, s.log_abs_raw, s.sign) for s in seps]
    checks = []
    if p["expect_sign"] is not None:
        last = seps[-1]
        checks.append(Check(f"sign at k={last.k}", last.sign == p["expect_sign"], last.scaled,
                            float(p["expect_sign"])))
    return Outcome(["k", "t", "scaled", "log_abs_raw", "sign"], rows, checks)


def _check_sign(p):
    if any(k < 0 for k in p["k"]):
        raise ValidationError("moment orders must be nonnegative")
    if p["expect_sign"] not in (None, -1, 0, 1):
        raise ValidationError("expect_sign must be -1, 0 or 1")


@operation("laplace_asymptotic", "moment", "Laplace asymptotics of the peaked moment integral",
           "none",
           {"p": Param("floats", REQUIRED, "ascending"), "r0": Param("float", 2.0, "positive"),
            "delta": Param("float", 0.5, "positive"), "max_rel_error": Param("floats"),
            "require_monotone": Param("bool", False)},
           validate=lambda s, p: _check_laplace(p))
def op_laplace_asymptotic(_, p, ctx):
    from ..moment import laplace_sandwich, laplace_scan

    vals, monotone = laplace_scan(p["p"], p["r0"], p["delta"])
    rows = []
    for q, v in zip(p["p"], vals):
        lo, hi = laplace_sandwich(q, p["r0"], p["delta"])
        rows.append((q, v, v / math.sqrt(math.pi) - 1, lo, hi))
    checks = []
    if p["max_rel_error"] is not None:
        for (q, _, rel, _, _), lim in zip(rows, p["max_rel_error"]):
            checks.append(Check(f"|I/sqrt(pi) - 1| at p={q:g}", abs(rel) <= lim, abs(rel), lim))
    if p["require_monotone"]:
        checks.append(Check("monotone approach to sqrt(pi)", monotone, float(monotone), 1.0))
    return Outcome(["p", "I", "rel_error", "sandwich_lower", "sandwich_upper"], rows, checks,
                   {"monotone": monotone})


def _check_laplace(p):
    if min(p["p"]) < 2:
        raise ValidationError("p must be at least 2")
    if not 0 < p["delta"] < p["r0"] / 2:
        raise ValidationError("need 0 < delta < r0/2")
    if p["max_rel_error"] is not None and len(p["max_rel_error"]) != len(p["p"]):
        raise ValidationError("max_rel_error needs one entry per p")


# -- regularity -------------------------------------------------------------------------

def _check_p(surface, p):
    if surface is not None and not surface.n <= p["p"] <= surface.n + 2:
        raise ValidationError(f"p={p['p']} outside [n, n+2] = [{surface.n}, {surface.n + 2}]")


@operation("annulus_profile", "regularity", "annulus integrals of |B|^p", "surface",
           {"p": Param("float", REQUIRED, "positive"), "radii": Param("floats", REQUIRED, "ascending"),
            "expect_max": Param("float"), "tol": tol_param()},
           validate=_check_p)
def op_annulus_profile(surface, p, ctx):
    from ..regularity import annulus_profile

    prof = annulus_profile(surface, p["p"], p["radii"])
    checks = []
    if p["expect_max"] is not None:
        err = abs(float(prof.values.max()) - p["expect_max"])
        checks.append(Check("max annulus integral equals expect_max", err <= _tol(p, ctx), err,
                            _tol(p, ctx)))
    return Outcome(["r", "annulus_integral", "running_sup"], prof.rows(), checks,
                   {"decaying": prof.decaying})


def _validate_I(surface, p):
    _check_p(surface, p)
    if not -1 <= p["t0"] < 0:
        raise ValidationError(f"t0 must lie in [-1, 0), got {p['t0']}")
    if surface is not None and len(p["X0"]) != surface.ambient_dim:
        raise ValidationError(f"X0 needs {surface.ambient_dim} coordinates")


@operation("eval_I", "regularity", "scaled space-time curvature integral I_{X0,t0}", "surface",
           {"X0": Param("floats", REQUIRED), "t0": Param("float", REQUIRED),
            "p": Param("float", REQUIRED, "positive"), "grid": Param("int", 17, "positive"),
            "r_count": Param("int", 129, "positive"), "sup_tol": Param("float", 1e-3, "positive"),
            "expect": Param("float"), "require_chain": Param("bool", False), "tol": tol_param()},
           validate=_validate_I)
def op_eval_I(surface, p, ctx):
    from ..regularity import eval_I

    res = eval_I(surface, p["X0"], p["t0"], p["p"], grid=p["grid"], r_count=p["r_count"],
                 tol=p["sup_tol"])
    checks = []
    if p["expect"] is not None:
        err = abs(res.value - p["expect"])
        checks.append(Check("I equals expect", err <= _tol(p, ctx), err, _tol(p, ctx)))
    if p["require_chain"]:
        checks.append(Check("I within the annulus chain bound", res.chain_holds, res.value,
                            res.chain_bound))
    row = (res.value, res.rho, res.rho_prime, res.grid_size, res.chain_bound,
           res.containment, res.specialized)
    return Outcome(["I", "rho", "rho_prime", "grid_size", "chain_bound", "containment",
                    "specialized"], [row], checks, res.record())


@operation("alpha_scan", "regularity", "supremum of (s^2a - 1)/(s^2 - 1)^a over s > 1", "none",
           {"alpha": Param("floats", REQUIRED, "positive"), "scan_tol": Param("float", 1e-4, "positive"),
            "expect_sup": Param("float"), "tol": tol_param()},
           validate=lambda s, p: _check_alpha(p))
def op_alpha_scan(_, p, ctx):
    from ..regularity import alpha_sup_scan

    rows = []
    for a in p["alpha"]:
        sc = alpha_sup_scan(a, tol=p["scan_tol"])
        rows.append((a, sc.sup, float(sc.s[-1]), sc.monotone))
    checks = []
    if p["expect_sup"] is not None:
        err = max(abs(r[1] - p["expect_sup"]) for r in rows)
        checks.append(Check("sup equals expect_sup", err <= _tol(p, ctx), err, _tol(p, ctx)))
    return Outcome(["alpha", "sup", "s_max", "monotone"], rows, checks)


def _check_alpha(p):
    if max(p["alpha"]) > 1:
        raise ValidationError("alpha must lie in (0, 1]")


@operation("volume_growth", "regularity", "volume growth of an end", "surface",
           {"s": Param("float", REQUIRED), "radii": Param("floats", REQUIRED, "ascending"),
            "p": Param("float", 2.0, "positive"), "expect_limit": Param("float"),
            "limit_rtol": Param("float", 1e-2, "positive"),
            "residual_tol": Param("float", rule="positive"), "expect_hypothesis": Param("bool")})
def op_volume_growth(surface, p, ctx):
    from ..regularity import volume_growth

    c = volume_growth(surface, p["s"], p["radii"], p["p"])
    rows = [tuple(float(v) for v in row)
            for row in zip(c.radii, c.values, c.areas, c.residuals, c.annulus_h)]
    checks = []
    if p["expect_limit"] is not None:
        rel = abs(float(c.values[-1]) / p["expect_limit"] - 1)
        checks.append(Check("V at largest radius near expect_limit", rel <= p["limit_rtol"], rel,
                            p["limit_rtol"]))
    if p["residual_tol"] is not None:
        worst = float(c.residuals.min())
        checks.append(Check("differential inequality residual >= -tol",
                            c.residual_ok(p["residual_tol"]), worst, -p["residual_tol"]))
    if p["expect_hypothesis"] is not None:
        checks.append(Check("bounded |H|^p annulus hypothesis verdict",
                            c.hypothesis_met == p["expect_hypothesis"], float(c.hypothesis_met),
                            float(p["expect_hypothesis"])))
    return Outcome(["r", "V", "area", "residual", "annulus_H"], rows, checks,
                   {"hypothesis_met": c.hypothesis_met})


@operation("curvature_ratio", "regularity", "pointwise curvature against annulus integrals",
           "surface",
           {"p": Param("float", REQUIRED, "positive"), "r": Param("floats", REQUIRED, "positive"),
            "t": Param("floats", REQUIRED, "positive"),
            "profile_radii": Param("floats", REQUIRED, "ascending"),
            "expect_hypothesis": Param("bool"), "max_ratio": Param("float", rule="positive")},
           validate=lambda s, p: (_check_p(s, p), _check_t_ratio(p)))
def op_curvature_ratio(surface, p, ctx):
    from ..regularity import annulus_profile, curvature_ratio_scan

    prof = annulus_profile(surface, p["p"], p["profile_radii"])
    scan = curvature_ratio_scan(surface, p["p"], p["r"], p["t"], prof)
    rows = [(e.r, e.t, e.lhs, e.rhs_core, e.ratio) for e in scan.entries]
    checks = []
    if p["expect_hypothesis"] is not None:
        checks.append(Check("decaying-profile hypothesis verdict",
                            scan.hypothesis_met == p["expect_hypothesis"],
                            float(scan.hypothesis_met), float(p["expect_hypothesis"])))
    if p["max_ratio"] is not None:
        checks.append(Check("empirical constant", scan.empirical_c <= p["max_ratio"],
                            scan.empirical_c, p["max_ratio"]))
    return Outcome(["r", "t", "sup_B", "rhs_core", "ratio"], rows, checks,
                   {"empirical_c": scan.empirical_c, "hypothesis_met": scan.hypothesis_met})


def _check_t_ratio(p):
    if min(p["t"]) <= 4:
        raise ValidationError("t must exceed 4")


# -- graph --------------------------------------------------------------------------------

@operation("graph_residual", "graph", "graphical shrinker system", "graph",
           {"max_sup": Param("float", rule="positive")})
def op_graph_residual(u, p, ctx):
    from ..graphs import graph_residual

    res = graph_residual(u)
    checks = []
    if p["max_sup"] is not None:
        checks.append(Check("interior residual sup", res.sup <= p["max_sup"], res.sup,
                            p["max_sup"]))
    return Outcome(["sup_interior", "sup_all", "m", "n_r", "n_theta"],
                   [(res.sup, res.sup_all, u.m, u.n_r, u.n_theta)], checks)


@operation("decay_constants", "graph", "decay constants |D^j u| <= c_j |x|^(1-j)", "graph", {})
def op_decay_constants(u, p, ctx):
    from ..graphs import decay_constants

    d = decay_constants(u)
    return Outcome(["j", "c", "attained_at_r"], [(j, c, w) for j, (c, w) in
                                               enumerate(zip(d.c, d.where))], [],
                   {"c_M": d.c_M})


_SOLVE = {"r_inner": Param("float", 4.0, "positive"), "r_outer": Param("float", 16.0, "positive"),
          "n_theta": Param("int", 32, "positive"), "A": Param("floats", [0.2, 0.1]),
          "amplitude": Param("float", 0.05), "r_extended": Param("float", 24.0, "positive")}


def _check_solve(p):
    if not p["r_inner"] < p["r_outer"] <= p["r_extended"]:
        raise ValidationError("need r_inner < r_outer <= r_extended")
    if len(p["A"]) != 2:
        raise ValidationError("A needs two entries")


@operation("solve_graph", "graph", "Newton solve of the graphical shrinker system", "none",
           {**_SOLVE, "h": Param("float", 0.125, "positive"),
            "max_residual": Param("float", rule="positive")},
           validate=lambda s, p: _check_solve(p))
def op_solve_graph(_, p, ctx):
    from ..graphs import solve_fixture

    kw = {k: p[k] for k in _SOLVE}
    kw["A"] = tuple(kw["A"])
    rep = solve_fixture(h=p["h"], **kw)
    checks = []
    if p["max_residual"] is not None:
        checks.append(Check("Newton residual", rep.residual < p["max_residual"], rep.residual,
                            p["max_residual"]))
    return Outcome(["step", "residual"], list(enumerate(rep.history)), checks,
                   {"steps": rep.steps, "n_r": rep.graph.n_r, "h": rep.graph.h})


@operation("heat_check", "graph", "rescaled heat-type inequality for U = sqrt(-t) u(x/sqrt(-t))",
           "graph",
           {"times": Param("floats", [0.5, 1.0, 2.0, 4.0], "ascending"),
            "edge": Param("float", 1.0, "positive"), "max_violations": Param("int")})
def op_heat_check(u, p, ctx):
    from ..graphs import rescaled_heat_check

    hc = rescaled_heat_check(u, p["times"], edge=p["edge"])
    checks = []
    if p["max_violations"] is not None:
        checks.append(Check("bound violations", hc.violations <= p["max_violations"],
                            hc.violations, p["max_violations"]))
    return Outcome(["t", "r", "route_a_max", "route_b_max", "bound_min"], list(hc.rows()), checks,
                   {"c2": hc.c2, "c1_prime": hc.c1_prime, "c_M": hc.c_M,
                    "violations": hc.violations, "route_gap": hc.route_gap,
                    "min_margin": hc.min_margin})


@operation("heat_order", "graph", "convergence order of the two heat-operator routes", "none",
           {**_SOLVE, "h": Param("floats", [0.25, 0.125, 0.0625], "positive"),
            "times": Param("floats", [0.5, 1.0, 2.0, 4.0], "ascending"),
            "edge": Param("float", 1.0, "positive"), "min_order": Param("float")},
           validate=lambda s, p: (_check_solve(p), _need_descending(p["h"])))
def op_heat_order(_, p, ctx):
    from ..graphs import heat_route_order, solve_fixture

    kw = {k: p[k] for k in _SOLVE}
    kw["A"] = tuple(kw["A"])
    graphs = [solve_fixture(h=h, **kw).graph for h in p["h"]]
    gaps, orders = heat_route_order(graphs, p["times"], p["edge"])
    rows = [(h, g, o) for h, g, o in zip(p["h"], gaps, [math.nan] + orders)]
    checks = []
    if p["min_order"] is not None:
        worst = min(orders)
        checks.append(Check("observed order", worst >= p["min_order"], worst, p["min_order"]))
    return Outcome(["h", "route_gap", "order"], rows, checks)


def _need_descending(hs):
    if len(hs) < 2 or any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValidationError("h needs at least two strictly decreasing values")


@operation("rigidity_echo", "graph", "decaying annulus |B|^2 against linearity", "graph",
           {"count": Param("int", 5, "positive"), "fit_tol": Param("float", 1e-6, "positive"),
            "require_consistent": Param("bool", False)})
def op_rigidity_echo(u, p, ctx):
    from ..graphs import rigidity_echo

    e = rigidity_echo(u, p["count"], p["fit_tol"])
    checks = []
    if p["require_consistent"]:
        checks.append(Check("decaying implies linear", e.consistent, e.fit_sup, p["fit_tol"]))
    return Outcome(["r", "annulus_integral", "running_sup"], e.profile.rows(), checks,
                   {"decaying": e.decaying, "linear": e.linear, "fit_sup": e.fit_sup,
                    "A": np.asarray(e.A).tolist()})
