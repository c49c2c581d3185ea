"""Built-in surfaces, mass functions and the shipped fixture files."""

import math
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError
from .functionals import bundled_test_functions
from .geom import (GraphPatch, Plane, RoundCylinder, RoundSphere, TriangleMesh,
                   circle_polyline, cylinder_mesh, icosphere, read_graph_table, read_mesh,
                   write_graph_table)
from .moment import MomentFunction, bump_fixture, kink_fixture, read_moment_function

PACKAGE_FIXTURES = Path(__file__).parent / "fixtures"
FIXTURE_SUFFIXES = {".graph": "graph", ".moment": "moment", ".mesh": "mesh"}


@dataclass(frozen=True)
class Entry:
    id: str
    kind: str
    build: object
    note: str = ""


SURFACES = (
    Entry("plane", "surface", lambda: Plane(n=2, m=1)),
    Entry("sphere", "surface", lambda: RoundSphere(n=2, rho=2.0)),
    Entry("cylinder", "surface", lambda: RoundCylinder(k=1, n=2, rho=math.sqrt(2.0))),
    Entry("circle", "surface", lambda: RoundSphere(n=1, rho=math.sqrt(2.0))),
    Entry("exterior-plane", "surface", lambda: Plane(n=2, m=1, boundary_radius=1.0)),
    Entry("exterior-cylinder", "surface",
          lambda: RoundCylinder(k=1, n=2, rho=math.sqrt(2.0), boundary_radius=2.0)),
    Entry("icosphere", "surface", lambda: icosphere(rho=2.0, level=3), "level 3"),
    Entry("cylinder-mesh", "surface", lambda: cylinder_mesh(n_theta=32), "32 columns"),
    Entry("circle-polyline", "surface", lambda: circle_polyline(count=64), "64 vertices"),
)

MOMENTS = (
    Entry("power-n1", "moment", lambda: MomentFunction.power(1), "r"),
    Entry("power-n2", "moment", lambda: MomentFunction.power(2), "r^2"),
    Entry("bump-up", "moment", lambda: bump_fixture(sign=1), "r^2 + hat at r=2"),
    Entry("bump-down", "moment", lambda: bump_fixture(sign=-1), "r^2 - hat at r=2"),
    Entry("kink", "moment", kink_fixture, "r^2 + min(r,1) r"),
)


def fixtures_dir(override=None):
    if override is not None:
        return Path(override)
    env = os.environ.get("SHRINKERLAB_FIXTURES")
    return Path(env) if env else PACKAGE_FIXTURES


def fixture_entries(directory=None):
    """Entries for every recognised file in the fixtures directory, sorted by name."""
    d = fixtures_dir(directory)
    if not d.is_dir():
        return []
    out = []
    for path in sorted(d.iterdir()):
        kind = FIXTURE_SUFFIXES.get(path.suffix)
        if kind is None:
            continue
        out.append(Entry(path.stem, kind, _loader(kind, path), path.name))
    return out


def _loader(kind, path):
    if kind == "graph":
        return lambda: GraphPatch(read_graph_table(path), name=path.stem)
    if kind == "moment":
        return lambda: read_moment_function(path)

    def mesh():
        V, F, _ = read_mesh(path)
        return TriangleMesh(V, F, name=path.stem)
    return mesh


def entries(directory=None):
    return list(SURFACES) + list(MOMENTS) + fixture_entries(directory)


def lookup(ident, kinds=("surface", "graph", "mesh"), directory=None):
    for e in entries(directory):
        if e.id == ident and (e.kind in kinds or (e.kind == "graph" and "surface" in kinds)):
            return e
    known = sorted(e.id for e in entries(directory) if e.kind in kinds)
    raise DomainError(f"unknown id {ident!r}; known: {', '.join(known)}")


def listing(directory=None):
    """Deterministic text inventory of the catalog and fixtures."""
    lines = ["surfaces:"]
    for e in SURFACES:
        s = e.build()
        flag = "exact shrinker" if not s.discrete else "discrete (numerical shrinker)"
        lines.append(f"  {e.id:<18} {s.describe():<60} {flag}")
    lines.append("test functions (ambient dimension 3):")
    lines.append("  " + " ".join(phi.name for phi in bundled_test_functions(3)))
    lines.append("mass functions:")
    for e in MOMENTS:
        lines.append(f"  {e.id:<18} {e.note}")
    fx = fixture_entries(directory)
    if fx:
        lines.append("fixtures:")
        for e in fx:
            lines.append(f"  {e.id:<18} {e.kind:<7} {e.note}")
    return "\n".join(lines)


def build_graph_fixtures(directory=None):
    """Regenerate the shipped graph tables (Newton solves, a few seconds each)."""
    from .graphs import solve_fixture

    d = fixtures_dir(directory)
    d.mkdir(parents=True, exist_ok=True)
    specs = {
        "graph-perturbed": dict(r_outer=16.0, r_extended=24.0, h=0.125),
        "graph-wide": dict(r_outer=24.0, r_extended=32.0, h=0.0625),
    }
    written = []
    for name, kw in specs.items():
        rep = solve_fixture(**kw)
        note = (f"shrinker graph, data 0.2 x1 + 0.1 x2 + 0.05 cos 2theta at r=4; "
                f"newton steps={rep.steps} residual={rep.residual:.3e}")
        path = d / f"{name}.graph"
        write_graph_table(path, rep.graph, comment=note)
        written.append(path)
    return written
