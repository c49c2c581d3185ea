"""Plain-text surface formats.

Surface descriptions are TOML tables::

    kind = "RoundCylinder"      # Plane | RoundSphere | RoundCylinder |
    k = 1                       # TriangleMesh | PolylineCurve | GraphPatch
    rho = 1.4142135623730951
    boundary_radius = 2.0       # optional exterior cut |X| >= R
    mesh = "torus.mesh"         # discrete kinds: path relative to this file
    graph = "shrinker.graph"    # GraphPatch: path to a graph table

Mesh files are whitespace-delimited, one record per line, ``#`` comments::

    v x y z ...     vertex coordinates (any ambient dimension)
    f i j k         triangle, 0-based vertex indices
    closed 0|1      polyline only; default 1

Graph tables start with a ``# key=value ...`` header carrying n, m, R,
R_out, n_r and n_theta, followed by rows ``x1 x2 u^1 ... u^m`` ordered
radius-major (all angles of the innermost circle first).
"""

import math
from pathlib import Path

import numpy as np

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli

from ..errors import DomainError
from .analytic import Plane, RoundCylinder, RoundSphere
from .discrete import PolylineCurve, TriangleMesh
from .graphpatch import GraphFunction, GraphPatch


def read_mesh(path):
    """Returns (vertices, faces, closed) from the whitespace mesh format."""
    verts, faces, closed = [], [], True
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        tag, rest = line[0], line[1:]
        try:
            if tag == "v":
                verts.append([float(x) for x in rest])
            elif tag == "f":
                faces.append([int(x) for x in rest])
            elif tag == "closed":
                closed = bool(int(rest[0]))
            else:
                raise ValueError(f"unknown record {tag!r}")
        except (ValueError, IndexError) as exc:
            raise DomainError(f"{path}:{lineno}: {exc}") from None
    if len({len(v) for v in verts}) > 1:
        raise DomainError(f"{path}: vertices have inconsistent dimensions")
    return np.array(verts, dtype=float), np.array(faces, dtype=int).reshape(-1, 3), closed


def write_mesh(path, vertices, faces=None, closed=None):
    lines = [f"v {' '.join(repr(float(x)) for x in v)}" for v in np.asarray(vertices)]
    if faces is not None:
        lines += [f"f {a} {b} {c}" for a, b, c in np.asarray(faces)]
    if closed is not None:
        lines.append(f"closed {int(bool(closed))}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph_table(path):
    text = Path(path).read_text().splitlines()
    header = {}
    rows = []
    for lineno, raw in enumerate(text, 1):
        s = raw.strip()
        if not s:
            continue
        if s.startswith("#"):
            for item in s[1:].split():
                if "=" in item:
                    key, val = item.split("=", 1)
                    header[key] = val
            continue
        try:
            rows.append([float(x) for x in s.split()])
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: {exc}") from None
    try:
        n, m = int(header["n"]), int(header["m"])
        R, R_out = float(header["R"]), float(header["R_out"])
        n_r, n_theta = int(header["n_r"]), int(header["n_theta"])
    except KeyError as exc:
        raise DomainError(f"{path}: graph header lacks {exc}") from None
    if n != 2:
        raise DomainError(f"{path}: only n=2 graph tables are supported")
    data = np.array(rows)
    if data.shape != ((n_r + 1) * n_theta, 2 + m):
        raise DomainError(f"{path}: expected {(n_r + 1) * n_theta} rows of {2 + m} columns, "
                          f"got {data.shape}")
    g = GraphFunction(R, R_out, np.moveaxis(data[:, 2:].reshape(n_r + 1, n_theta, m), -1, 0))
    if np.max(np.abs(g.nodes.reshape(-1, 2) - data[:, :2])) > 1e-9 * R_out:
        raise DomainError(f"{path}: node coordinates do not match the declared polar grid")
    return g


def write_graph_table(path, graph, comment=None):
    head = (f"# n=2 m={graph.m} R={graph.r_inner!r} R_out={graph.r_outer!r} "
            f"n_r={graph.n_r} n_theta={graph.n_theta}")
    lines = [head] if comment is None else [f"# {comment}", head]
    x = graph.nodes.reshape(-1, 2)
    u = np.moveaxis(graph.values, 0, -1).reshape(-1, graph.m)
    for xy, uu in zip(x, u):
        lines.append(" ".join(repr(float(v)) for v in (*xy, *uu)))
    Path(path).write_text("\n".join(lines) + "\n")


def surface_from_dict(desc, base_dir=None):
    """Build a surface from a parsed description table."""
    base = Path(base_dir or ".")
    kind = desc.get("kind")
    n = int(desc.get("n", 2))
    m = int(desc.get("m", 1))
    R = desc.get("boundary_radius")
    if kind == "Plane":
        return Plane(n=n, m=m, basis=desc.get("basis"), boundary_radius=R)
    if kind == "RoundSphere":
        return RoundSphere(n=n, rho=float(desc.get("rho", math.sqrt(2 * n))), m=m)
    if kind == "RoundCylinder":
        k = int(desc.get("k", 1))
        return RoundCylinder(k=k, n=n, rho=float(desc.get("rho", math.sqrt(2 * k))), m=m,
                             boundary_radius=R)
    if kind in ("TriangleMesh", "PolylineCurve"):
        if "mesh" in desc:
            V, F, closed = read_mesh(base / desc["mesh"])
        else:
            V = np.asarray(desc.get("vertices", []), dtype=float)
            F = np.asarray(desc.get("faces", []), dtype=int).reshape(-1, 3)
            closed = bool(desc.get("closed", True))
        if kind == "TriangleMesh":
            return TriangleMesh(V, F, name=desc.get("name"))
        return PolylineCurve(V, closed=closed, name=desc.get("name"))
    if kind == "GraphPatch":
        if "graph" not in desc:
            raise DomainError("GraphPatch description needs a 'graph' table path")
        return GraphPatch(read_graph_table(base / desc["graph"]), name=desc.get("name"))
    raise DomainError(f"unknown surface kind {kind!r}")


def read_surface(path):
    path = Path(path)
    with path.open("rb") as fh:
        try:
            desc = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise DomainError(f"{path}: {exc}") from None
    return surface_from_dict(desc, base_dir=path.parent)
