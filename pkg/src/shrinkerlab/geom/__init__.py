"""Immersed submanifolds and their pointwise geometry."""

from .analytic import Plane, ProductSurface, RefinementNotice, RoundCylinder, RoundSphere
from .base import (BoundarySet, DriftResidual, GeometrySample, QuadratureSpec, Region,
                   Resolution, SampleSet, Surface, default_rho_max)
from .discrete import PolylineCurve, TriangleMesh
from .generators import circle_polyline, cylinder_mesh, icosphere
from .graphpatch import GraphFunction, GraphPatch
from .io import read_graph_table, read_mesh, read_surface, surface_from_dict, write_graph_table
from .ops import (ShrinkerResidual, drift_identity_residual, interior_samples, refine,
                  require_shrinker, sample_geometry, shrinker_residual)

__all__ = [
    "BoundarySet", "DriftResidual", "GeometrySample", "GraphFunction", "GraphPatch", "Plane",
    "PolylineCurve", "ProductSurface", "QuadratureSpec", "RefinementNotice", "Region",
    "Resolution", "RoundCylinder", "RoundSphere", "SampleSet", "ShrinkerResidual", "Surface",
    "TriangleMesh", "circle_polyline", "cylinder_mesh", "default_rho_max",
    "drift_identity_residual", "icosphere", "interior_samples", "read_graph_table", "read_mesh", "read_surface",
    "refine", "require_shrinker", "sample_geometry", "shrinker_residual", "surface_from_dict",
    "write_graph_table",
]
