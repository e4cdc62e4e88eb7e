"""Lowest-order nonconforming virtual elements on polygonal meshes with adaptive refinement."""
from .adapt import AdaptConfig, LevelRecord, dorfler_mark, run_loop
from .bench import BENCHMARKS, ConvergenceTable, compute_errors, fit_rate
from .estimator import EstimatorBreakdown, efficiency_index, estimate
from .mesh import (MeshError, Polygon, PolygonalMesh, build_mesh, lshape_mesh, read_mesh,
                   refine, square_mesh, sub_triangulate, uniform_refine,
                   validate_admissibility, write_mesh)
from .problem import ProblemSpec
from .quadrature import integrate_edge, integrate_polygon, triangle_rule
from .system import LinearSystem, SingularSystemError, assemble, solve
from .vem import interpolate, local_matrices, pi0_flux, ritz_projection, stab_dofs

__version__ = "0.1.0"
