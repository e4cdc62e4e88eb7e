"""Global assembly of B_h(u_h, v_h) = (f_h, v_h) over edge dofs and sparse direct solve."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .mesh import PolygonalMesh
from .problem import ProblemSpec
from .quadrature import DEFAULT_ORDER
from .vem import chunks, element_arrays, interpolate

logger = logging.getLogger(__name__)

PIVOT_RATIO = 1e-14


class SingularSystemError(RuntimeError):
    """The discrete system could not be factorised reliably."""


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix  # free x free block
    rhs: np.ndarray
    free: np.ndarray  # edge index of each row
    fixed: np.ndarray  # boundary edges
    fixed_values: np.ndarray  # edge means of the Dirichlet data
    full_matrix: sp.csr_matrix  # all edges, before constraints
    full_load: np.ndarray

    @property
    def n_dofs(self) -> int:
        return self.full_matrix.shape[0]


def assemble(mesh: PolygonalMesh, problem: ProblemSpec,
             order: int = DEFAULT_ORDER) -> LinearSystem:
    """Scatter A_P + B_P + C_P (stabilisation included in A_P) and F_P over all polygons.

    Boundary dofs are fixed to the edge means of the Dirichlet data and their
    columns are moved to the right-hand side.
    """
    problem.check_spd(mesh.centroid)
    rows, cols, vals = [], [], []
    load = np.zeros(mesh.n_edges)
    for g in mesh.groups:
        for sl in chunks(g):
            arr = element_arrays(g.coords[sl], g.star[sl], problem, order)
            local = arr["A"] + arr["B"] + arr["C"]
            e = g.edges[sl]
            rows.append(np.broadcast_to(e[:, :, None], local.shape).ravel())
            cols.append(np.broadcast_to(e[:, None, :], local.shape).ravel())
            vals.append(local.ravel())
            load += np.bincount(e.ravel(), weights=arr["F"].ravel(), minlength=mesh.n_edges)
    vals = np.concatenate(vals)
    if not (np.isfinite(vals).all() and np.isfinite(load).all()):
        raise ValueError("non-finite entries in the assembled system")
    n = mesh.n_edges
    full = sp.coo_matrix((vals, (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n)).tocsr()

    fixed = mesh.boundary_edges
    free = mesh.interior_edges
    if problem.homogeneous:
        gvals = np.zeros(len(fixed))
    else:
        gvals = interpolate(mesh, problem.g, order)[fixed]
    Aff = full[free][:, free].tocsr()
    rhs = load[free] - full[free][:, fixed] @ gvals
    return LinearSystem(Aff, rhs, free, fixed, gvals, full, load)


def solve(system: LinearSystem, return_residual: bool = False):
    """Sparse LU solve; returns the full dof vector (one value per edge)."""
    u = np.zeros(system.n_dofs)
    u[system.fixed] = system.fixed_values
    residual = 0.0
    if len(system.free):
        A = system.matrix.tocsc()
        try:
            lu = splu(A)
        except RuntimeError as exc:
            raise SingularSystemError(
                f"sparse LU failed ({exc}); the discrete problem is only guaranteed "
                "well-posed on sufficiently fine meshes, try a finer initial mesh") from exc
        piv = np.abs(lu.U.diagonal())
        if piv.min() < PIVOT_RATIO * piv.max():
            raise SingularSystemError(
                f"near-singular system (pivot ratio {piv.min() / piv.max():.2e}); the discrete "
                "problem is only guaranteed well-posed on sufficiently fine meshes, "
                "try a finer initial mesh")
        x = lu.solve(system.rhs)
        r = A @ x - system.rhs
        bnorm = np.linalg.norm(system.rhs)
        residual = float(np.linalg.norm(r) / bnorm) if bnorm > 0 else float(np.linalg.norm(r))
        logger.debug("solved %d dofs, relative residual %.2e", len(x), residual)
        u[system.free] = x
    if return_residual:
        return u, residual
    return u
