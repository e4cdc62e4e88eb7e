"""Residual-based a posteriori error estimator.

Per polygon P, with p = Pi_1 u_h:

    eta_P^2    = h_P^2 ||f - gamma p||^2                      volume residual
    zeta_P^2   = S^P((1 - Pi_1) u_h, (1 - Pi_1) u_h)          stabilisation
    Lambda_P^2 = ||(1 - Pi_0)(K grad p + b p)||^2             inconsistency
    Xi_P^2     = sum_E |E|^-1 ||[p]_E||^2_E                   nonconformity

On boundary edges the jump is replaced by g - p (g = 0 for homogeneous data).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import PolygonalMesh
from .problem import ProblemSpec
from .quadrature import DEFAULT_ORDER, edge_points, polygon_points
from .vem import _stab_scale, affine_coefficients, chunks, flux_deviation, projection_arrays


@dataclass(frozen=True)
class EstimatorBreakdown:
    eta: np.ndarray
    zeta: np.ndarray
    lam: np.ndarray
    xi: np.ndarray
    h: np.ndarray
    sigma: float

    @staticmethod
    def _norm(v) -> float:
        return float(np.sqrt(np.sum(v**2)))

    @property
    def eta_total(self) -> float:
        return self._norm(self.eta)

    @property
    def zeta_total(self) -> float:
        return self._norm(self.zeta)

    @property
    def lam_total(self) -> float:
        return self._norm(self.lam)

    @property
    def xi_total(self) -> float:
        return self._norm(self.xi)

    def local_squared(self) -> np.ndarray:
        return self.eta**2 + self.zeta**2 + self.lam**2 + self.xi**2

    def indicators(self, norm: str = "h1") -> np.ndarray:
        """Squared refinement indicators per polygon for H1- or L2-driven marking."""
        if norm == "h1":
            return self.local_squared()
        if norm == "l2":
            return self.h ** (2 * self.sigma) * self.local_squared()
        raise ValueError(f"unknown norm {norm!r}")

    def weighted_totals(self) -> tuple[float, float, float, float]:
        """Component totals with the h_P^sigma weight of the L2 bound."""
        wt = self.h ** self.sigma
        return tuple(self._norm(wt * v) for v in (self.eta, self.zeta, self.lam, self.xi))

    @property
    def H1mu(self) -> float:
        return float(np.sqrt(self.eta_total**2 + self.zeta_total**2
                             + self.lam_total**2 + self.xi_total**2))

    @property
    def L2mu(self) -> float:
        return float(np.sqrt(self.indicators("l2").sum()))


def edge_jumps(mesh: PolygonalMesh, problem: ProblemSpec, c0, grad,
               order: int = DEFAULT_ORDER) -> np.ndarray:
    """|E|^-1 ||[Pi_1 u_h]_E||^2 for every edge (g - Pi_1 u_h on boundary edges)."""
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    out = np.empty(mesh.n_edges)

    def affine(p, x, y):
        cen = mesh.centroid[p]
        return c0[p, None] + grad[p, None, 0] * (x - cen[:, None, 0]) \
            + grad[p, None, 1] * (y - cen[:, None, 1])

    inner = mesh.interior_edges
    # the jump of two affines is affine along E, so its square is quadratic
    pts, w = edge_points(a[inner], b[inner], 2)
    x, y = pts[..., 0], pts[..., 1]
    plus, minus = mesh.edge_polys[inner, 0], mesh.edge_polys[inner, 1]
    jump = affine(plus, x, y) - affine(minus, x, y)
    out[inner] = (w * jump**2).sum(axis=1) / mesh.edge_lengths[inner]

    bnd = mesh.boundary_edges
    if len(bnd):
        pts, w = edge_points(a[bnd], b[bnd], order if not problem.homogeneous else 2)
        x, y = pts[..., 0], pts[..., 1]
        diff = problem.g(x, y) - affine(mesh.edge_polys[bnd, 0], x, y)
        out[bnd] = (w * diff**2).sum(axis=1) / mesh.edge_lengths[bnd]
    return out


def estimate(mesh: PolygonalMesh, problem: ProblemSpec, uh,
             order: int = DEFAULT_ORDER) -> EstimatorBreakdown:
    uh = np.asarray(uh, dtype=float)
    n = mesh.n_polygons
    eta2 = np.empty(n)
    zeta2 = np.empty(n)
    lam = np.empty(n)
    c0, grad = affine_coefficients(mesh, uh)
    for g in mesh.groups:
        for sl in chunks(g):
            polys = g.polys[sl]
            coords = g.coords[sl]
            _, cen, diam, _, _, D = projection_arrays(coords)
            pts, w = polygon_points(coords, g.star[sl], order)
            x, y = pts[..., 0], pts[..., 1]
            p = c0[polys, None] + grad[polys, None, 0] * (x - cen[:, None, 0]) \
                + grad[polys, None, 1] * (y - cen[:, None, 1])
            res = problem.f(x, y) - problem.gamma(x, y) * p
            eta2[polys] = diam**2 * (w * res**2).sum(axis=1)

            u = uh[g.edges[sl]]
            r = u - np.einsum("krj,kj->kr", D, u)
            scale = _stab_scale(problem, problem.K(x, y)) if problem.stab_scale != "one" \
                else np.ones(len(polys))
            zeta2[polys] = scale * (r**2).sum(axis=1)

            _, lam[polys] = flux_deviation(pts, w, cen, c0[polys], grad[polys], problem)

    jumps = edge_jumps(mesh, problem, c0, grad, order)
    xi2 = np.zeros(n)
    both = mesh.edge_polys
    np.add.at(xi2, both[:, 0], jumps)
    inner = both[:, 1] >= 0
    np.add.at(xi2, both[inner, 1], jumps[inner])
    return EstimatorBreakdown(np.sqrt(eta2), np.sqrt(zeta2), lam, np.sqrt(xi2),
                              mesh.diameter.copy(), problem.sigma)


def efficiency_index(estimate_value, h1_error: float) -> float:
    """H1mu / H1e; 1.0 by convention when both vanish (exact reproduction)."""
    mu = estimate_value.H1mu if isinstance(estimate_value, EstimatorBreakdown) \
        else float(estimate_value)
    if h1_error < 1e-14:
        if mu < 1e-14:
            return 1.0
        return float("inf")
    return mu / h1_error
