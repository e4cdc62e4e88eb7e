"""Lowest-order enhanced nonconforming virtual element: projections and element matrices.

The local space on an m-gon has one dof per edge (the edge mean).  Only the
affine projection of a basis function is ever needed; for the enhanced space
the Ritz projection and the L2 projection onto affines coincide.  With the
edge "length-scaled" outer normals ``|E| n_E`` and the boundary midpoint
``mid(dP)``, the projection of the j-th basis function is

    Pi psi_j(x) = |E_j| n_j . (x - mid(dP)) / |P| + |E_j| / |dP|.

Affines are stored in the scaled monomial basis {1, (x-cx)/h, (y-cy)/h}
centred at the area centroid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Polygon, PolygonalMesh, polygon_geometry
from .problem import ProblemSpec
from .quadrature import DEFAULT_ORDER, edge_points, polygon_points

CHUNK = 4096


@dataclass(frozen=True)
class Affine:
    """c0 + grad . (x - center)."""

    center: np.ndarray
    c0: float
    grad: np.ndarray

    def __call__(self, x, y):
        return self.c0 + self.grad[0] * (np.asarray(x) - self.center[0]) \
            + self.grad[1] * (np.asarray(y) - self.center[1])


@dataclass(frozen=True)
class LocalProjection:
    """Affine projections of the m local basis functions of one polygon."""

    center: np.ndarray  # area centroid
    scale: float  # h_P
    grad: np.ndarray  # (m, 2) constant gradients
    c0: np.ndarray  # (m,) values at the centroid
    edge_means: np.ndarray  # (m, m): [r, j] = mean of Pi psi_j over edge r

    @property
    def coef(self) -> np.ndarray:
        """(m, 3) coefficients in the scaled monomial basis."""
        return np.column_stack([self.c0, self.scale * self.grad])


@dataclass(frozen=True)
class LocalElement:
    polygon: int
    A: np.ndarray  # consistency + stabilisation
    B: np.ndarray
    C: np.ndarray
    S: np.ndarray  # stabilisation part of A
    F: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.A + self.B + self.C


def projection_arrays(coords: np.ndarray):
    """Vectorised projection data for stacked polygons ``coords`` (k, m, 2).

    Returns (area, centroid, diameter, grad (k,m,2), c0 (k,m), D (k,m,m))
    with ``D[:, r, j]`` the mean of the projected j-th basis function on edge r.
    """
    area, cen, perim, bmid, diam = polygon_geometry(coords)
    nxt = np.roll(coords, -1, axis=1)
    t = nxt - coords
    lengths = np.hypot(t[..., 0], t[..., 1])
    grad = np.stack([t[..., 1], -t[..., 0]], axis=-1) / area[:, None, None]
    base = lengths / perim[:, None]
    c0 = np.einsum("kja,ka->kj", grad, cen - bmid) + base
    mids = 0.5 * (coords + nxt)
    # affine on a straight edge: mean equals the midpoint value
    D = c0[:, None, :] + np.einsum("kja,kra->krj", grad, mids - cen[:, None, :])
    return area, cen, diam, grad, c0, D


def local_projection(polygon: Polygon) -> LocalProjection:
    _, cen, diam, grad, c0, D = projection_arrays(polygon.coords[None])
    return LocalProjection(cen[0], float(diam[0]), grad[0], c0[0], D[0])


def ritz_projection(polygon: Polygon, dofs) -> Affine:
    """Affine projection of the local VEM function with edge means ``dofs``."""
    proj = local_projection(polygon)
    dofs = np.asarray(dofs, dtype=float)
    return Affine(proj.center, float(proj.c0 @ dofs), proj.grad.T @ dofs)


def stab_dofs(polygon: Polygon, dofs) -> np.ndarray:
    """Edge means of (1 - Pi) v_h for the local function with edge means ``dofs``."""
    proj = local_projection(polygon)
    dofs = np.asarray(dofs, dtype=float)
    return dofs - proj.edge_means @ dofs


def _stab_scale(problem: ProblemSpec, Kq: np.ndarray) -> np.ndarray:
    if problem.stab_scale == "one":
        return np.ones(Kq.shape[0])
    lam = np.linalg.eigvalsh(Kq)
    return np.sqrt(lam[..., 0].min(axis=1) * lam[..., -1].max(axis=1))


def element_arrays(coords, star, problem: ProblemSpec, order: int = DEFAULT_ORDER):
    """Element matrices for stacked polygons of equal edge count.

    Row index = test function, column index = trial function.  Returns a dict
    with A (consistency + stabilisation), S, B, C (each (k,m,m)) and F (k,m).
    """
    area, cen, diam, grad, c0, D = projection_arrays(coords)
    k, m = c0.shape
    pts, w = polygon_points(coords, star, order)
    x, y = pts[..., 0], pts[..., 1]
    phi = np.stack([np.ones_like(x), (x - cen[:, None, 0]) / diam[:, None],
                    (y - cen[:, None, 1]) / diam[:, None]], axis=-1)  # (k, nq, 3)
    coef = np.concatenate([c0[..., None], diam[:, None, None] * grad], axis=-1)  # (k, m, 3)

    Kq = problem.K(x, y)
    Kint = np.einsum("kq,kqab->kab", w, Kq)
    A_cons = np.einsum("kia,kab,kjb->kij", grad, Kint, grad)

    R = np.eye(m) - D
    scale = _stab_scale(problem, Kq)
    S = scale[:, None, None] * np.einsum("kri,krj->kij", R, R)

    bq = problem.b(x, y)
    Mb = np.einsum("kq,kqa,kql->kal", w, bq, phi)
    B = np.einsum("kia,kal,kjl->kij", grad, Mb, coef)

    gq = problem.gamma(x, y)
    Mg = np.einsum("kq,kql,kqn->kln", w * gq, phi, phi)
    C = np.einsum("kil,kln,kjn->kij", coef, Mg, coef)

    fq = problem.f(x, y)
    Ff = np.einsum("kq,kql->kl", w * fq, phi)
    F = np.einsum("kil,kl->ki", coef, Ff)
    return dict(A=A_cons + S, S=S, B=B, C=C, F=F, area=area)


def local_matrices(polygon: Polygon, problem: ProblemSpec,
                   order: int = DEFAULT_ORDER) -> LocalElement:
    if polygon.area <= 0:
        raise ValueError(f"degenerate polygon {polygon.index}")
    arr = element_arrays(polygon.coords[None], np.asarray(polygon.star_point)[None],
                         problem, order)
    return LocalElement(polygon.index, arr["A"][0], arr["B"][0], arr["C"][0],
                        arr["S"][0], arr["F"][0])


def interpolate(mesh: PolygonalMesh, v, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Edge means of ``v`` for every edge of the mesh."""
    a = mesh.vertices[mesh.edges[:, 0]]
    b = mesh.vertices[mesh.edges[:, 1]]
    pts, w = edge_points(a, b, order)
    return (w * v(pts[..., 0], pts[..., 1])).sum(axis=1) / mesh.edge_lengths


def flux_deviation(pts, w, cen, c0, grad, problem: ProblemSpec):
    """Pi_0 of sigma_h = K grad p + b p and ||sigma_h - Pi_0 sigma_h|| for stacked affines p."""
    x, y = pts[..., 0], pts[..., 1]
    p = c0[:, None] + grad[:, None, 0] * (x - cen[:, None, 0]) \
        + grad[:, None, 1] * (y - cen[:, None, 1])
    sig = np.einsum("kqab,kb->kqa", problem.K(x, y), grad) + problem.b(x, y) * p[..., None]
    mean = np.einsum("kq,kqa->ka", w, sig) / w.sum(axis=1)[:, None]
    dev = sig - mean[:, None, :]
    return mean, np.sqrt(np.einsum("kq,kqa,kqa->k", w, dev, dev).clip(min=0.0))


def pi0_flux(polygon: Polygon, affine: Affine, problem: ProblemSpec,
             order: int = DEFAULT_ORDER):
    """Mean of the discrete flux over P and the L2 norm of its deviation."""
    pts, w = polygon_points(polygon.coords[None], np.asarray(polygon.star_point)[None], order)
    c0 = affine(*polygon.centroid)
    mean, dev = flux_deviation(pts, w, polygon.centroid[None], np.array([c0]),
                               np.asarray(affine.grad)[None], problem)
    return mean[0], float(dev[0])


def affine_coefficients(mesh: PolygonalMesh, uh) -> tuple[np.ndarray, np.ndarray]:
    """Pi_1 u_h on every polygon: values at the centroids (n,) and gradients (n, 2)."""
    uh = np.asarray(uh, dtype=float)
    c0 = np.empty(mesh.n_polygons)
    grad = np.empty((mesh.n_polygons, 2))
    for g in mesh.groups:
        _, _, _, gr, cc, _ = projection_arrays(g.coords)
        u = uh[g.edges]
        c0[g.polys] = np.einsum("kj,kj->k", cc, u)
        grad[g.polys] = np.einsum("kja,kj->ka", gr, u)
    return c0, grad


def chunks(group, size: int = CHUNK):
    """Split a polygon group into slices of at most ``size`` polygons."""
    for s in range(0, len(group), size):
        yield slice(s, s + size)
