"""Polygonal meshes: edge table, geometry, admissibility, refinement, file I/O.

A mesh is stored as a vertex array plus counterclockwise vertex loops.  Every
edge is a straight segment between two consecutive loop vertices, so a
hanging node created by local refinement is simply an extra (collinear)
vertex of the unrefined neighbour and splits its side into two edges.

Edge orientation: edge ``e`` runs from ``edges[e, 0]`` to ``edges[e, 1]`` and
``edge_normals[e]`` points to the right of that direction.  The polygon
``edge_polys[e, 0]`` traverses the edge in its stored direction (so the normal
is its outer normal); ``edge_polys[e, 1]`` traverses it backwards and is ``-1``
for boundary edges.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MESH_MAGIC = "ncvem-mesh 1"


class MeshError(ValueError):
    """Invalid mesh topology, geometry or file contents."""


@dataclass(frozen=True)
class Polygon:
    """Single-polygon view with cached geometric quantities."""

    index: int
    vertex_ids: np.ndarray
    edge_ids: np.ndarray
    coords: np.ndarray
    area: float
    diameter: float
    centroid: np.ndarray
    boundary_mid: np.ndarray
    star_point: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.vertex_ids)

    @property
    def edge_vectors(self) -> np.ndarray:
        return np.roll(self.coords, -1, axis=0) - self.coords

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.hypot(*self.edge_vectors.T)

    @property
    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.coords + np.roll(self.coords, -1, axis=0))

    @property
    def normals(self) -> np.ndarray:
        """Outer unit normals of the local edges."""
        t = self.edge_vectors
        return np.column_stack([t[:, 1], -t[:, 0]]) / self.edge_lengths[:, None]


@dataclass(frozen=True)
class PolygonGroup:
    """All polygons with the same number ``m`` of edges, stacked for vectorised kernels."""

    m: int
    polys: np.ndarray  # (k,)
    verts: np.ndarray  # (k, m)
    edges: np.ndarray  # (k, m)
    signs: np.ndarray  # (k, m) True where the loop runs along the stored edge direction
    coords: np.ndarray  # (k, m, 2)
    star: np.ndarray  # (k, 2)

    def __len__(self) -> int:
        return len(self.polys)


@dataclass(frozen=True)
class SubTriangulation:
    """Triangles conv(c, E), one per edge of a polygon."""

    star_point: np.ndarray
    edge_ids: np.ndarray
    triangles: np.ndarray  # (m, 3, 2): star point, edge start, edge end
    areas: np.ndarray


@dataclass(frozen=True)
class Violation:
    polygon: int
    kind: str  # "short-edge" | "not-star-shaped"
    value: float


def polygon_geometry(coords: np.ndarray):
    """Area, centroid, perimeter, boundary midpoint and diameter of stacked polygons.

    ``coords`` has shape (k, m, 2) with counterclockwise loops.
    """
    nxt = np.roll(coords, -1, axis=1)
    x0, y0 = coords[..., 0], coords[..., 1]
    x1, y1 = nxt[..., 0], nxt[..., 1]
    cross = x0 * y1 - x1 * y0
    area = 0.5 * cross.sum(axis=1)
    cx = ((x0 + x1) * cross).sum(axis=1) / (6.0 * area)
    cy = ((y0 + y1) * cross).sum(axis=1) / (6.0 * area)
    lengths = np.hypot(x1 - x0, y1 - y0)
    perimeter = lengths.sum(axis=1)
    mids = 0.5 * (coords + nxt)
    bmid = (lengths[..., None] * mids).sum(axis=1) / perimeter[:, None]
    diff = coords[:, :, None, :] - coords[:, None, :, :]
    diameter = np.sqrt((diff**2).sum(axis=-1)).max(axis=(1, 2))
    return area, np.column_stack([cx, cy]), perimeter, bmid, diameter


def _star_ok(coords: np.ndarray, star: np.ndarray, diameter: np.ndarray) -> np.ndarray:
    rel = coords - star[:, None, :]
    nxt = np.roll(rel, -1, axis=1)
    twice = rel[..., 0] * nxt[..., 1] - rel[..., 1] * nxt[..., 0]
    return (twice > 1e-12 * diameter[:, None] ** 2).all(axis=1)


class PolygonalMesh:
    """Immutable polygonal partition of a 2D domain. Build with :func:`build_mesh`."""

    def __init__(self, vertices, ptr, loop_verts, edges, loop_edges, loop_signs,
                 edge_polys, starpoints=None):
        self.vertices = vertices
        self.ptr = ptr
        self.loop_verts = loop_verts
        self.loop_edges = loop_edges
        self.loop_signs = loop_signs
        self.edges = edges
        self.edge_polys = edge_polys
        self.boundary = edge_polys[:, 1] < 0
        self._starpoints = starpoints

        sizes = np.diff(ptr)
        self.sizes = sizes
        n = len(sizes)
        self.area = np.empty(n)
        self.centroid = np.empty((n, 2))
        self.perimeter = np.empty(n)
        self.boundary_mid = np.empty((n, 2))
        self.diameter = np.empty(n)
        self.star = np.empty((n, 2))
        groups = []
        for m in np.unique(sizes):
            polys = np.flatnonzero(sizes == m)
            idx = ptr[polys][:, None] + np.arange(m)
            verts = loop_verts[idx]
            coords = vertices[verts]
            area, cen, per, bmid, diam = polygon_geometry(coords)
            star = cen.copy()
            if starpoints is not None:
                bad = ~_star_ok(coords, star, diam)
                star[bad] = starpoints[polys[bad]]
            self.area[polys] = area
            self.centroid[polys] = cen
            self.perimeter[polys] = per
            self.boundary_mid[polys] = bmid
            self.diameter[polys] = diam
            self.star[polys] = star
            groups.append(PolygonGroup(int(m), polys, verts, loop_edges[idx],
                                       loop_signs[idx], coords, star))
        self.groups: tuple[PolygonGroup, ...] = tuple(groups)

        a = vertices[edges[:, 0]]
        b = vertices[edges[:, 1]]
        t = b - a
        self.edge_lengths = np.hypot(t[:, 0], t[:, 1])
        self.edge_midpoints = 0.5 * (a + b)
        self.edge_normals = np.column_stack([t[:, 1], -t[:, 0]]) / self.edge_lengths[:, None]

    # -- sizes ---------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_polygons(self) -> int:
        return len(self.sizes)

    @property
    def h_max(self) -> float:
        return float(self.diameter.max())

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    @cached_property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def starpoints(self):
        return self._starpoints

    def loop(self, p: int) -> np.ndarray:
        return self.loop_verts[self.ptr[p]:self.ptr[p + 1]]

    def edge_loop(self, p: int) -> np.ndarray:
        return self.loop_edges[self.ptr[p]:self.ptr[p + 1]]

    @property
    def loops(self) -> list[np.ndarray]:
        return [self.loop(p) for p in range(self.n_polygons)]

    def polygon(self, p: int) -> Polygon:
        vids = self.loop(p)
        return Polygon(
            index=p,
            vertex_ids=vids,
            edge_ids=self.edge_loop(p),
            coords=self.vertices[vids],
            area=float(self.area[p]),
            diameter=float(self.diameter[p]),
            centroid=self.centroid[p],
            boundary_mid=self.boundary_mid[p],
            star_point=self.star[p],
        )

    def __iter__(self):
        return (self.polygon(p) for p in range(self.n_polygons))

    def __repr__(self) -> str:
        return (f"PolygonalMesh(n_vertices={self.n_vertices}, n_edges={self.n_edges}, "
                f"n_polygons={self.n_polygons}, h_max={self.h_max:.4g})")


def build_mesh(vertices, loops: Iterable[Sequence[int]], starpoints=None) -> PolygonalMesh:
    """Build the edge table and geometry from vertex coordinates and polygon loops.

    Loops given clockwise are reversed.  Raises :class:`MeshError` for
    degenerate polygons, edges shared by more than two polygons, or
    neighbours traversing a shared edge in the same direction.
    """
    verts = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if not np.isfinite(verts).all():
        raise MeshError("non-finite vertex coordinates")
    nv = len(verts)
    loops = [np.asarray(lp, dtype=np.int64).ravel() for lp in loops]
    if not loops:
        raise MeshError("mesh has no polygons")
    if starpoints is not None:
        starpoints = np.asarray(starpoints, dtype=float).reshape(-1, 2)
        if len(starpoints) != len(loops):
            raise MeshError("starpoints count does not match polygon count")

    fixed = []
    for p, lp in enumerate(loops):
        if len(lp) < 3:
            raise MeshError(f"polygon {p} has fewer than 3 vertices")
        if lp.min() < 0 or lp.max() >= nv:
            raise MeshError(f"polygon {p} references a missing vertex")
        if len(np.unique(lp)) != len(lp):
            raise MeshError(f"polygon {p} repeats a vertex")
        xy = verts[lp]
        nxt = np.roll(xy, -1, axis=0)
        twice_area = np.sum(xy[:, 0] * nxt[:, 1] - nxt[:, 0] * xy[:, 1])
        scale = np.ptp(xy, axis=0).max() ** 2
        if abs(twice_area) <= 1e-14 * scale:
            raise MeshError(f"polygon {p} has zero area")
        fixed.append(lp if twice_area > 0 else lp[::-1].copy())

    sizes = np.array([len(lp) for lp in fixed], dtype=np.int64)
    ptr = np.concatenate([[0], np.cumsum(sizes)])
    flat = np.concatenate(fixed)
    nxt_idx = np.arange(len(flat)) + 1
    nxt_idx[ptr[1:] - 1] = ptr[:-1]
    a, b = flat, flat[nxt_idx]

    keys = np.minimum(a, b) * nv + np.maximum(a, b)
    _, first, inv, counts = np.unique(keys, return_index=True, return_inverse=True,
                                      return_counts=True)
    if (counts > 2).any():
        e = int(np.flatnonzero(counts > 2)[0])
        raise MeshError(f"non-manifold edge shared by {counts[e]} polygons")
    edges = np.column_stack([a[first], b[first]])
    signs = a == edges[inv, 0]
    forward = np.bincount(inv, weights=signs, minlength=len(edges))
    if (forward != 1).any():
        raise MeshError("inconsistent orientation: neighbours traverse a shared edge "
                        "in the same direction")
    owner = np.repeat(np.arange(len(fixed)), sizes)
    edge_polys = np.full((len(edges), 2), -1, dtype=np.int64)
    edge_polys[inv[signs], 0] = owner[signs]
    edge_polys[inv[~signs], 1] = owner[~signs]
    return PolygonalMesh(verts, ptr, flat, edges, inv, signs, edge_polys, starpoints)


def sub_triangulate(polygon: Polygon, star_point=None) -> SubTriangulation:
    c = polygon.star_point if star_point is None else np.asarray(star_point, dtype=float)
    z = polygon.coords
    z1 = np.roll(z, -1, axis=0)
    tris = np.stack([np.broadcast_to(c, z.shape), z, z1], axis=1)
    u, v = z - c, z1 - c
    areas = 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
    if (areas <= 0).any():
        raise MeshError(f"polygon {polygon.index} is not star-shaped with respect to {c}")
    return SubTriangulation(np.asarray(c), polygon.edge_ids, tris, areas)


def validate_admissibility(mesh: PolygonalMesh, rho: float = 0.05) -> list[Violation]:
    """Report polygons with an edge shorter than ``rho*h_P`` or failing the star test."""
    out = []
    for g in mesh.groups:
        h = mesh.diameter[g.polys]
        lengths = mesh.edge_lengths[g.edges]
        ratio = lengths.min(axis=1) / h
        for p, r in zip(g.polys[ratio < rho], ratio[ratio < rho]):
            out.append(Violation(int(p), "short-edge", float(r)))
        ok = _star_ok(g.coords, g.star, h)
        for p in g.polys[~ok]:
            out.append(Violation(int(p), "not-star-shaped", 0.0))
    out.sort(key=lambda v: (v.polygon, v.kind))
    return out


def refine(mesh: PolygonalMesh, marked) -> PolygonalMesh:
    """Split each marked m-gon into m quadrilaterals (vertex, midpoint, centroid, midpoint).

    Midpoints of split edges become vertices of every polygon sharing the
    edge, so unmarked neighbours acquire a hanging node.
    """
    marked = np.unique(np.asarray(marked, dtype=np.int64).ravel())
    if marked.size and (marked[0] < 0 or marked[-1] >= mesh.n_polygons):
        raise IndexError("marked polygon index out of range")
    if marked.size == 0:
        return mesh
    is_marked = np.zeros(mesh.n_polygons, dtype=bool)
    is_marked[marked] = True

    split = np.zeros(mesh.n_edges, dtype=bool)
    for p in marked:
        split[mesh.edge_loop(p)] = True
    nv = mesh.n_vertices
    mid_id = np.full(mesh.n_edges, -1, dtype=np.int64)
    split_edges = np.flatnonzero(split)
    mid_id[split_edges] = nv + np.arange(len(split_edges))
    cen_id = nv + len(split_edges) + np.arange(len(marked))
    new_vertices = np.vstack([mesh.vertices, mesh.edge_midpoints[split_edges],
                              mesh.centroid[marked]])

    touched = np.zeros(mesh.n_polygons, dtype=bool)
    touched[is_marked] = True
    has_split = np.add.reduceat(split[mesh.loop_edges].astype(np.int64), mesh.ptr[:-1]) > 0
    touched |= has_split

    loops: list = []
    k = 0
    for p in range(mesh.n_polygons):
        vids = mesh.loop(p)
        if not touched[p]:
            loops.append(vids)
            continue
        eids = mesh.edge_loop(p)
        if is_marked[p]:
            mids = mid_id[eids]
            c = cen_id[k]
            k += 1
            prev = np.roll(mids, 1)
            for j in range(len(vids)):
                loops.append((vids[j], mids[j], c, prev[j]))
        else:
            lp = []
            for v, e in zip(vids, eids):
                lp.append(v)
                if split[e]:
                    lp.append(mid_id[e])
            loops.append(lp)
    return build_mesh(new_vertices, loops)


def uniform_refine(mesh: PolygonalMesh) -> PolygonalMesh:
    return refine(mesh, np.arange(mesh.n_polygons))


# -- generators ------------------------------------------------------------

def _grid(nx: int, ny: int, x0: float, x1: float, y0: float, y1: float, keep=None):
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    loops = []
    for i in range(nx):
        for j in range(ny):
            centre = (0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))
            if keep is not None and not keep(*centre):
                continue
            loops.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)))
    used = np.unique(np.concatenate(loops))
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return build_mesh(verts[used], [remap[np.asarray(lp)] for lp in loops])


def square_mesh(n: int = 8, lower=(0.0, 0.0), upper=(1.0, 1.0)) -> PolygonalMesh:
    """Uniform n-by-n grid of squares."""
    return _grid(n, n, lower[0], upper[0], lower[1], upper[1])


def lshape_mesh(n: int = 4) -> PolygonalMesh:
    """(-1,1)^2 minus [0,1)x(-1,0], as three quadrants of n-by-n squares."""
    return _grid(2 * n, 2 * n, -1.0, 1.0, -1.0, 1.0,
                 keep=lambda x, y: not (x > 0 and y < 0))


# -- file I/O --------------------------------------------------------------

def write_mesh(mesh: PolygonalMesh, path) -> None:
    lines = [MESH_MAGIC, f"vertices {mesh.n_vertices}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"polygons {mesh.n_polygons}")
    lines += [" ".join(map(str, mesh.loop(p).tolist())) for p in range(mesh.n_polygons)]
    if mesh.starpoints is not None:
        lines.append(f"starpoints {mesh.n_polygons}")
        lines += [f"{x!r} {y!r}" for x, y in mesh.starpoints.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> PolygonalMesh:
    rows = [ln.strip() for ln in Path(path).read_text().splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows or rows[0] != MESH_MAGIC:
        raise MeshError(f"{path}: missing '{MESH_MAGIC}' header")
    pos = 1

    def section(name):
        nonlocal pos
        if pos >= len(rows):
            raise MeshError(f"{path}: missing '{name}' section")
        head = rows[pos].split()
        if len(head) != 2 or head[0] != name or not head[1].isdigit():
            raise MeshError(f"{path}: expected '{name} <count>', got {rows[pos]!r}")
        count = int(head[1])
        body = rows[pos + 1:pos + 1 + count]
        if len(body) != count:
            raise MeshError(f"{path}: section '{name}' declares {count} rows, found {len(body)}")
        pos += 1 + count
        return body

    try:
        verts = [tuple(map(float, r.split())) for r in section("vertices")]
        if any(len(v) != 2 for v in verts):
            raise MeshError(f"{path}: vertex rows must hold two coordinates")
        loops = [list(map(int, r.split())) for r in section("polygons")]
        star = None
        if pos < len(rows):
            star = [tuple(map(float, r.split())) for r in section("starpoints")]
            if len(star) != len(loops) or any(len(s) != 2 for s in star):
                raise MeshError(f"{path}: starpoints must match the polygon count")
    except ValueError as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: malformed number ({exc})") from exc
    if pos != len(rows):
        raise MeshError(f"{path}: trailing content after the last section")
    return build_mesh(np.array(verts, dtype=float), loops, starpoints=star)
