"""Benchmark problems, discrete errors, convergence rates and CSV reporting."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .mesh import PolygonalMesh, lshape_mesh, square_mesh
from .problem import ProblemSpec
from .quadrature import DEFAULT_ORDER, polygon_points
from .vem import affine_coefficients, chunks

CSV_HEADER = ("level", "ndof", "hmax", "H1e", "L2e", "eta", "zeta", "lambda", "xi",
              "H1mu", "L2mu", "eff_index", "seconds")
COMPONENT_HEADER = ("level", "ndof", "eta", "zeta", "lambda", "xi")


# -- exact solutions -------------------------------------------------------

def _layer(x, y):
    s = 25 * x - 100 * y + 50
    q = 1 + s * s
    a = np.arctan(s)
    p = 16 * x * (1 - x) * y * (1 - y)
    px = 16 * (1 - 2 * x) * y * (1 - y)
    py = 16 * x * (1 - x) * (1 - 2 * y)
    ax, ay = 25 / q, -100 / q
    u = p * a
    ux = px * a + p * ax
    uy = py * a + p * ay
    lap_p = -32 * (y * (1 - y) + x * (1 - x))
    lap_a = -2 * s * (25**2 + 100**2) / q**2
    lap_u = lap_p * a + 2 * (px * ax + py * ay) + p * lap_a
    return u, ux, uy, lap_u


def square_layer_u(x, y):
    return _layer(x, y)[0]


def square_layer_grad(x, y):
    _, ux, uy, _ = _layer(x, y)
    return np.stack([ux, uy], axis=-1)


def square_layer_f(x, y):
    # K = I, b = (x, y), gamma = x^2 + y^3:  f = -lap u - 2u - x u_x - y u_y + gamma u
    u, ux, uy, lap_u = _layer(x, y)
    return -lap_u - x * ux - y * uy + (x**2 + y**3 - 2) * u


def _polar(x, y):
    r = np.hypot(x, y)
    theta = np.mod(np.arctan2(y, x), 2 * np.pi)
    return r, theta


def lshape_u(x, y):
    r, t = _polar(x, y)
    return r ** (2 / 3) * np.sin(2 * t / 3)


def lshape_grad(x, y):
    r, t = _polar(x, y)
    c = (2 / 3) * r ** (-1 / 3)
    return np.stack([-c * np.sin(t / 3), c * np.cos(t / 3)], axis=-1)


def lshape_f(x, y):
    # u harmonic and r u_r = 2u/3 with b = (x, y), gamma = -4
    return -(20 / 3) * lshape_u(x, y)


def _helmholtz(x, y):
    th = np.tanh(-9 * (x**2 + y**2 - 0.25))
    s = 1 - th**2
    return th, s


def helmholtz_u(x, y):
    return 1 + _helmholtz(x, y)[0]


def helmholtz_grad(x, y):
    _, s = _helmholtz(x, y)
    return np.stack([-18 * x * s, -18 * y * s], axis=-1)


def helmholtz_f(x, y):
    th, s = _helmholtz(x, y)
    lap_u = -36 * s - 2 * th * s * 324 * (x**2 + y**2)
    return -lap_u - 9 * (1 + th)


def _xy_field(x, y):
    return np.stack([x, y], axis=-1)


def square_layer_problem(**kw) -> ProblemSpec:
    return ProblemSpec(advection=_xy_field, reaction=lambda x, y: x**2 + y**3,
                       source=square_layer_f, exact=square_layer_u,
                       exact_grad=square_layer_grad, sigma=1.0, name="square-layer", **kw)


def lshape_problem(**kw) -> ProblemSpec:
    return ProblemSpec(advection=_xy_field, reaction=-4.0, source=lshape_f,
                       dirichlet=lshape_u, exact=lshape_u, exact_grad=lshape_grad,
                       sigma=2 / 3, name="lshape", **kw)


def helmholtz_problem(**kw) -> ProblemSpec:
    return ProblemSpec(reaction=-9.0, source=helmholtz_f, dirichlet=helmholtz_u,
                       exact=helmholtz_u, exact_grad=helmholtz_grad, sigma=1.0,
                       name="helmholtz", **kw)


def patch_problem(alpha: float = 1.0, beta: float = 2.0, delta: float = -3.0,
                  **kw) -> ProblemSpec:
    """Poisson problem with the affine exact solution alpha + beta x + delta y."""
    def u(x, y):
        return alpha + beta * np.asarray(x) + delta * np.asarray(y)

    def grad(x, y):
        x = np.asarray(x)
        return np.broadcast_to(np.array([beta, delta]), x.shape + (2,)).copy()

    return ProblemSpec(dirichlet=u, exact=u, exact_grad=grad, name="patch", **kw)


@dataclass
class Benchmark:
    name: str
    make_mesh: Callable[[], PolygonalMesh]
    make_problem: Callable[..., ProblemSpec]
    reference_rates: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return self.make_problem().sigma


# rates of error ~ ndof^(-rate)
BENCHMARKS = {
    "square-layer": Benchmark(
        "square-layer", lambda: square_mesh(8), square_layer_problem,
        {("uniform", "H1e"): 0.5, ("uniform", "L2e"): 1.0,
         ("adaptive", "H1e"): 0.5, ("adaptive", "L2e"): 1.0}),
    "lshape": Benchmark(
        "lshape", lambda: lshape_mesh(4), lshape_problem,
        {("uniform", "H1e"): 1 / 3, ("uniform", "L2e"): 2 / 3,
         ("adaptive", "H1e"): 0.5, ("adaptive", "L2e"): 5 / 6}),
    "helmholtz": Benchmark(
        "helmholtz", lambda: square_mesh(8, (-1.0, -1.0), (1.0, 1.0)), helmholtz_problem,
        {("uniform", "H1e"): 0.5, ("uniform", "L2e"): 1.0,
         ("adaptive", "H1e"): 0.5, ("adaptive", "L2e"): 1.0}),
}


# -- errors and rates ------------------------------------------------------

def compute_errors(mesh: PolygonalMesh, problem: ProblemSpec, uh,
                   order: int = DEFAULT_ORDER) -> tuple[float, float]:
    """(|u - Pi_1 u_h|_{1,pw}, ||u - Pi_1 u_h||_{L2}) by polygon quadrature."""
    if not problem.has_exact:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    c0, grad = affine_coefficients(mesh, uh)
    h1 = np.zeros(mesh.n_polygons)
    l2 = np.zeros(mesh.n_polygons)
    for g in mesh.groups:
        for sl in chunks(g):
            polys = g.polys[sl]
            pts, w = polygon_points(g.coords[sl], g.star[sl], order)
            x, y = pts[..., 0], pts[..., 1]
            cen = mesh.centroid[polys]
            p = c0[polys, None] + grad[polys, None, 0] * (x - cen[:, None, 0]) \
                + grad[polys, None, 1] * (y - cen[:, None, 1])
            de = problem.exact_grad(x, y) - grad[polys, None, :]
            h1[polys] = np.einsum("kq,kqa,kqa->k", w, de, de)
            l2[polys] = (w * (problem.exact(x, y) - p) ** 2).sum(axis=1)
    return float(np.sqrt(h1.sum())), float(np.sqrt(l2.sum()))


def fit_rate(ndof: Sequence[float], errors: Sequence[float], window: int = 4) -> float:
    """Negated least-squares slope of log(error) against log(ndof) over the last ``window`` points."""
    n = np.asarray(ndof, dtype=float)[-window:]
    e = np.asarray(errors, dtype=float)[-window:]
    if len(n) < 2:
        raise ValueError("need at least two points to fit a rate")
    if (n <= 0).any() or (e <= 0).any():
        raise ValueError("ndof and errors must be positive")
    if np.ptp(np.log(n)) == 0:
        raise ValueError("degenerate fit: constant ndof")
    return float(-np.polyfit(np.log(n), np.log(e), 1)[0])


@dataclass
class ConvergenceTable:
    records: list
    rates: dict

    @classmethod
    def from_records(cls, records, window: int = 4) -> "ConvergenceTable":
        ndof = [r.ndof for r in records]
        rates = {}
        for key in ("H1e", "L2e", "H1mu", "L2mu", "eta", "zeta", "lam", "xi"):
            vals = [getattr(r, key) for r in records]
            try:
                rates[key] = fit_rate(ndof, vals, window)
            except ValueError:
                rates[key] = float("nan")
        return cls(list(records), rates)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([_fmt(v) for v in (r.level, r.ndof, r.hmax, r.H1e, r.L2e, r.eta, r.zeta,
                                          r.lam, r.xi, r.H1mu, r.L2mu, r.eff_index, r.seconds)])


def write_components_csv(records, path, norm: str = "h1") -> None:
    """Estimator component totals per level; ``norm='l2'`` uses the h^(2 sigma)-weighted sums."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COMPONENT_HEADER)
        for r in records:
            comps = (r.eta, r.zeta, r.lam, r.xi) if norm == "h1" else r.l2_components
            w.writerow([_fmt(r.level), _fmt(r.ndof)] + [_fmt(v) for v in comps])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
