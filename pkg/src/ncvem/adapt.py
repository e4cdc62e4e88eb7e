"""Dörfler marking and the SOLVE - ESTIMATE - MARK - REFINE loop."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bench import compute_errors
from .estimator import EstimatorBreakdown, efficiency_index, estimate
from .mesh import PolygonalMesh, refine, validate_admissibility
from .problem import ProblemSpec
from .quadrature import DEFAULT_ORDER
from .system import assemble, solve

logger = logging.getLogger(__name__)


@dataclass
class AdaptConfig:
    theta: float = 0.5
    max_levels: int = 25
    max_dofs: int = 200_000
    mode: str = "adaptive"  # "uniform" | "adaptive"
    norm: str = "h1"  # indicator driving the marking: "h1" | "l2"
    quad_order: int = DEFAULT_ORDER
    rho: float = 0.05
    tol: float = 1e-10  # stop once H1mu falls below this (exact reproduction)

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")
        if self.mode not in ("uniform", "adaptive"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.norm not in ("h1", "l2"):
            raise ValueError(f"unknown norm {self.norm!r}")


@dataclass
class LevelRecord:
    level: int
    ndof: int
    hmax: float
    H1e: float
    L2e: float
    eta: float
    zeta: float
    lam: float
    xi: float
    H1mu: float
    L2mu: float
    eff_index: float
    seconds: float
    n_polygons: int = 0
    n_marked: int = 0
    residual: float = 0.0
    l2_components: tuple = (0.0, 0.0, 0.0, 0.0)  # h^sigma-weighted eta, zeta, lambda, xi
    estimator: Optional[EstimatorBreakdown] = field(default=None, repr=False)
    mesh: Optional[PolygonalMesh] = field(default=None, repr=False)
    marked: Optional[np.ndarray] = field(default=None, repr=False)


def dorfler_mark(indicators, theta: float = 0.5) -> np.ndarray:
    """Smallest set of polygons whose squared indicators carry a theta-fraction of the total.

    ``indicators`` are squared values.  Greedy on the descending sort, ties
    broken by ascending index; returns sorted polygon indices (empty if the
    total vanishes).
    """
    ind = np.asarray(indicators, dtype=float)
    if (ind < 0).any():
        raise ValueError("indicators must be nonnegative")
    total = ind.sum()
    if total <= 0:
        return np.empty(0, dtype=np.int64)
    order = np.lexsort((np.arange(len(ind)), -ind))
    ranked = ind[order]
    target = theta * math.fsum(ranked)
    csum = np.cumsum(ranked)
    k = min(int(np.searchsorted(csum, target, side="left")) + 1, len(ind))
    # the running sum may sit an ulp off the target; settle the cut with exact sums
    while k > 1 and math.fsum(ranked[:k - 1]) >= target:
        k -= 1
    while k < len(ind) and math.fsum(ranked[:k]) < target:
        k += 1
    return np.sort(order[:k])


def run_loop(mesh: PolygonalMesh, problem: ProblemSpec, config: AdaptConfig = None,
             on_level: Callable[[LevelRecord], None] = None,
             keep: bool = False) -> list[LevelRecord]:
    """Run the adaptive (or uniform) loop; one record per solved level.

    The loop stops after ``max_levels`` levels, when the next mesh would
    exceed ``max_dofs``, or when nothing is marked (H1mu <= ``tol``).  With
    ``keep=True`` every record carries its mesh, estimator and marked set;
    otherwise only the last record keeps its mesh.
    """
    config = config or AdaptConfig()
    records: list[LevelRecord] = []
    for level in range(config.max_levels):
        t0 = time.perf_counter()
        bad = validate_admissibility(mesh, config.rho)
        if bad:
            logger.info("level %d: %d admissibility warnings", level, len(bad))
        system = assemble(mesh, problem, config.quad_order)
        try:
            uh, residual = solve(system, return_residual=True)
        except Exception as exc:
            exc.args = (f"level {level} ({mesh.n_edges} dofs): {exc}",) + exc.args[1:]
            raise
        est = estimate(mesh, problem, uh, config.quad_order)
        if problem.has_exact:
            h1e, l2e = compute_errors(mesh, problem, uh, config.quad_order)
            eff = efficiency_index(est, h1e)
        else:
            h1e = l2e = eff = float("nan")

        if est.H1mu <= config.tol:
            marked = np.empty(0, dtype=np.int64)
        elif config.mode == "uniform":
            marked = np.arange(mesh.n_polygons)
        else:
            marked = dorfler_mark(est.indicators(config.norm), config.theta)
        rec = LevelRecord(level, mesh.n_edges, mesh.h_max, h1e, l2e, est.eta_total,
                          est.zeta_total, est.lam_total, est.xi_total, est.H1mu, est.L2mu,
                          eff, time.perf_counter() - t0, mesh.n_polygons, len(marked),
                          residual, est.weighted_totals())
        if keep:
            rec.estimator, rec.mesh, rec.marked = est, mesh, marked
        records.append(rec)
        logger.info("level %d ndof %d H1mu %.3e H1e %.3e", level, rec.ndof, rec.H1mu, h1e)
        if on_level is not None:
            on_level(rec)
        if len(marked) == 0 or level == config.max_levels - 1:
            break
        new_mesh = refine(mesh, marked)
        if new_mesh.n_edges > config.max_dofs:
            break
        mesh = new_mesh
    records[-1].mesh = mesh
    return records
