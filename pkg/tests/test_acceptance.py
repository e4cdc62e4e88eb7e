"""Acceptance criteria 1-10.  Each test records one PASS/FAIL line, echoed in the summary.

The benchmark runs are cached per module; together they take a few minutes.
"""
import math
import time

import numpy as np

from conftest import unstructured_triangles
from cr_oracle import edge_key, solve_cr
from ncvem.adapt import AdaptConfig, dorfler_mark, run_loop
from ncvem.bench import BENCHMARKS, fit_rate, patch_problem
from ncvem.estimator import estimate
from ncvem.mesh import lshape_mesh, refine, square_mesh, uniform_refine
from ncvem.problem import ProblemSpec
from ncvem.quadrature import integrate_polygon, monomial_moment
from ncvem.system import assemble, solve
from ncvem.vem import interpolate

WINDOW = 4
_RUNS = {}


def run(name, mode, norm="h1"):
    """Cached benchmark run: (records, seconds)."""
    key = (name, mode, norm)
    if key not in _RUNS:
        bench = BENCHMARKS[name]
        t0 = time.perf_counter()
        recs = run_loop(bench.make_mesh(), bench.make_problem(),
                        AdaptConfig(mode=mode, norm=norm, theta=0.5))
        _RUNS[key] = (recs, time.perf_counter() - t0)
    return _RUNS[key]


def rate(recs, key):
    return fit_rate([r.ndof for r in recs], [getattr(r, key) for r in recs], WINDOW)


def within(value, target, tol):
    return abs(value - target) <= tol


def test_criterion_01_patch_test(acceptance_log):
    alpha, beta, delta = 0.7, -1.3, 2.1
    prob = patch_problem(alpha, beta, delta)
    exact = lambda x, y: alpha + beta * x + delta * y
    t0 = time.perf_counter()
    meshes = []
    for base in (square_mesh(8), lshape_mesh(4), square_mesh(8, (-1.0, -1.0), (1.0, 1.0))):
        meshes += [base, uniform_refine(base), refine(base, np.arange(0, base.n_polygons, 3))]
    dof_err = comp = 0.0
    for mesh in meshes:
        uh = solve(assemble(mesh, prob))
        dof_err = max(dof_err, np.abs(uh - interpolate(mesh, exact)).max())
        est = estimate(mesh, prob, uh)
        comp = max(comp, est.eta.max(), est.zeta.max(), est.lam.max(), est.xi.max())
    seconds = time.perf_counter() - t0
    ok = dof_err <= 1e-9 and comp <= 1e-9 and seconds < 1.0
    acceptance_log(1, ok, f"patch test on {len(meshes)} meshes: max dof error {dof_err:.1e}, "
                          f"max component {comp:.1e}, {seconds:.2f} s")
    assert ok


def test_criterion_02_crouzeix_raviart(acceptance_log):
    K = np.array([[1.5, 0.2], [0.2, 0.8]])
    b = lambda x, y: np.stack([0.5 + np.asarray(x), -np.asarray(y)], -1)
    f = lambda x, y: 1 + np.asarray(x) - 2 * np.asarray(y)
    g = lambda x, y: np.asarray(x) + 2 * np.asarray(y)
    prob = ProblemSpec(diffusion=K, advection=b, reaction=1.0, source=f, dirichlet=g)
    t0 = time.perf_counter()
    mat_err = sol_err = 0.0
    for seed, n in ((10, 30), (11, 60), (12, 120)):
        mesh = unstructured_triangles(seed, n, 8)
        system = assemble(mesh, prob)
        uh = solve(system)
        A, u_cr, index = solve_cr(mesh.vertices, [mesh.loop(p) for p in range(mesh.n_polygons)],
                                  K, b, 1.0, f, g)
        perm = np.array([index[edge_key(*e)] for e in mesh.edges.tolist()])
        mat_err = max(mat_err, np.abs(system.full_matrix.toarray()
                                      - A[perm][:, perm].toarray()).max())
        sol_err = max(sol_err, np.abs(uh - u_cr[perm]).max())
    seconds = time.perf_counter() - t0
    ok = mat_err <= 1e-10 and sol_err <= 1e-10 and seconds < 5.0
    acceptance_log(2, ok, f"CR equivalence on 3 meshes: matrix {mat_err:.1e}, "
                          f"solution {sol_err:.1e}, {seconds:.2f} s")
    assert ok


def test_criterion_03_quadrature(acceptance_log):
    rng = np.random.default_rng(2024)
    pool = []
    for bench in BENCHMARKS.values():
        mesh = bench.make_mesh()
        for _ in range(4):  # random local refinement adds hanging-node polygons
            mesh = refine(mesh, np.flatnonzero(rng.random(mesh.n_polygons) < 0.25))
        pool += list(mesh)
    chosen = [pool[i] for i in rng.choice(len(pool), 100, replace=False)]
    worst = 0.0
    for p in chosen:
        for a in range(10):
            for b in range(10 - a):
                ref = monomial_moment(p.coords, a, b)
                val = integrate_polygon(p, lambda x, y: x**a * y**b, order=9)
                worst = max(worst, abs(val - ref) / abs(ref) if ref else abs(val))
    ok = worst <= 1e-12
    sizes = sorted({p.n_edges for p in chosen})
    acceptance_log(3, ok, f"100 polygons ({sizes[0]}-{sizes[-1]} edges), degree <= 9: "
                          f"max relative error {worst:.1e}")
    assert ok


def test_criterion_04_square_layer_uniform(acceptance_log):
    recs, seconds = run("square-layer", "uniform")
    h1, l2 = rate(recs, "H1e"), rate(recs, "L2e")
    ok = (6 <= len(recs) <= 8 and recs[-1].ndof <= 2e5 and within(h1, 0.5, 0.1)
          and within(l2, 1.0, 0.15) and seconds < 120)
    acceptance_log(4, ok, f"square-layer uniform, {len(recs)} levels to ndof {recs[-1].ndof}: "
                          f"H1e rate {h1:.3f} (0.5 +- 0.1), L2e rate {l2:.3f} (1.0 +- 0.15), "
                          f"{seconds:.0f} s")
    assert ok


def test_criterion_05_lshape(acceptance_log):
    uni, t_uni = run("lshape", "uniform")
    ada, t_ada = run("lshape", "adaptive", "h1")
    ada_l2, t_l2 = run("lshape", "adaptive", "l2")
    h1_uni = rate(uni, "H1e")
    h1_ada = rate(ada, "H1e")
    l2_ada = rate(ada_l2, "L2e")
    seconds = t_uni + t_ada + t_l2
    ok = (within(h1_uni, 1 / 3, 0.07) and within(h1_ada, 0.5, 0.07)
          and within(l2_ada, 5 / 6, 0.12) and seconds < 180)
    acceptance_log(5, ok, f"L-shape: uniform H1e rate {h1_uni:.3f} (1/3 +- 0.07); adaptive "
                          f"H1e rate {h1_ada:.3f} (0.5 +- 0.07), L2e rate {l2_ada:.3f} "
                          f"(5/6 +- 0.12, L2-driven marking); {seconds:.0f} s")
    assert ok


def test_criterion_06_efficiency_index(acceptance_log):
    parts, ok = [], True
    for name in ("square-layer", "lshape"):
        recs, _ = run(name, "adaptive", "h1")
        eff = np.array([r.eff_index for r in recs if r.level >= 3])
        good = eff.min() >= 1 and eff.max() <= 12 and np.median(eff) <= 8
        ok &= bool(good)
        parts.append(f"{name} [{eff.min():.2f}, {eff.max():.2f}] median {np.median(eff):.2f}")
    acceptance_log(6, ok, "adaptive efficiency index, levels >= 3: " + "; ".join(parts))
    assert ok


def test_criterion_07_estimator_components(acceptance_log):
    recs, _ = run("square-layer", "uniform")
    tail = recs[-WINDOW:]
    mu_rate = rate(recs, "H1mu")
    detail, ok = [], True
    for key in ("eta", "zeta", "lam", "xi"):
        vals = [getattr(r, key) for r in tail]
        dec = all(a > b for a, b in zip(vals, vals[1:]))
        r = rate(recs, key)
        ok &= dec and abs(r - mu_rate) <= 0.2
        detail.append(f"{key} {r:.3f}{'' if dec else ' (not decreasing)'}")
    dominant = all(r.eta >= max(r.zeta, r.lam, r.xi) for r in recs if r.level >= 2)
    ok &= dominant
    acceptance_log(7, ok, f"component rates vs H1mu rate {mu_rate:.3f}: " + ", ".join(detail)
                          + f"; eta dominates from level 2: {dominant}")
    assert ok


def test_criterion_08_reliability_ratio(acceptance_log):
    parts, ok = [], True
    for name in ("square-layer", "lshape", "helmholtz"):
        recs, _ = run(name, "uniform")
        ratio = np.array([r.H1e / r.H1mu for r in recs[-5:]])
        spread = ratio.max() / ratio.min()
        ok &= bool(spread < 3)
        parts.append(f"{name} {spread:.2f}")
    acceptance_log(8, ok, "max/min of H1e/H1mu over last 5 uniform levels: " + ", ".join(parts))
    assert ok


def test_criterion_09_dorfler(acceptance_log):
    rng = np.random.default_rng(9)
    failures = 0
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        ind = rng.random(n) ** rng.uniform(0.5, 6)
        if rng.random() < 0.2:
            ind = np.round(ind, 1)  # ties and zeros
            if ind.sum() == 0:
                ind[0] = 1.0
        marked = dorfler_mark(ind, 0.5)
        # correctly rounded sums, so exact ties at the threshold are judged exactly
        total = math.fsum(ind)
        bulk = math.fsum(ind[marked]) >= 0.5 * total
        drop = np.delete(marked, np.argmin(ind[marked]))
        minimal = math.fsum(ind[drop]) < 0.5 * total
        failures += not (bulk and minimal)
    ok = failures == 0
    acceptance_log(9, ok, f"Dorfler marking on 1000 random vectors: {failures} failures")
    assert ok


def test_criterion_10_refinement(acceptance_log):
    rng = np.random.default_rng(10)
    mesh = lshape_mesh(4)
    total = mesh.area.sum()
    worst = 0.0
    bad_children = 0
    for _ in range(10):
        marked = np.flatnonzero(rng.random(mesh.n_polygons) < 0.2)
        new = refine(mesh, marked)
        worst = max(worst, abs(new.area.sum() - total) / total)
        owners = {}
        for q in range(new.n_polygons):
            for v in new.loop(q).tolist():
                owners.setdefault(v, []).append(q)
        for p in marked:
            # children are the polygons having the parent's centroid as a vertex
            c = np.flatnonzero(np.all(np.abs(new.vertices - mesh.centroid[p]) <= 1e-14, axis=1))
            kids = owners.get(int(c[0]), []) if c.size == 1 else []
            m = mesh.sizes[p]
            if (len(kids) != m or any(new.sizes[q] != 4 for q in kids)
                    or abs(new.area[kids].sum() - mesh.area[p]) > 1e-12 * total):
                bad_children += 1
        mesh = new
    ok = worst <= 1e-12 and bad_children == 0
    acceptance_log(10, ok, f"10 random refinement steps: area drift {worst:.1e}, "
                           f"{bad_children} parents with wrong children")
    assert ok
