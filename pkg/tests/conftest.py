import numpy as np
import pytest
from scipy.spatial import Delaunay

from ncvem.mesh import build_mesh

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one 'criterion N: PASS|FAIL ...' line per acceptance check."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def unstructured_triangles(seed: int, n_inner: int = 40, n_side: int = 6):
    """Delaunay triangulation of the unit square with random interior points."""
    rng = np.random.default_rng(seed)
    s = np.linspace(0.0, 1.0, n_side + 1)[:-1]
    side = np.concatenate([np.column_stack([s, 0 * s]), np.column_stack([1 + 0 * s, s]),
                           np.column_stack([1 - s, 1 + 0 * s]), np.column_stack([0 * s, 1 - s])])
    inner = 0.05 + 0.9 * rng.random((n_inner, 2))
    pts = np.vstack([side, inner])
    tri = Delaunay(pts)
    return build_mesh(pts, tri.simplices)


def regular_polygon(m: int, radius: float = 1.0, center=(0.0, 0.0)):
    t = 2 * np.pi * np.arange(m) / m
    return np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])
