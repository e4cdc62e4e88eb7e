"""Coefficients and data of -div(K grad u + b u) + gamma u = f, u = g on the boundary."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]

STAB_SCALES = ("one", "sqrtA")


def _as_field(value, shape: tuple) -> Field:
    """Wrap a constant (or pass through a callable) as a vectorised field with trailing ``shape``."""
    if callable(value):
        return value
    const = np.broadcast_to(np.asarray(value, dtype=float), shape)

    def field(x, y):
        x = np.asarray(x)
        return np.broadcast_to(const, x.shape + shape).copy()

    return field


@dataclass
class ProblemSpec:
    """PDE data.  Constants are accepted anywhere a field is expected.

    ``dirichlet=None`` means homogeneous boundary data.  ``sigma`` is the
    elliptic regularity index used to weight the L2 estimator.
    """

    diffusion: object = ((1.0, 0.0), (0.0, 1.0))
    advection: object = (0.0, 0.0)
    reaction: object = 0.0
    source: object = 0.0
    dirichlet: object = None
    exact: Optional[Field] = None
    exact_grad: Optional[Field] = None
    sigma: float = 1.0
    stab_scale: str = "one"
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError("sigma must lie in (0, 1]")
        if self.stab_scale not in STAB_SCALES:
            raise ValueError(f"stab_scale must be one of {STAB_SCALES}")
        self.K = _as_field(self.diffusion, (2, 2))
        self.b = _as_field(self.advection, (2,))
        self.gamma = _as_field(self.reaction, ())
        self.f = _as_field(self.source, ())
        self.g = _as_field(0.0 if self.dirichlet is None else self.dirichlet, ())

    @property
    def homogeneous(self) -> bool:
        return self.dirichlet is None

    @property
    def has_exact(self) -> bool:
        return self.exact is not None and self.exact_grad is not None

    def check_spd(self, points: np.ndarray) -> None:
        """Raise ValueError unless K is symmetric positive definite at ``points``."""
        K = self.K(points[:, 0], points[:, 1])
        if not np.allclose(K, np.swapaxes(K, -1, -2), rtol=1e-12, atol=1e-14):
            raise ValueError("diffusion coefficient K is not symmetric")
        if (np.linalg.eigvalsh(K)[..., 0] <= 0).any():
            raise ValueError("diffusion coefficient K is not positive definite")
