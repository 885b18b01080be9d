"""Collapsed-coordinate (conical product) rules on the reference simplex.

The reference simplex is ``{x >= 0, sum(x) <= 1}``; weights sum to ``1/dim!``.
A rule of degree ``k`` uses ``ceil((k + 1) / 2)`` points per direction, all
weights positive.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def simplex_rule(dim: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Points (npts, dim) and weights (npts,) exact for polynomials of total degree ``degree``."""
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n = max(1, math.ceil((degree + 1) / 2))
    # direction i carries the weight (1 - t)^(dim - 1 - i) from the Duffy map
    factors = []
    for i in range(dim):
        a = dim - 1 - i
        x, w = roots_jacobi(n, a, 0)
        factors.append(((x + 1) / 2, w / 2 ** (a + 1)))
    grids = np.meshgrid(*[t for t, _ in factors], indexing="ij")
    wgrids = np.meshgrid(*[w for _, w in factors], indexing="ij")
    t = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    points = np.empty_like(t)
    scale = np.ones(len(t))
    for i in range(dim):
        points[:, i] = scale * t[:, i]
        scale = scale * (1 - t[:, i])
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def barycentric(points: np.ndarray) -> np.ndarray:
    """P1 basis values at reference points: column 0 is ``1 - sum(x)``."""
    return np.column_stack([1.0 - points.sum(axis=1), points])
