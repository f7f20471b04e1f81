"""Finite-difference Jacobians for the small root-finding problems."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def fd_jacobian(
    fun: Callable[[np.ndarray], np.ndarray],
    z: np.ndarray,
    steps: Sequence[float],
) -> np.ndarray:
    """Central-difference Jacobian of ``fun`` at ``z`` with per-coordinate steps."""
    z = np.asarray(z, dtype=float)
    cols = []
    for i, h in enumerate(steps):
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        cols.append((fun(zp) - fun(zm)) / (2.0 * h))
    return np.column_stack(cols)
