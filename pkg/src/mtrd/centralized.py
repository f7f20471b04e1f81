"""Centralized rate-distortion function via reverse water-filling.

The centralized system sees all sources at one encoder; its rate-distortion
function is the classical reverse water-filling solution over the eigenvalues
of the source covariance. A single water level delta is chosen so the
per-mode allocations min(delta, lambda_l) sum to the distortion budget;
the rate is half the sum of log(lambda_l / allocation_l).
"""

from __future__ import annotations

from dataclasses import dataclass

import math

from .errors import InvalidDistortion
from .model import GaussianSource, eigenvalues

#: Bisection stops once the bracket is narrower than this (water level units).
BISECTION_ATOL = 1e-13


@dataclass(frozen=True)
class WaterFilling:
    """Water level, per-eigenvalue allocations, and the resulting rate (nats)."""

    delta: float
    allocations: tuple[float, ...]
    rate: float


def r_centralized(src: GaussianSource, d: float) -> WaterFilling:
    """Reverse water-filling rate at average distortion ``d``.

    The level is bracketed in [0, lambda_max], bisected to ``BISECTION_ATOL``
    and then snapped exactly by solving the linear allocation equation on the
    active set, so the allocation identity holds to machine precision. For
    d below the smallest eigenvalue this reduces to delta = d and rate
    (1/2) log(det(Gamma) / d^L).
    """
    if d <= 0:
        raise InvalidDistortion(f"distortion must be positive, got {d}")
    lams = eigenvalues(src.gamma)
    total = sum(lams)
    target = min(src.L * d, total)

    lo, hi = 0.0, lams[-1]
    while hi - lo > BISECTION_ATOL:
        mid = 0.5 * (lo + hi)
        if sum(min(mid, lam) for lam in lams) < target:
            lo = mid
        else:
            hi = mid
    delta = 0.5 * (lo + hi)

    # Snap: with the clamped set fixed, the level solves a linear equation.
    clamped = [lam for lam in lams if lam <= delta]
    active = src.L - len(clamped)
    if active > 0:
        exact = (target - sum(clamped)) / active
        # Accept only if it leaves the set partition intact.
        still_clamped = [lam for lam in lams if lam <= exact]
        if len(still_clamped) == len(clamped):
            delta = exact
    else:
        delta = lams[-1]

    allocations = tuple(min(delta, lam) for lam in lams)
    rate = 0.5 * sum(math.log(lam / alloc) for lam, alloc in zip(lams, allocations))
    return WaterFilling(delta=delta, allocations=allocations, rate=rate)
