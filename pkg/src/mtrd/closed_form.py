"""Closed-form rate-distortion functions in the small-distortion regime.

Covers the cases with explicit formulas: the two-source distributed system,
the three-source system with encoders {1,2} and {1,3} (minimized by a 1-D
golden section over the distortion split), the three-encoder triangle (whose
rate equals the centralized one), and the conditional two-terminal sum-rate
used by the converse machinery.

All formulas here are exact only for distortions close to zero; calls outside
``trusted_radius`` raise OutOfTrustedRange rather than silently extrapolate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .centralized import r_centralized
from .errors import DimensionMismatch, InvalidDistortion, OutOfTrustedRange
from .model import GaussianSource, conditional_covariance, eigenvalues, logdet

#: Fraction of the smallest covariance eigenvalue that bounds trusted d.
TRUSTED_RADIUS_FRACTION = 0.25

#: Golden-section argument tolerance. Gap curves are differenced at 1e-5
#: scale, so optimizer noise must sit far below that.
GOLDEN_XATOL = 1e-12

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class ClosedFormResult:
    """Rate (nats) plus the per-source distortion allocation that attains it."""

    rate: float
    optimizer: tuple[float, ...]
    valid_small_d: bool


def trusted_radius(src: GaussianSource) -> float:
    """Largest distortion at which the small-d formulas are trusted."""
    return TRUSTED_RADIUS_FRACTION * eigenvalues(src.gamma)[0]


def _require_in_range(src: GaussianSource, d: float, *, what: str = "d") -> None:
    if d <= 0:
        raise InvalidDistortion(f"{what} must be positive, got {d}")
    radius = trusted_radius(src)
    if d >= radius:
        raise OutOfTrustedRange(
            f"{what}={d:.6g} outside trusted radius {radius:.6g}"
        )


def golden_section_minimize(
    f: Callable[[float], float], lo: float, hi: float, xatol: float = GOLDEN_XATOL
) -> float:
    """Golden-section minimizer of a unimodal function on [lo, hi]."""
    a, b = float(lo), float(hi)
    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc, fd = f(c), f(d)
    while h > xatol:
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + _INVPHI2 * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INVPHI * h
            fd = f(d)
    return 0.5 * (a + b)


# -- two sources, separate encoders -----------------------------------------


def r_two_terminal_general(src: GaussianSource, d1: float, d2: float) -> float:
    """Two-source distributed sum-rate at per-source distortions (d1, d2)."""
    if src.L != 2:
        raise DimensionMismatch(f"need L=2, got L={src.L}")
    if d1 <= 0 or d2 <= 0:
        raise InvalidDistortion(f"distortions must be positive, got ({d1}, {d2})")
    _require_in_range(src, max(d1, d2), what="max(d1, d2)")
    th12 = src.theta.entry(1, 2)
    root = math.sqrt(1.0 + 4.0 * th12 * th12 * d1 * d2)
    return 0.5 * math.log(
        math.exp(logdet(src.gamma)) / (2.0 * d1 * d2) * (1.0 + root)
    )


def r_two_terminal(src: GaussianSource, d: float) -> ClosedFormResult:
    """Two-source distributed sum-rate at average distortion ``d``.

    The symmetric split d1 = d2 = d attains the minimum of the general
    formula over d1 + d2 <= 2d.
    """
    if src.L != 2:
        raise DimensionMismatch(f"need L=2, got L={src.L}")
    _require_in_range(src, d)
    rate = r_two_terminal_general(src, d, d)
    return ClosedFormResult(rate=rate, optimizer=(d, d), valid_small_d=True)


def two_terminal_gap(src: GaussianSource, d: float) -> float:
    """Gap of the two-source distributed rate over the centralized rate.

    Evaluates (1/2) log((1 + sqrt(1 + 4 theta12^2 d^2)) / 2) in a
    cancellation-free form, accurate to relative machine precision even when
    the gap is ~1e-12 nats.
    """
    if src.L != 2:
        raise DimensionMismatch(f"need L=2, got L={src.L}")
    _require_in_range(src, d)
    th12 = src.theta.entry(1, 2)
    x = 4.0 * th12 * th12 * d * d
    return 0.5 * math.log1p(x / (2.0 * (1.0 + math.sqrt(1.0 + x))))


# -- three sources, encoders {1,2} and {1,3} ---------------------------------


def r_two_pairs_general(src: GaussianSource, d1: float, d2: float, d3: float) -> float:
    """Rate of the {1,2}/{1,3} system at distortion triple (d1, d2, d3)."""
    if src.L != 3:
        raise DimensionMismatch(f"need L=3, got L={src.L}")
    if min(d1, d2, d3) <= 0:
        raise InvalidDistortion(f"distortions must be positive: ({d1}, {d2}, {d3})")
    _require_in_range(src, max(d1, d2, d3), what="max distortion")
    th23 = src.theta.entry(2, 3)
    root = math.sqrt(1.0 + 4.0 * th23 * th23 * d2 * d3)
    return 0.5 * math.log(
        math.exp(logdet(src.gamma)) / (2.0 * d1 * d2 * d3) * (1.0 + root)
    )


def r_two_pairs(src: GaussianSource, d: float) -> ClosedFormResult:
    """Rate of the {1,2}/{1,3} system at average distortion ``d``.

    Minimizes the closed-form rate over splits (d1, d2, d2) with
    d1 + 2 d2 = 3d by golden section on d1. The minimizer stays near the
    even split: d1 exceeds d by (2/3) theta23^2 d^3 to leading order, and
    for small d it satisfies the stationarity closed form checked by
    ``two_pairs_stationarity_residual``.
    """
    if src.L != 3:
        raise DimensionMismatch(f"need L=3, got L={src.L}")
    _require_in_range(src, d)
    th23 = src.theta.entry(2, 3)
    ld = logdet(src.gamma)

    def objective(d1: float) -> float:
        d2 = 0.5 * (3.0 * d - d1)
        root = math.sqrt(1.0 + 4.0 * th23 * th23 * d2 * d2)
        return 0.5 * (
            ld - math.log(2.0 * d1 * d2 * d2) + math.log(1.0 + root)
        )

    margin = 1e-9 * 3.0 * d
    d1_star = golden_section_minimize(objective, margin, 3.0 * d - margin)
    d2_star = 0.5 * (3.0 * d - d1_star)
    return ClosedFormResult(
        rate=objective(d1_star),
        optimizer=(d1_star, d2_star, d2_star),
        valid_small_d=True,
    )


def two_pairs_stationarity_formula(src: GaussianSource, d1: float) -> float:
    """Paired distortion implied by the small-d stationarity condition."""
    th23 = src.theta.entry(2, 3)
    t2 = th23 * th23
    if t2 == 0.0:
        return d1
    return (-1.0 + math.sqrt(1.0 + 4.0 * t2 * d1 * d1)) / (2.0 * t2 * d1)


def two_pairs_stationarity_residual(src: GaussianSource, result: ClosedFormResult) -> float:
    """|d2 - formula(d1)| for a ``r_two_pairs`` optimizer.

    The closed form is the leading-order optimality condition; agreement
    degrades like theta23^4 d^5 away from the small-d regime, so tolerances
    belong at small d.
    """
    d1, d2 = result.optimizer[0], result.optimizer[1]
    return abs(d2 - two_pairs_stationarity_formula(src, d1))


def two_pairs_gap(src: GaussianSource, d: float) -> float:
    """Gap of the {1,2}/{1,3} system over the centralized rate.

    Assembled from log1p terms around the optimizer so no large rates are
    differenced; accurate to ~1e-15 absolute.
    """
    res = r_two_pairs(src, d)
    d1, d2 = res.optimizer[0], res.optimizer[1]
    th23 = src.theta.entry(2, 3)
    x = 4.0 * th23 * th23 * d2 * d2
    split_terms = math.log1p((d - d1) / d1) + 2.0 * math.log1p((d - d2) / d2)
    curvature_term = math.log1p(x / (2.0 * (1.0 + math.sqrt(1.0 + x))))
    return 0.5 * (split_terms + curvature_term)


# -- three sources, triangle of pair encoders --------------------------------


def r_triangle(src: GaussianSource, d: float) -> float:
    """Rate of the {1,2}/{1,3}/{2,3} system: equals the centralized rate."""
    if src.L != 3:
        raise DimensionMismatch(f"need L=3, got L={src.L}")
    _require_in_range(src, d)
    return r_centralized(src, d).rate


# -- conditional two-terminal sum-rate ---------------------------------------


def rtilde_conditional(src: GaussianSource, delta2: float, delta3: float) -> float:
    """Sum-rate of two-terminal coding of (X2, X3) conditioned on X1.

    Piecewise: inside the regime where both distortion constraints genuinely
    bind, the two-terminal formula applies with the conditional covariance
    of (X2, X3) given X1; otherwise the looser constraint is implied by
    coding the other source alone and the rate collapses to the tighter
    single-source rate (zero when both constraints are slack).
    """
    if src.L != 3:
        raise DimensionMismatch(f"need L=3, got L={src.L}")
    if delta2 <= 0 or delta3 <= 0:
        raise InvalidDistortion(
            f"distortions must be positive, got ({delta2}, {delta3})"
        )
    cond = conditional_covariance(src, [2, 3], [1])
    g22 = cond.entry(1, 1)
    g33 = cond.entry(2, 2)
    g23 = cond.entry(1, 2)
    a = delta2 / g22
    b = delta3 / g33
    rho2 = (g23 * g23) / (g22 * g33)
    # Ties on the regime boundary resolve to the first branch; the value is
    # continuous across it.
    if max(a, b) <= min(1.0, 1.0 - rho2 + rho2 * min(a, b)):
        th23 = src.theta.entry(2, 3)
        g11 = src.gamma.entry(1, 1)
        root = math.sqrt(1.0 + 4.0 * th23 * th23 * delta2 * delta3)
        return 0.5 * math.log(
            math.exp(logdet(src.gamma)) / (2.0 * g11 * delta2 * delta3) * (1.0 + root)
        )
    return 0.5 * math.log(max(1.0, g22 / delta2, g33 / delta3))
