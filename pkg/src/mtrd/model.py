"""Dense symmetric linear algebra and Gaussian conditioning primitives.

Everything downstream (water-filling, closed forms, the log-det solver, the
test-channel constructions) works with small dense symmetric matrices: source
covariances, precision matrices, distortion and quantization-noise
covariances. This module owns that representation plus the handful of
operations the rest of the library needs: positive-definiteness via Cholesky,
log-determinants, eigenvalues, and Schur-complement conditioning.

Source labels are 1-based throughout the public API (sources are named
1..L); raw array access through ``SymMatrix.array`` is 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    IndexOutOfRange,
    NotPositiveDefinite,
    SingularObservation,
)

#: Largest matrix order supported. The exact theory needs L <= 3 sources
#: (sources are capped at 8); the cover algebra and the predicted gap
#: coefficient generalize cheaply, so a small fixed cap keeps every solver
#: dense and direct. Order 9 admits the largest test-channel joint:
#: 3 sources plus 6 auxiliary observations.
MAX_ORDER = 9

#: Largest supported source count.
MAX_SOURCES = 8

#: A Cholesky pivot must exceed this fraction of the largest diagonal entry
#: for the matrix to count as positive definite (scale-relative guard).
PD_PIVOT_RTOL = 1e-12

#: Allowed asymmetry in raw input relative to the largest entry.
SYMMETRY_RTOL = 1e-8


class SymMatrix:
    """Immutable symmetric matrix with exactly mirrored off-diagonal entries.

    Construction mirrors the lower triangle into the upper one, so
    ``m.array[i, j] == m.array[j, i]`` holds bit-for-bit. Inputs whose
    asymmetry exceeds ``SYMMETRY_RTOL`` times the largest entry are rejected.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        n = a.shape[0]
        if not 1 <= n <= MAX_ORDER:
            raise ValueError(f"order must be in 1..{MAX_ORDER}, got {n}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        scale = float(np.max(np.abs(a)))
        if np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * max(scale, 1.0):
            raise ValueError("matrix is not symmetric")
        lower = np.tril(a)
        full = lower + np.tril(a, -1).T
        full.setflags(write=False)
        self._a = full

    # -- constructors ------------------------------------------------------

    @staticmethod
    def identity(order: int) -> "SymMatrix":
        return SymMatrix(np.eye(order))

    @staticmethod
    def diagonal(values: Sequence[float]) -> "SymMatrix":
        return SymMatrix(np.diag(np.asarray(values, dtype=float)))

    @staticmethod
    def from_lower_triangle(order: int, values: Sequence[float]) -> "SymMatrix":
        """Build from a row-major lower triangle (the model-file layout)."""
        expected = order * (order + 1) // 2
        vals = list(values)
        if len(vals) != expected:
            raise ValueError(
                f"lower triangle of order {order} needs {expected} values, "
                f"got {len(vals)}"
            )
        a = np.zeros((order, order))
        k = 0
        for i in range(order):
            for j in range(i + 1):
                a[i, j] = vals[k]
                k += 1
        return SymMatrix(a + np.tril(a, -1).T)

    # -- accessors ---------------------------------------------------------

    @property
    def order(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        """Read-only ndarray view (0-based indices)."""
        return self._a

    def entry(self, i: int, j: int) -> float:
        """Entry by 1-based source labels."""
        n = self.order
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexOutOfRange(f"labels ({i},{j}) outside 1..{n}")
        return float(self._a[i - 1, j - 1])

    def lower_triangle(self) -> list[float]:
        """Row-major lower triangle (inverse of ``from_lower_triangle``)."""
        return [float(self._a[i, j]) for i in range(self.order) for j in range(i + 1)]

    def permuted(self, relabeling: Sequence[int]) -> "SymMatrix":
        """Apply a source relabeling pi: entry (pi(i), pi(j)) <- entry (i, j)."""
        n = self.order
        if sorted(relabeling) != list(range(1, n + 1)):
            raise IndexOutOfRange(f"{relabeling} is not a permutation of 1..{n}")
        out = np.empty_like(self._a)
        for i in range(n):
            for j in range(n):
                out[relabeling[i] - 1, relabeling[j] - 1] = self._a[i, j]
        return SymMatrix(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return self._a.shape == other._a.shape and bool(np.all(self._a == other._a))

    def __hash__(self):
        return hash((self._a.shape[0], self._a.tobytes()))

    def __repr__(self) -> str:
        rows = ", ".join(
            "[" + ", ".join(f"{v:.6g}" for v in row) + "]" for row in self._a
        )
        return f"SymMatrix([{rows}])"


@dataclass(frozen=True)
class GaussianSource:
    """Zero-mean L-variate Gaussian: covariance ``gamma``, precision ``theta``.

    Invariants (established by ``new_source``): gamma is positive definite,
    theta is its inverse with ``gamma @ theta = I`` to 1e-10 max-entry error.
    """

    L: int
    gamma: SymMatrix
    theta: SymMatrix


def _cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Cholesky factor with an explicit scale-relative pivot guard."""
    n = a.shape[0]
    pivot_floor = PD_PIVOT_RTOL * float(np.max(np.diag(a)))
    low = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - low[j, :j] @ low[j, :j]
        if not math.isfinite(pivot) or pivot <= pivot_floor:
            raise NotPositiveDefinite(
                f"Cholesky pivot {pivot:.3e} at position {j + 1} is not positive"
            )
        ljj = math.sqrt(pivot)
        low[j, j] = ljj
        for i in range(j + 1, n):
            low[i, j] = (a[i, j] - low[i, :j] @ low[j, :j]) / ljj
    return low


def cholesky(m: SymMatrix) -> np.ndarray:
    """Lower Cholesky factor; raises NotPositiveDefinite on bad pivots."""
    return _cholesky_lower(m.array)


def _solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b with a symmetric positive definite (small, dense)."""
    low = _cholesky_lower(a)
    y = np.linalg.solve(low, b)
    return np.linalg.solve(low.T, y)


def new_source(gamma: SymMatrix) -> GaussianSource:
    """Build a Gaussian source from a positive definite covariance.

    The precision matrix is the covariance inverse, refined by one Newton
    step so the round-trip identity holds to 1e-10 even for moderately
    ill-conditioned inputs.
    """
    a = gamma.array
    n = gamma.order
    if n > MAX_SOURCES:
        raise ValueError(f"source count must be <= {MAX_SOURCES}, got {n}")
    _cholesky_lower(a)  # PD gate
    eye = np.eye(n)
    inv = _solve_spd(a, eye)
    inv = inv + inv @ (eye - a @ inv)  # one refinement step
    inv = (inv + inv.T) / 2.0
    theta = SymMatrix(inv)
    residual = float(np.max(np.abs(a @ theta.array - eye)))
    if residual > 1e-10:
        raise NotPositiveDefinite(
            f"covariance too ill-conditioned: inverse residual {residual:.3e}"
        )
    return GaussianSource(L=n, gamma=gamma, theta=theta)


def eigenvalues(m: SymMatrix) -> list[float]:
    """All eigenvalues of a symmetric matrix, ascending."""
    return [float(v) for v in np.linalg.eigvalsh(m.array)]


def logdet(m: SymMatrix) -> float:
    """log det of a positive definite matrix via Cholesky pivots."""
    low = cholesky(m)
    return 2.0 * float(np.sum(np.log(np.diag(low))))


def _validate_labels(order: int, labels: Iterable[int], what: str) -> list[int]:
    out = []
    for lbl in labels:
        if not isinstance(lbl, (int, np.integer)) or not 1 <= int(lbl) <= order:
            raise IndexOutOfRange(f"{what} label {lbl!r} outside 1..{order}")
        out.append(int(lbl))
    if not out:
        raise IndexOutOfRange(f"{what} set must be nonempty")
    if len(set(out)) != len(out):
        raise IndexOutOfRange(f"{what} set has repeated labels: {sorted(out)}")
    return sorted(out)


def mmse_cov(joint: SymMatrix, target: Iterable[int], observed: Iterable[int]) -> SymMatrix:
    """Error covariance of the MMSE estimate of the target block.

    ``joint`` is the covariance of a stacked Gaussian vector; ``target`` and
    ``observed`` are disjoint 1-based label sets into it. Returns the Schur
    complement C_tt - C_to C_oo^{-1} C_ot, computed with diagonal
    equilibration of the observed block for conditioning robustness.
    """
    tgt = _validate_labels(joint.order, target, "target")
    obs = _validate_labels(joint.order, observed, "observed")
    if set(tgt) & set(obs):
        raise IndexOutOfRange(
            f"target and observed sets overlap: {sorted(set(tgt) & set(obs))}"
        )
    a = joint.array
    ti = [i - 1 for i in tgt]
    oi = [i - 1 for i in obs]
    c_tt = a[np.ix_(ti, ti)]
    c_to = a[np.ix_(ti, oi)]
    c_oo = a[np.ix_(oi, oi)]
    diag = np.diag(c_oo)
    if np.any(diag <= 0):
        raise SingularObservation("observed block has a non-positive variance")
    scale = 1.0 / np.sqrt(diag)
    c_oo_eq = c_oo * scale[:, None] * scale[None, :]
    try:
        x = _solve_spd(c_oo_eq, (c_to * scale[None, :]).T)
    except NotPositiveDefinite as exc:
        raise SingularObservation(f"observed block is not invertible: {exc}") from exc
    res = c_tt - (c_to * scale[None, :]) @ x
    return SymMatrix((res + res.T) / 2.0)


def conditional_covariance(
    src: GaussianSource, target: Iterable[int], given: Iterable[int]
) -> SymMatrix:
    """Covariance of the target sources conditioned on the given ones."""
    return mmse_cov(src.gamma, target, given)
