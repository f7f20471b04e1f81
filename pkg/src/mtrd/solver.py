"""Numerical solver for the patterned log-det distortion programs.

The distributed and pair-plus-singleton rates are minima of
(1/2) log(det(Gamma)/det(D)) over quantization-noise covariances Xi
restricted to a sparsity pattern (diagonal, or diagonal plus a free (1,2)
entry), subject to Xi positive definite and trace(D) <= L d, where
D = (Theta + Xi^{-1})^{-1} is the distortion covariance reached with noise Xi.

The solver runs a log-barrier outer loop (trace constraint and a
positive-definiteness barrier, both at the shrinking barrier weight) with
damped Newton inner iterations on log-parameterized diagonal entries, then
polishes the active-constraint KKT system to machine accuracy so gap curves
can be differenced at the 1e-9 level.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ._fd import fd_jacobian
from .closed_form import _require_in_range
from .errors import DidNotConverge, DimensionMismatch, NotPositiveDefinite
from .model import GaussianSource, SymMatrix, cholesky, logdet

logger = logging.getLogger(__name__)

#: Outer loop stops once (number of barrier terms) x (weight) falls below this.
BARRIER_GAP_TOL = 1e-10


@dataclass(frozen=True)
class NoisePattern:
    """Sparsity pattern of the quantization-noise covariance.

    ``free_offdiag`` lists the (i, j), i < j, entries allowed nonzero; all
    other off-diagonal entries are pinned to zero. The distributed system
    frees none; the pair-plus-singleton system frees exactly (1, 2).
    """

    L: int
    free_offdiag: frozenset[tuple[int, int]]

    def __post_init__(self):
        for i, j in self.free_offdiag:
            if not (1 <= i < j <= self.L):
                raise ValueError(f"bad off-diagonal pair ({i}, {j}) for L={self.L}")

    @staticmethod
    def distributed(L: int) -> "NoisePattern":
        return NoisePattern(L=L, free_offdiag=frozenset())

    @staticmethod
    def pair_plus_singleton() -> "NoisePattern":
        return NoisePattern(L=3, free_offdiag=frozenset({(1, 2)}))

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.free_offdiag)

    @property
    def dim(self) -> int:
        return self.L + len(self.free_offdiag)


@dataclass(frozen=True)
class SolverConfig:
    """Barrier/Newton knobs; defaults suit every in-range problem."""

    barrier_init: float = 1e-2
    barrier_shrink: float = 0.1
    newton_tol: float = 1e-8
    max_outer: int = 40
    trace_slack_tol: float = 1e-9

    def __post_init__(self):
        if min(self.barrier_init, self.newton_tol, self.trace_slack_tol) <= 0:
            raise ValueError("config values must be positive")
        if not 0.0 < self.barrier_shrink < 1.0:
            raise ValueError("barrier_shrink must lie in (0, 1)")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")


@dataclass(frozen=True)
class SolverResult:
    """Optimizer, distortion covariance, rate, and convergence diagnostics."""

    xi_star: SymMatrix
    d_star: SymMatrix
    rate: float
    kkt_residual: float
    trace_gap: float


def compute_D(theta: SymMatrix, xi: SymMatrix) -> SymMatrix:
    """Distortion covariance (Theta + Xi^{-1})^{-1}.

    Evaluated through the Schur-equivalent solve (Xi Theta + I) D = Xi,
    which stays well conditioned as Xi approaches zero (no explicit
    inversion of Xi).
    """
    if theta.order != xi.order:
        raise DimensionMismatch(f"orders disagree: {theta.order} vs {xi.order}")
    cholesky(xi)  # PD gate
    n = xi.order
    d = np.linalg.solve(xi.array @ theta.array + np.eye(n), xi.array)
    return SymMatrix((d + d.T) / 2.0)


def _xi_from_coords(pattern: NoisePattern, diag: np.ndarray, offs: np.ndarray) -> np.ndarray:
    a = np.diag(np.asarray(diag, dtype=float))
    for (i, j), v in zip(pattern.pairs, offs):
        a[i - 1, j - 1] = v
        a[j - 1, i - 1] = v
    return a


def _grad_to_coords(pattern: NoisePattern, grad_matrix: np.ndarray) -> np.ndarray:
    """Map a symmetric matrix gradient to the free-coordinate vector.

    Off-diagonal coordinates move a mirrored pair of entries, so their
    component picks up a factor of two.
    """
    parts = [grad_matrix[ell, ell] for ell in range(pattern.L)]
    parts += [2.0 * grad_matrix[i - 1, j - 1] for i, j in pattern.pairs]
    return np.array(parts)


def _d_matrix(src: GaussianSource, xi_arr: np.ndarray) -> np.ndarray:
    n = src.L
    b = xi_arr @ src.theta.array + np.eye(n)
    d_arr = np.linalg.solve(b, xi_arr)
    return (d_arr + d_arr.T) / 2.0


def _objective_value(src: GaussianSource, xi_arr: np.ndarray) -> float:
    n = src.L
    b = xi_arr @ src.theta.array + np.eye(n)
    sign_b, logdet_b = np.linalg.slogdet(b)
    sign_xi, logdet_xi = np.linalg.slogdet(xi_arr)
    if sign_b <= 0 or sign_xi <= 0:
        raise NotPositiveDefinite("distortion matrix is not positive definite")
    return float(0.5 * (logdet(src.gamma) - logdet_xi + logdet_b))


def _objective_gradient_matrix(src: GaussianSource, xi_arr: np.ndarray) -> np.ndarray:
    a = xi_arr @ src.theta.array @ xi_arr + xi_arr
    a = (a + a.T) / 2.0
    grad = -0.5 * np.linalg.inv(a)
    return (grad + grad.T) / 2.0


def _trace_and_gradient(src: GaussianSource, xi_arr: np.ndarray):
    """trace(D) and its matrix gradient (B B^T)^{-1} with B = Xi Theta + I."""
    n = src.L
    b = xi_arr @ src.theta.array + np.eye(n)
    d_arr = np.linalg.solve(b, xi_arr)
    d_arr = (d_arr + d_arr.T) / 2.0
    m = np.linalg.inv(b @ b.T)
    return float(np.trace(d_arr)), (m + m.T) / 2.0, d_arr


def _is_pd(a: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(a)
        return True
    except np.linalg.LinAlgError:
        return False


def objective_and_gradient(
    src: GaussianSource, xi: SymMatrix, pattern: NoisePattern
) -> tuple[float, np.ndarray]:
    """Rate objective and its gradient over the pattern's free entries.

    Value: (1/2)(log det Gamma - log det D). Gradient with respect to Xi is
    -(1/2)(Xi Theta Xi + Xi)^{-1}, mapped to coordinates (diagonal entries
    first, then free off-diagonal pairs in sorted order).
    """
    if pattern.L != src.L or xi.order != src.L:
        raise DimensionMismatch("pattern, noise, and source orders must agree")
    for i in range(src.L):
        for j in range(i + 1, src.L):
            if (i + 1, j + 1) not in pattern.free_offdiag and xi.array[i, j] != 0.0:
                raise ValueError(f"xi violates the pattern at ({i + 1}, {j + 1})")
    cholesky(xi)  # PD gate
    value = _objective_value(src, xi.array)
    grad = _grad_to_coords(pattern, _objective_gradient_matrix(src, xi.array))
    return value, grad


def solve_rd(
    src: GaussianSource,
    pattern: NoisePattern,
    d: float,
    cfg: SolverConfig = SolverConfig(),
) -> SolverResult:
    """Minimize the rate objective subject to Xi > 0 and trace(D) <= L d.

    Log-barrier outer loop over a shrinking weight, damped Newton inner
    iterations (finite-difference Hessians of the analytic gradient, with
    the boundary-dominant rank-one barrier term added analytically), then a
    KKT polish on the active trace constraint. The result is validated
    against the feasible point of ``find_xi_for_target_diag``: it must not
    exceed that upper bound by more than 1e-8.
    """
    if pattern.L != src.L:
        raise DimensionMismatch(f"pattern L={pattern.L}, source L={src.L}")
    _require_in_range(src, d)
    n = src.L
    budget = n * d

    def unpack(x: np.ndarray) -> np.ndarray:
        return _xi_from_coords(pattern, np.exp(x[:n]), x[n:])

    def chain(x: np.ndarray, coords: np.ndarray) -> np.ndarray:
        out = coords.copy()
        out[:n] *= np.exp(x[:n])
        return out

    def barrier_value(x: np.ndarray, mu: float) -> float:
        if np.max(np.abs(x[:n])) > 60.0:
            return math.inf
        xi_arr = unpack(x)
        if not _is_pd(xi_arr):
            return math.inf
        tr = float(np.trace(_d_matrix(src, xi_arr)))
        slack = budget - tr
        if slack <= 0.0:
            return math.inf
        _, logdet_xi = np.linalg.slogdet(xi_arr)
        return _objective_value(src, xi_arr) - mu * math.log(slack) - mu * logdet_xi

    def barrier_gradient(x: np.ndarray, mu: float, coeff: float | None = None) -> np.ndarray:
        """Gradient of the barrier objective in x coordinates.

        With ``coeff`` given, the trace-barrier weight mu/slack is frozen at
        that value; this makes the function smooth across the constraint
        boundary so it can be finite-differenced safely for Hessians.
        """
        xi_arr = unpack(x)
        tr, trace_grad, _ = _trace_and_gradient(src, xi_arr)
        if coeff is None:
            coeff = mu / (budget - tr)
        grad_mat = (
            _objective_gradient_matrix(src, xi_arr)
            + coeff * trace_grad
            - mu * np.linalg.inv(xi_arr)
        )
        return chain(x, _grad_to_coords(pattern, grad_mat))

    def barrier_hessian(x: np.ndarray, mu: float) -> np.ndarray:
        xi_arr = unpack(x)
        tr, trace_grad, _ = _trace_and_gradient(src, xi_arr)
        slack = budget - tr
        coeff = mu / slack
        steps = np.full(x.size, 1e-7)
        hess = fd_jacobian(lambda z: barrier_gradient(z, mu, coeff), x, steps)
        hess = (hess + hess.T) / 2.0
        gs = chain(x, _grad_to_coords(pattern, trace_grad))
        return hess + (mu / slack**2) * np.outer(gs, gs)

    # Strictly feasible start: D < Xi in trace, so half the budget on the
    # diagonal leaves the constraint slack.
    x = np.concatenate(
        [np.full(n, math.log(0.5 * d)), np.zeros(len(pattern.pairs))]
    )
    mu = cfg.barrier_init
    n_barriers = n + 1  # log det Xi contributes n, the trace barrier 1

    outer = 0
    while True:
        outer += 1
        decrement = math.inf
        for _ in range(60):
            g = barrier_gradient(x, mu)
            hess = barrier_hessian(x, mu)
            try:
                step = np.linalg.solve(hess, -g)
            except np.linalg.LinAlgError:
                step = -g
            if g @ step >= 0.0:
                step = -g / max(1.0, float(np.linalg.norm(g)))
            base = barrier_value(x, mu)
            slope = 1e-4 * float(g @ step)
            t_ls = 1.0
            while t_ls > 1e-14:
                if barrier_value(x + t_ls * step, mu) <= base + t_ls * slope:
                    break
                t_ls *= 0.5
            else:
                break  # no acceptable step; leave this stage to the polish
            x = x + t_ls * step
            decrement = math.sqrt(max(0.0, -float(g @ step)))
            if decrement < 1e-8:
                break
        logger.debug(
            "barrier stage %d: mu=%.2e decrement=%.2e", outer, mu, decrement
        )
        if n_barriers * mu < BARRIER_GAP_TOL:
            break
        if outer >= cfg.max_outer:
            raise DidNotConverge(
                f"barrier loop hit max_outer={cfg.max_outer}",
                iterate=unpack(x),
                residual=float(np.max(np.abs(barrier_gradient(x, mu)))),
            )
        mu *= cfg.barrier_shrink

    xi_arr = unpack(x)
    tr, _, _ = _trace_and_gradient(src, xi_arr)
    lam = mu / max(budget - tr, 1e-300)
    x, lam = _kkt_polish(src, pattern, budget, x, lam, unpack, chain)

    xi_arr = unpack(x)
    tr, trace_grad, d_arr = _trace_and_gradient(src, xi_arr)
    grad_f = _grad_to_coords(pattern, _objective_gradient_matrix(src, xi_arr))
    grad_g = _grad_to_coords(pattern, trace_grad)
    stationarity = float(
        np.max(np.abs(grad_f + lam * grad_g)) / max(1.0, float(np.max(np.abs(grad_f))))
    )
    kkt_residual = max(stationarity, abs(tr - budget) / budget)
    rate = _objective_value(src, xi_arr)

    if not math.isfinite(rate) or kkt_residual >= cfg.newton_tol:
        raise DidNotConverge(
            f"KKT residual {kkt_residual:.3e} above tolerance {cfg.newton_tol:.1e}",
            iterate=xi_arr,
            residual=kkt_residual,
        )

    upper_xi = find_xi_for_target_diag(src, pattern, [d] * n)
    upper_rate = _objective_value(src, upper_xi.array)
    if rate > upper_rate + 1e-8:
        raise DidNotConverge(
            f"solver rate {rate:.12f} exceeds the feasible upper bound "
            f"{upper_rate:.12f}",
            iterate=xi_arr,
            residual=rate - upper_rate,
        )

    return SolverResult(
        xi_star=SymMatrix(xi_arr),
        d_star=SymMatrix(d_arr),
        rate=rate,
        kkt_residual=kkt_residual,
        trace_gap=budget - tr,
    )


def _kkt_polish(src, pattern, budget, x, lam, unpack, chain):
    """Newton on the active-trace KKT system, to machine accuracy."""

    def residual(z: np.ndarray) -> np.ndarray:
        xi_arr = unpack(z[:-1])
        tr, trace_grad, _ = _trace_and_gradient(src, xi_arr)
        grad_mat = _objective_gradient_matrix(src, xi_arr) + z[-1] * trace_grad
        g = chain(z[:-1], _grad_to_coords(pattern, grad_mat))
        return np.append(g, tr - budget)

    z = np.append(x, lam)
    steps = np.full(z.size, 1e-7)
    best = float(np.linalg.norm(residual(z)))
    for _ in range(40):
        if best < 1e-15:
            break
        jac = fd_jacobian(residual, z, steps)
        try:
            step = np.linalg.solve(jac, -residual(z))
        except np.linalg.LinAlgError:
            break
        t_ls, moved = 1.0, False
        while t_ls > 1e-12:
            cand = z + t_ls * step
            if cand[-1] > 0.0 and _is_pd(unpack(cand[:-1])):
                norm = float(np.linalg.norm(residual(cand)))
                if norm < best:
                    z, best, moved = cand, norm, True
                    break
            t_ls *= 0.5
        if not moved:
            break
    return z[:-1], float(z[-1])


def find_xi_for_target_diag(
    src: GaussianSource, pattern: NoisePattern, target
) -> SymMatrix:
    """Noise covariance whose distortion matrix hits the target diagonal.

    Solves diag(D) = target (and D_ij = 0 for every free off-diagonal pair)
    by damped Newton with a finite-difference Jacobian, starting from
    Xi = diag(target). Converges to max-entry residual below 1e-12.
    """
    if pattern.L != src.L:
        raise DimensionMismatch(f"pattern L={pattern.L}, source L={src.L}")
    target = [float(t) for t in target]
    if len(target) != src.L:
        raise DimensionMismatch(f"need {src.L} targets, got {len(target)}")
    for t in target:
        _require_in_range(src, t, what="target")
    n, pairs = src.L, pattern.pairs
    goal = np.array(target + [0.0] * len(pairs))

    def residual(z: np.ndarray) -> np.ndarray:
        d_arr = _d_matrix(src, _xi_from_coords(pattern, z[:n], z[n:]))
        got = [d_arr[ell, ell] for ell in range(n)]
        got += [d_arr[i - 1, j - 1] for i, j in pairs]
        return np.array(got) - goal

    z = np.array(target + [0.0] * len(pairs))
    steps = np.concatenate(
        [1e-7 * np.array(target), np.full(len(pairs), 1e-7 * min(target))]
    )
    best = float(np.max(np.abs(residual(z))))
    for _ in range(60):
        if best < 1e-13:
            break
        jac = fd_jacobian(residual, z, steps)
        try:
            step = np.linalg.solve(jac, -residual(z))
        except np.linalg.LinAlgError as exc:
            raise DidNotConverge(
                f"singular Jacobian in target-diagonal Newton: {exc}",
                iterate=z,
                residual=best,
            ) from exc
        t_ls, moved = 1.0, False
        while t_ls > 1e-12:
            cand = z + t_ls * step
            if np.all(cand[:n] > 0.0) and _is_pd(
                _xi_from_coords(pattern, cand[:n], cand[n:])
            ):
                norm = float(np.max(np.abs(residual(cand))))
                if norm < best:
                    z, best, moved = cand, norm, True
                    break
            t_ls *= 0.5
        if not moved:
            break
    if best > 1e-12:
        raise DidNotConverge(
            f"target-diagonal Newton stalled at residual {best:.3e}",
            iterate=z,
            residual=best,
        )
    return SymMatrix(_xi_from_coords(pattern, z[:n], z[n:]))
