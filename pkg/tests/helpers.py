"""Shared generators and independent oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np

from mtrd.model import GaussianSource, SymMatrix, new_source
from mtrd.solver import NoisePattern, _d_matrix, _objective_value


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def random_spd(
    rng: np.random.Generator, n: int, lam_lo: float = 0.25, lam_hi: float = 4.0
) -> SymMatrix:
    """Random PD matrix with log-uniform eigenvalues in [lam_lo, lam_hi]."""
    lams = np.exp(rng.uniform(math.log(lam_lo), math.log(lam_hi), size=n))
    q = random_orthogonal(rng, n)
    return SymMatrix((q * lams) @ q.T)


def random_source(
    rng: np.random.Generator, n: int, lam_lo: float = 0.25, lam_hi: float = 4.0
) -> GaussianSource:
    return new_source(random_spd(rng, n, lam_lo, lam_hi))


def random_source_2x2(rng: np.random.Generator, rho_max: float = 0.95) -> GaussianSource:
    """Random 2x2 covariance with |rho| <= rho_max and the verification grid
    {1e-2, 5e-3, 2.5e-3} inside the trusted radius."""
    while True:
        v1, v2 = rng.uniform(0.9, 2.0, size=2)
        rho = rng.uniform(-rho_max, rho_max)
        off = rho * math.sqrt(v1 * v2)
        gamma = SymMatrix([[v1, off], [off, v2]])
        lam_min = float(np.linalg.eigvalsh(gamma.array)[0])
        if 0.25 * lam_min > 1.05e-2:
            return new_source(gamma)


def equicorrelated(rho: float, L: int = 3) -> GaussianSource:
    return new_source(SymMatrix((1 - rho) * np.eye(L) + rho * np.ones((L, L))))


def source_with_theta(theta_rows) -> GaussianSource:
    """Source constructed from a prescribed precision matrix."""
    th = np.asarray(theta_rows, dtype=float)
    gamma = np.linalg.inv(th)
    return new_source(SymMatrix((gamma + gamma.T) / 2.0))


def random_cover_sets(rng: np.random.Generator, L: int) -> list[list[int]]:
    """Random family of nonempty subsets covering {1..L}."""
    n_sets = int(rng.integers(1, 2 * L + 1))
    sets = []
    for _ in range(n_sets):
        size = int(rng.integers(1, L + 1))
        sets.append(sorted(rng.choice(L, size=size, replace=False) + 1))
    covered = set().union(*map(set, sets)) if sets else set()
    missing = [i for i in range(1, L + 1) if i not in covered]
    for i in missing:  # patch uncovered sources with singletons
        sets.append([i])
    return sets


def grid_search_rate(
    src: GaussianSource,
    pattern: NoisePattern,
    d: float,
    rounds: int = 5,
    points: int = 13,
    width: float = 0.3,
) -> float:
    """Brute-force oracle for the patterned log-det program.

    Scans the free Xi entries on a shrinking grid, resolving the last
    diagonal entry so trace(D) equals the budget exactly (the optimum
    saturates the constraint), and returns the best objective seen. Shares
    only the matrix primitives with the solver, not its optimization path.
    """
    n = src.L
    budget = n * d
    pairs = pattern.pairs

    def trace_at(diag: np.ndarray, offs: np.ndarray) -> float:
        a = np.diag(diag.astype(float))
        for (i, j), v in zip(pairs, offs):
            a[i - 1, j - 1] = v
            a[j - 1, i - 1] = v
        return float(np.trace(_d_matrix(src, a)))

    def resolve_last(rest: np.ndarray, offs: np.ndarray) -> float | None:
        """xi_nn making trace(D) = budget, or None if out of reach."""
        lo, hi = 1e-12 * d, 50.0 * d
        diag = np.concatenate([rest, [hi]])
        if trace_at(diag, offs) < budget:
            return None
        diag[-1] = lo
        if trace_at(diag, offs) > budget:
            return None
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            diag[-1] = mid
            if trace_at(diag, offs) < budget:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def value(rest: np.ndarray, offs: np.ndarray) -> float:
        last = resolve_last(rest, offs)
        if last is None:
            return math.inf
        a = np.diag(np.concatenate([rest, [last]]))
        for (i, j), v in zip(pairs, offs):
            a[i - 1, j - 1] = v
            a[j - 1, i - 1] = v
        if np.any(np.linalg.eigvalsh(a) <= 0):
            return math.inf
        return _objective_value(src, a)

    center = np.concatenate([np.full(n - 1, d), np.zeros(len(pairs))])
    half = np.concatenate([np.full(n - 1, width * d), np.full(len(pairs), width * d)])
    best_val, best_at = math.inf, center.copy()
    for _ in range(rounds):
        axes = [
            np.linspace(c - h, c + h, points) for c, h in zip(center, half)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=1)
        for row in coords:
            rest, offs = row[: n - 1], row[n - 1 :]
            if np.any(rest <= 0):
                continue
            v = value(rest, offs)
            if v < best_val:
                best_val, best_at = v, row.copy()
        center = best_at
        half = half / 6.0
    return best_val
