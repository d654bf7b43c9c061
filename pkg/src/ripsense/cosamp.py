"""Compressive sampling matching pursuit (Needell & Tropp, 2009).

Solves ``min ||z - phi x||_2`` subject to ``||x||_0 <= k`` greedily. The
operator is used as given: no column normalization, no preconditioning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import DimensionError, ParameterError

STAGNATION_RTOL = 1e-7


@dataclass(frozen=True)
class RecoveryProblem:
    """A sparse recovery instance.

    ``relaxed`` lifts the ``3k <= m`` requirement; least-squares steps on
    an underdetermined support then return minimum-norm solutions.
    """

    phi: np.ndarray
    z: np.ndarray
    k: int
    max_iter: int = 50
    halt_tol: float = 1e-6
    relaxed: bool = False

    def __post_init__(self):
        phi = matcore.as_matrix(self.phi, "phi")
        z = np.asarray(self.z, dtype=np.float64)
        m, n = phi.shape
        if z.shape != (m,):
            raise DimensionError(f"measurement vector has shape {z.shape}, expected ({m},)")
        if m > n:
            raise DimensionError(f"operator must be wide or square, got {m}x{n}")
        if not 1 <= self.k <= m:
            raise ParameterError(f"sparsity must satisfy 1 <= k <= m, got k={self.k}, m={m}")
        if 3 * self.k > m and not self.relaxed:
            raise ParameterError(f"CoSaMP needs 3k <= m (k={self.k}, m={m}); pass relaxed=True to override")
        if self.max_iter < 1 or self.halt_tol < 0:
            raise ParameterError("max_iter must be positive and halt_tol non-negative")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class RecoveryResult:
    x_hat: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    min_norm: bool = False


def _top(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the ``count`` largest magnitudes; ties go to the lowest index."""
    return np.argsort(-np.abs(values), kind="stable")[:count]


def cosamp(p: RecoveryProblem) -> RecoveryResult:
    phi, z, k = p.phi, p.z, p.k
    n = phi.shape[1]
    if np.any(~phi.any(axis=0)):
        raise ParameterError("operator has an all-zero column")

    z_norm = float(np.linalg.norm(z))
    best = RecoveryResult(np.zeros(n), 0, z_norm, z_norm == 0.0)
    if z_norm == 0.0:
        return best

    support = np.zeros(0, dtype=np.int64)
    r = z
    prev = z_norm
    min_norm = False
    for it in range(1, p.max_iter + 1):
        proxy = phi.T @ r
        merged = np.union1d(_top(proxy, min(2 * k, n)), support)
        b, flagged = matcore.solve_least_squares(phi[:, merged], z)
        min_norm |= flagged
        keep = _top(b, k)
        support = np.sort(merged[keep])
        x = np.zeros(n)
        x[merged[keep]] = b[keep]
        r = z - phi @ x
        rn = float(np.linalg.norm(r))
        done = rn <= p.halt_tol * z_norm
        if rn < best.final_residual:
            best = RecoveryResult(x, it, rn, done, min_norm)
        if done or prev - rn < STAGNATION_RTOL * prev:
            break
        prev = rn
    return RecoveryResult(best.x_hat, it, best.final_residual, best.converged, min_norm)


def recovery_success(x_hat, x, n: int | None = None) -> bool:
    """True iff ``||x_hat - x||_1 < n / 100`` (n = 1024 gives the 10.24 budget)."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_hat.shape != x.shape:
        raise DimensionError(f"length mismatch: {x_hat.shape} vs {x.shape}")
    if n is None:
        n = x.shape[0]
    return float(np.sum(np.abs(x_hat - x))) < n / 100
