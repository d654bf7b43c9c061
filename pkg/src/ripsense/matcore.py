"""Dense linear-algebra kernel.

Every decomposition the factorizations need lives here, each with an explicit
rank tolerance. Matrices are plain ``float64`` numpy arrays. Eigen- and
singular-vector signs are fixed so that the largest-magnitude entry of every
column is positive, which makes all downstream constructions deterministic.

Tolerances named ``tol`` are *relative*: a singular value counts towards the
rank when it exceeds ``tol * sigma_max``. When ``tol`` is omitted the default
is ``1e-10 * max(rows, cols)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionError, NumericalError, ParameterError, SingularMatrixError

RANK_RTOL = 1e-10
SYM_RTOL = 1e-12
EIG_RESIDUAL_RTOL = 1e-10


class SpectralDecomposition(NamedTuple):
    """Eigenpairs of a symmetric matrix, eigenvalues in non-increasing order."""

    q: np.ndarray
    lam: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.q * self.lam) @ self.q.T


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a finite 2-D float64 array."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} contains NaN or Inf")
    return a


def default_tol(shape) -> float:
    return RANK_RTOL * max(shape)


def fix_signs(q: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive."""
    if q.shape[1] == 0:
        return q
    idx = np.argmax(np.abs(q), axis=0)
    signs = np.sign(q[idx, np.arange(q.shape[1])])
    signs[signs == 0] = 1.0
    return q * signs


def sym_eig(s) -> SpectralDecomposition:
    """Spectral decomposition ``s = Q diag(lam) Q^T`` with ``lam`` descending.

    The input is symmetrized by averaging with its transpose. Relative
    asymmetry above ``1e-12`` is treated as a caller error.
    """
    s = as_matrix(s, "s")
    if s.shape[0] != s.shape[1]:
        raise DimensionError(f"sym_eig needs a square matrix, got {s.shape}")
    scale = max(1.0, float(np.linalg.norm(s)))
    asym = float(np.linalg.norm(s - s.T)) / scale
    if asym > SYM_RTOL:
        raise ParameterError(f"matrix is not symmetric (relative asymmetry {asym:.2e})")
    s = 0.5 * (s + s.T)
    try:
        lam, q = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver did not converge: {exc}") from exc
    order = np.argsort(-lam, kind="stable")
    dec = SpectralDecomposition(fix_signs(q[:, order]), lam[order])
    resid = float(np.linalg.norm(dec.reconstruct() - s)) / scale
    if not np.isfinite(resid) or resid > EIG_RESIDUAL_RTOL:
        raise NumericalError(f"eigendecomposition residual {resid:.3e} exceeds {EIG_RESIDUAL_RTOL:g}")
    return dec


def _svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc


def _rank_from_sv(sv: np.ndarray, tol: float) -> int:
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def singular_values(m) -> np.ndarray:
    m = as_matrix(m)
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def rank(m, tol: float | None = None) -> int:
    """Numerical rank: singular values above ``tol * sigma_max``."""
    m = as_matrix(m)
    if tol is None:
        tol = default_tol(m.shape)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    return _rank_from_sv(singular_values(m), tol)


def orthonormal_range_basis(m, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column space of ``m`` by Gram-Schmidt.

    Modified Gram-Schmidt with one reorthogonalization pass. A column whose
    remainder after projection is at most ``tol * ||m||_F / sqrt(cols)`` is
    treated as dependent and skipped, so the discarded part of ``m`` has
    Frobenius norm at most ``tol * ||m||_F``. For a row-space basis pass
    ``m.T``.
    """
    m = as_matrix(m)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    rows, cols = m.shape
    fro = float(np.linalg.norm(m))
    if fro == 0.0 or cols == 0:
        return np.zeros((rows, 0))
    drop = tol * fro / np.sqrt(cols)
    basis = np.empty((rows, min(rows, cols)))
    k = 0
    for j in range(cols):
        v = m[:, j].copy()
        for _ in range(2):
            for i in range(k):
                v -= (basis[:, i] @ v) * basis[:, i]
        nv = float(np.linalg.norm(v))
        if nv <= drop:
            continue
        if k == rows:
            break
        basis[:, k] = v / nv
        k += 1
    return basis[:, :k].copy()


def nullspace_basis(m, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis ``N`` (cols x (cols - rank)) with ``m @ N = 0``."""
    m = as_matrix(m)
    n = m.shape[1]
    if tol is None:
        tol = default_tol(m.shape)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if m.shape[0] == 0 or n == 0:
        return np.eye(n)
    _, sv, vt = _svd(m)
    k = _rank_from_sv(sv, tol)
    return fix_signs(vt[k:].T.copy())


def range_and_null(m, tol: float | None = None):
    """Return ``(R, N, k)``: orthonormal row-space and null-space bases of ``m``."""
    m = as_matrix(m)
    if tol is None:
        tol = default_tol(m.shape)
    _, sv, vt = _svd(m)
    k = _rank_from_sv(sv, tol)
    return fix_signs(vt[:k].T.copy()), fix_signs(vt[k:].T.copy()), k


def pinv(m, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff."""
    m = as_matrix(m)
    if tol is None:
        tol = default_tol(m.shape)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if m.size == 0:
        return np.zeros(m.shape[::-1])
    u, sv, vt = np.linalg.svd(m, full_matrices=False)
    k = _rank_from_sv(sv, tol)
    return (vt[:k].T / sv[:k]) @ u[:, :k].T


def inv_sqrt_spd(s, tol: float = 1e-12) -> np.ndarray:
    """Symmetric inverse square root of a symmetric positive-definite matrix.

    Raises SingularMatrixError when an eigenvalue is at or below
    ``tol * lambda_max``.
    """
    dec = sym_eig(s)
    lam_max = max(float(dec.lam[0]), 0.0) if dec.lam.size else 0.0
    lam_min = float(dec.lam[-1]) if dec.lam.size else 0.0
    if dec.lam.size and lam_min <= tol * lam_max:
        raise SingularMatrixError(f"matrix is not positive definite: eigenvalue {lam_min:.3e}", lam_min)
    r = (dec.q / np.sqrt(dec.lam)) @ dec.q.T
    return 0.5 * (r + r.T)


def solve_least_squares(a, b, tol: float | None = None) -> tuple[np.ndarray, bool]:
    """Least-squares solution of ``a x ~ b``.

    Returns ``(x, min_norm)``. ``min_norm`` is True when ``a`` lacks full
    column rank at ``tol`` and ``x`` is the minimum-norm solution ``pinv(a) b``.
    """
    a = as_matrix(a, "a")
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"rhs length {b.shape[0]} does not match {a.shape[0]} rows")
    if a.shape[1] == 0:
        return np.zeros((0,) + b.shape[1:]), False
    if tol is None:
        tol = default_tol(a.shape)
    try:
        x, _, r, _ = np.linalg.lstsq(a, b, rcond=tol)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"least-squares solve failed: {exc}") from exc
    return x, r < a.shape[1]
