"""Factorizations D = G A H of a sparsifying dictionary.

Given a dictionary ``D`` and a random matrix ``A`` of the same shape
``l x n`` (``l <= n``) and equal rank, each construction returns an
invertible ``G`` (``l x l``) and an orthonormal ``H`` (``n x n``) with
``D = G A H``. The sensing matrix for ``D`` is then ``S = E G^{-1}`` for a
row selector ``E``, and ``S D = E A H`` inherits the concentration behaviour
of ``E A``.

Three constructions are offered because the factorization is not unique:

* ``factor_spectral``: matches the spectra of ``AA^T`` and ``DD^T``.
* ``factor_tight_frame``: closed form for tight-frame dictionaries.
* ``factor_gram_schmidt``: built from orthonormal row-space bases.

Every construction accepts ``seed``; when given, the orthonormal completion
of ``H`` on the shared null space is rotated by a seeded random orthonormal
matrix, producing a different but equally valid factorization.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import matcore
from .ensembles import RowSelector, apply_selector, random_orthonormal
from .errors import DimensionError, NotTightFrameError, NumericalError, ParameterError, RankMismatchError, SingularMatrixError

TIGHT_FRAME_TOL = 1e-6
RESCALE_RTOL = 1e-8
# singular values this close above the rank cutoff make "equal rank" ambiguous
MARGINAL_FACTOR = 10.0


class Method(str, enum.Enum):
    SPECTRAL = "spectral"
    TIGHT_FRAME = "tight_frame"
    GRAM_SCHMIDT = "gram_schmidt"


@dataclass(frozen=True)
class Factorization:
    """Factors with ``D = g @ a @ h``.

    For rescaled tight frames ``scale`` holds ``c`` from ``DD^T = c P`` and
    ``sqrt(c)`` is already folded into ``g``.
    """

    g: np.ndarray
    a: np.ndarray
    h: np.ndarray
    method: Method
    rank: int
    tol: float
    scale: float = 1.0
    info: dict = field(default_factory=dict, compare=False)

    def product(self) -> np.ndarray:
        return self.g @ self.a @ self.h

    @cached_property
    def g_inv(self) -> np.ndarray:
        return invert_g(self.g, self.tol)


@dataclass(frozen=True)
class ValidationReport:
    residual_rel: float
    h_orthonormality_err: float
    g_condition_number: float
    rank_d: int
    rank_a: int

    def ok(self, residual_tol: float = 1e-8, orth_tol: float = 1e-8) -> bool:
        return self.residual_rel <= residual_tol and self.h_orthonormality_err <= orth_tol


# -- shared checks -------------------------------------------------------------

def _check_pair(d, a):
    d = matcore.as_matrix(d, "d")
    a = matcore.as_matrix(a, "a")
    if d.shape != a.shape:
        raise DimensionError(f"D and A must have the same shape, got {d.shape} and {a.shape}")
    l, n = d.shape
    if l > n:
        raise DimensionError(f"expected l <= n, got {l}x{n}")
    return d, a


def _rank_with_margin(m: np.ndarray, tol: float, name: str) -> int:
    sv = matcore.singular_values(m)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    cut = tol * sv[0]
    k = int(np.count_nonzero(sv > cut))
    marginal = (sv > cut) & (sv <= MARGINAL_FACTOR * cut)
    if np.any(marginal):
        raise NumericalError(
            f"numerical rank of {name} is ambiguous: singular value {sv[marginal][0]:.3e} "
            f"lies within a factor {MARGINAL_FACTOR:g} of the cutoff {cut:.3e}"
        )
    return k


def common_rank(d, a, tol: float | None = None) -> int:
    """Shared numerical rank of ``d`` and ``a``; raises RankMismatchError otherwise."""
    d, a = _check_pair(d, a)
    if tol is None:
        tol = matcore.default_tol(d.shape)
    kd = _rank_with_margin(d, tol, "D")
    ka = _rank_with_margin(a, tol, "A")
    if kd != ka:
        raise RankMismatchError(kd, ka)
    return kd


def _null_completion(n_a: np.ndarray, n_d: np.ndarray, seed) -> np.ndarray:
    r = n_a.shape[1]
    if r == 0:
        return np.zeros((n_a.shape[0], n_d.shape[0]))
    if seed is None:
        return n_a @ n_d.T
    return n_a @ random_orthonormal(r, seed) @ n_d.T


# -- constructions -------------------------------------------------------------

def factor_spectral(d, a, tol: float | None = None, seed: int | None = None) -> Factorization:
    """Factor ``D = G A H`` by matching the spectra of ``AA^T`` and ``DD^T``.

    With ``AA^T = Q_A S_A Q_A^T`` and ``DD^T = Q_D S_D Q_D^T`` (eigenvalues
    descending, ``k`` of them nonzero), the diagonal scaling
    ``s_i = sqrt(S_A,i / S_D,i)`` for ``i < k`` (1 beyond) gives
    ``W = Q_A diag(s) Q_D^T`` with ``W DD^T W^T = AA^T``. Then
    ``H = A^+ W D + N_A N_D^T`` and ``G = W^{-1} = Q_D diag(1/s) Q_A^T``.
    """
    d, a = _check_pair(d, a)
    if tol is None:
        tol = matcore.default_tol(d.shape)
    k = common_rank(d, a, tol)
    l = d.shape[0]

    ea = matcore.sym_eig(a @ a.T)
    ed = matcore.sym_eig(d @ d.T)
    lam_a, lam_d = ea.lam[:k], ed.lam[:k]
    if np.any(lam_d <= 0) or np.any(lam_a <= 0):
        raise NumericalError("numerical rank inconsistency: a leading eigenvalue of AA^T or DD^T is not positive")
    s = np.ones(l)
    s[:k] = np.sqrt(lam_a / lam_d)

    w = (ea.q * s) @ ed.q.T
    g = (ed.q / s) @ ea.q.T

    _, n_a, _ = matcore.range_and_null(a, tol)
    _, n_d, _ = matcore.range_and_null(d, tol)
    h = matcore.pinv(a, tol) @ w @ d + _null_completion(n_a, n_d, seed)
    return Factorization(g, a, h, Method.SPECTRAL, k, tol, info={"w": w, "sigma_s": s})


def _tight_frame_constant(d: np.ndarray, k: int) -> tuple[float, float]:
    """Return ``(c, deviation)`` with ``DD^T / c`` compared to an orthogonal projector."""
    dd = d @ d.T
    c = float(np.trace(dd)) / max(k, 1)
    if c <= 0:
        raise NotTightFrameError(float("inf"))
    p = dd / c
    l = d.shape[0]
    if k == l:
        dev = float(np.max(np.abs(p - np.eye(l))))
    else:
        lam = matcore.sym_eig(p).lam
        dev = float(max(np.max(np.abs(lam[:k] - 1.0)), np.max(np.abs(lam[k:]))))
    return c, dev


def factor_tight_frame(d, a, o=None, tol: float | None = None, seed: int | None = None) -> Factorization:
    """Closed-form factorization for a tight-frame dictionary.

    For ``DD^T = I``: ``G = O (AA^T)^{-1/2}`` and ``H = A^T G^T D + N_A N_D^T``
    for any orthonormal ``O`` (identity by default). If ``DD^T = c I`` the
    dictionary is rescaled by ``1/sqrt(c)`` and ``sqrt(c)`` is folded back into
    ``G``; ``scale`` records ``c``.

    When ``A`` and ``D`` share a rank ``k < l`` (``DD^T`` then a multiple of a
    rank-``k`` projector), the inverse square root is taken on the range of
    ``AA^T`` and completed by the identity on its complement, and ``O`` must
    carry the range of ``A`` onto the range of ``D``. The default ``O`` in
    that case is ``Q_D Q_A^T`` built from the ordered eigenvectors.
    """
    d, a = _check_pair(d, a)
    if tol is None:
        tol = matcore.default_tol(d.shape)
    k = common_rank(d, a, tol)
    l = d.shape[0]

    c, dev = _tight_frame_constant(d, k)
    if dev > TIGHT_FRAME_TOL:
        raise NotTightFrameError(dev)
    scale = c if abs(c - 1.0) > RESCALE_RTOL else 1.0
    dw = d / np.sqrt(scale)

    if o is not None:
        o = matcore.as_matrix(o, "o")
        if o.shape != (l, l):
            raise DimensionError(f"O must be {l}x{l}, got {o.shape}")
        if np.max(np.abs(o @ o.T - np.eye(l))) > 1e-8:
            raise ParameterError("O must be orthonormal")

    if k == l:
        g = matcore.inv_sqrt_spd(a @ a.T, tol=tol**2)
        if o is not None:
            g = o @ g
    else:
        ea = matcore.sym_eig(a @ a.T)
        qa = ea.q[:, :k]
        g = (qa / np.sqrt(ea.lam[:k])) @ qa.T + (np.eye(l) - qa @ qa.T)
        if o is None:
            o = matcore.sym_eig(dw @ dw.T).q @ ea.q.T
        else:
            qd = matcore.sym_eig(dw @ dw.T).q[:, :k]
            leak = float(np.max(np.abs(o @ qa - qd @ (qd.T @ o @ qa))))
            if leak > 1e-8:
                raise ParameterError(f"O must map range(A) onto range(D) for rank-deficient input (leak {leak:.2e})")
        g = o @ g

    _, n_a, _ = matcore.range_and_null(a, tol)
    _, n_d, _ = matcore.range_and_null(dw, tol)
    h = a.T @ g.T @ dw + _null_completion(n_a, n_d, seed)
    return Factorization(np.sqrt(scale) * g, a, h, Method.TIGHT_FRAME, k, tol, scale=scale)


def _extend_to_square(m: np.ndarray, tol: float) -> np.ndarray:
    """Append scaled orthonormal complement columns so ``m`` (l x k) becomes l x l."""
    l, k = m.shape
    if k == l:
        return m
    sv = matcore.singular_values(m)
    level = float(np.mean(sv[sv > tol * sv[0]])) if sv.size and sv[0] > 0 else 1.0
    comp = matcore.nullspace_basis(m.T, tol)
    if comp.shape[1] != l - k:
        raise NumericalError(f"cannot extend {l}x{k} block to an invertible matrix: complement has {comp.shape[1]} columns")
    return np.hstack([m, level * comp])


def factor_gram_schmidt(d, a, tol: float | None = None, seed: int | None = None) -> Factorization:
    """Factorization from orthonormal row-space bases.

    ``U`` and ``V`` (``n x k``) span the row spaces of ``A`` and ``D`` so that
    ``A U U^T = A`` and ``D V V^T = D``; their orthonormal completions give
    ``H = U V^T + U_perp V_perp^T``. Since ``D - G A H = (DV - G AU) V^T``,
    it suffices that ``G`` maps ``AU`` to ``DV``; both are extended to
    invertible ``l x l`` matrices and ``G = ext(DV) ext(AU)^{-1}``.
    """
    d, a = _check_pair(d, a)
    if tol is None:
        tol = matcore.default_tol(d.shape)
    k = common_rank(d, a, tol)

    u = matcore.orthonormal_range_basis(a.T, tol)
    v = matcore.orthonormal_range_basis(d.T, tol)
    if u.shape[1] != k or v.shape[1] != k:
        raise NumericalError(
            f"Gram-Schmidt found {u.shape[1]} and {v.shape[1]} basis vectors, expected rank {k}"
        )
    u_perp = matcore.nullspace_basis(u.T, tol)
    v_perp = matcore.nullspace_basis(v.T, tol)
    h = u @ v.T + _null_completion(u_perp, v_perp, seed)

    au_hat = _extend_to_square(a @ u, tol)
    dv_hat = _extend_to_square(d @ v, tol)
    sv = matcore.singular_values(au_hat)
    if sv[-1] <= tol * sv[0]:
        raise NumericalError(f"extended AU block is singular: sigma_min = {sv[-1]:.3e}")
    g = np.linalg.solve(au_hat.T, dv_hat.T).T
    return Factorization(g, a, h, Method.GRAM_SCHMIDT, k, tol)


_CONSTRUCTIONS = {
    Method.SPECTRAL: factor_spectral,
    Method.TIGHT_FRAME: factor_tight_frame,
    Method.GRAM_SCHMIDT: factor_gram_schmidt,
}


def factorize(d, a, method="spectral", **kwargs) -> Factorization:
    return _CONSTRUCTIONS[Method(method)](d, a, **kwargs)


# -- checks and derived quantities -------------------------------------------

def invert_g(g, tol: float | None = None) -> np.ndarray:
    """Inverse of ``g``; SingularMatrixError if ``sigma_min <= tol * sigma_max``."""
    g = matcore.as_matrix(g, "g")
    if g.shape[0] != g.shape[1]:
        raise DimensionError(f"G must be square, got {g.shape}")
    if tol is None:
        tol = matcore.default_tol(g.shape)
    sv = matcore.singular_values(g)
    if sv[-1] <= tol * sv[0]:
        raise SingularMatrixError(f"G is singular at tolerance: sigma_min = {sv[-1]:.3e}", float(sv[-1]))
    return np.linalg.inv(g)


def validate(f: Factorization, d) -> ValidationReport:
    d = matcore.as_matrix(d, "d")
    if d.shape != (f.g.shape[0], f.h.shape[1]):
        raise DimensionError(f"dictionary shape {d.shape} does not match factorization")
    resid = float(np.linalg.norm(d - f.product())) / max(1.0, float(np.linalg.norm(d)))
    orth = float(np.max(np.abs(f.h @ f.h.T - np.eye(f.h.shape[0]))))
    sv = matcore.singular_values(f.g)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    return ValidationReport(
        residual_rel=resid,
        h_orthonormality_err=orth,
        g_condition_number=cond,
        rank_d=matcore.rank(d, f.tol),
        rank_a=matcore.rank(f.a, f.tol),
    )


def sensing_matrix(f: Factorization, e: RowSelector) -> np.ndarray:
    """``S = E G^{-1}``: the selected rows of the inverse of ``G``."""
    if e.l != f.g.shape[0]:
        raise DimensionError(f"selector is over {e.l} rows but G is {f.g.shape[0]}x{f.g.shape[0]}")
    return apply_selector(e, f.g_inv)
