"""Seeded random ensembles: measurement matrices, row selectors, sparse vectors.

All randomness comes from Philox4x64-10 (the counter-based generator of
Salmon et al., reference implementation in Random123) keyed with
``(seed, 0)`` and starting at counter zero, consumed through its raw 64-bit
output stream. Derived quantities are defined on that stream only:

* uniform double in (0, 1): ``((raw >> 11) + 0.5) * 2**-53``
* Gaussian: Box-Muller on consecutive uniform pairs, cosine branch first
* random sign: top bit of ``raw`` (set means negative)
* integer in ``[0, r)``: ``raw % r``

so the streams can be reproduced outside numpy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError

MASK64 = (1 << 64) - 1
_TWO_NEG53 = 2.0**-53


class Ensemble(str, enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: Ensemble
    rows: int
    cols: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Ensemble(self.kind))


@dataclass(frozen=True)
class RowSelector:
    """Selection of ``m`` distinct rows out of ``l``, in draw order."""

    m: int
    l: int
    indices: tuple

    def __post_init__(self):
        if len(self.indices) != self.m or len(set(self.indices)) != self.m:
            raise ParameterError("row selector indices must be m distinct values")
        if any(i < 0 or i >= self.l for i in self.indices):
            raise ParameterError(f"row selector indices must lie in [0, {self.l})")


@dataclass(frozen=True)
class SparseVector:
    n: int
    support: np.ndarray
    values: np.ndarray

    @property
    def k(self) -> int:
        return len(self.support)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.support] = self.values
        return x


# -- seed plumbing -----------------------------------------------------------

def splitmix64(x: int) -> int:
    """SplitMix64 finalizer (Steele, Lea & Flood)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def derive_seed(base_seed: int, index: int = 0, tag: str = "") -> int:
    """hash64(base_seed, index, tag) by chained SplitMix64 mixing."""
    h = splitmix64(int(base_seed) & MASK64)
    h = splitmix64(h ^ (int(index) & MASK64))
    return splitmix64(h ^ fnv1a64(tag.encode("utf-8")))


class Stream:
    """Raw 64-bit stream of Philox4x64-10 keyed by ``(seed, 0)``."""

    def __init__(self, seed: int):
        # numpy increments before the first block; start one below zero so
        # the first block is counter 0 as in the reference implementation
        self._bitgen = np.random.Philox(
            key=np.array([int(seed) & MASK64, 0], dtype=np.uint64),
            counter=np.full(4, MASK64, dtype=np.uint64),
        )

    def raw(self, size: int) -> np.ndarray:
        return self._bitgen.random_raw(size).astype(np.uint64)

    def uniform(self, size: int) -> np.ndarray:
        return ((self.raw(size) >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_NEG53

    def normal(self, size: int) -> np.ndarray:
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        rad = np.sqrt(-2.0 * np.log(u[:, 0]))
        ang = 2.0 * np.pi * u[:, 1]
        z = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]).ravel()
        return z[:size]

    def signs(self, size: int) -> np.ndarray:
        top = (self.raw(size) >> np.uint64(63)).astype(np.float64)
        return 1.0 - 2.0 * top

    def below(self, r: int) -> int:
        return int(self.raw(1)[0] % np.uint64(r))


def _partial_shuffle(stream: Stream, m: int, l: int) -> list[int]:
    perm = list(range(l))
    for i in range(m):
        j = i + stream.below(l - i)
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:m]


# -- generators ----------------------------------------------------------------

def _check_dims(rows: int, cols: int):
    if rows < 1 or cols < 1:
        raise DimensionError(f"matrix dimensions must be positive, got {rows}x{cols}")


def gaussian_matrix(spec: EnsembleSpec) -> np.ndarray:
    """i.i.d. N(0, 1/n) entries, n = number of columns."""
    if spec.kind is not Ensemble.GAUSSIAN:
        raise ParameterError(f"expected a gaussian spec, got {spec.kind.value}")
    _check_dims(spec.rows, spec.cols)
    z = Stream(spec.seed).normal(spec.rows * spec.cols)
    return z.reshape(spec.rows, spec.cols) / np.sqrt(spec.cols)


def bernoulli_matrix(spec: EnsembleSpec) -> np.ndarray:
    """i.i.d. entries equal to +1/sqrt(n) or -1/sqrt(n) with equal probability."""
    if spec.kind is not Ensemble.BERNOULLI:
        raise ParameterError(f"expected a bernoulli spec, got {spec.kind.value}")
    _check_dims(spec.rows, spec.cols)
    s = Stream(spec.seed).signs(spec.rows * spec.cols)
    return s.reshape(spec.rows, spec.cols) * (1.0 / np.sqrt(spec.cols))


def random_matrix(spec: EnsembleSpec) -> np.ndarray:
    if spec.kind is Ensemble.GAUSSIAN:
        return gaussian_matrix(spec)
    return bernoulli_matrix(spec)


def row_selector(m: int, l: int, seed: int) -> RowSelector:
    """Uniform m-subset of range(l) by seeded partial Fisher-Yates."""
    if l < 1 or m < 1 or m > l:
        raise ParameterError(f"row selector needs 1 <= m <= l, got m={m}, l={l}")
    return RowSelector(m, l, tuple(_partial_shuffle(Stream(seed), m, l)))


def full_selector(l: int) -> RowSelector:
    return RowSelector(l, l, tuple(range(l)))


def apply_selector(e: RowSelector, m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.shape[0] != e.l:
        raise DimensionError(f"selector expects {e.l} rows, matrix has {m.shape[0]}")
    return m[list(e.indices)]


def sparse_vector(n: int, k: int, seed: int) -> SparseVector:
    """k-sparse vector, uniform support, values uniform on [-1, 1] without zeros."""
    if n < 1 or k < 1 or k > n:
        raise ParameterError(f"sparse vector needs 1 <= k <= n, got k={k}, n={n}")
    stream = Stream(seed)
    support = np.array(_partial_shuffle(stream, k, n), dtype=np.int64)
    values = 2.0 * stream.uniform(k) - 1.0
    while np.any(values == 0.0):
        zeros = np.flatnonzero(values == 0.0)
        values[zeros] = 2.0 * stream.uniform(len(zeros)) - 1.0
    return SparseVector(n, support, values)


def random_unit_vectors(n: int, count: int, seed: int) -> np.ndarray:
    """``count`` Gaussian-direction unit vectors in R^n, one per row."""
    x = Stream(seed).normal(n * count).reshape(count, n)
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def random_orthonormal(n: int, seed: int) -> np.ndarray:
    """Haar-distributed n x n orthonormal matrix (QR of a Gaussian, R-sign fixed)."""
    _check_dims(n, n)
    g = Stream(seed).normal(n * n).reshape(n, n)
    q, r = np.linalg.qr(g)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d
