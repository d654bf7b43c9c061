"""Sparsifying dictionaries built from the CDF 9/7 wavelet, plus frame diagnostics.

The wavelet dictionary is an undecimated (shift-invariant) frame: for each
level ``j`` the level-``j`` synthesis wavelet is placed at all ``l`` circular
shifts, giving ``l`` columns per level. Remaining columns are Gaussian. Every
column has unit length.

Filters use centred indexing: a filter of odd length ``2r + 1`` is stored as
taps ``-r .. r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matcore
from .ensembles import Ensemble, EnsembleSpec, gaussian_matrix, random_orthonormal
from .errors import ParameterError

# Half filters (centre tap first) from the spectral factorization of the
# degree-3 Daubechies polynomial 1 + 4y + 10y^2 + 20y^3: the real root goes
# to the 7-tap filter, the complex pair to the 9-tap filter. DC gain sqrt(2).
_LO9_HALF = (
    0.8526986790094034193118,
    0.3774028556126537641136,
    -0.1106244044184234088486,
    -0.02384946501938000191317,
    0.03782845550699546139308,
)
_LO7_HALF = (
    0.7884856164056643978484,
    0.4180922732222122008374,
    -0.04068941760955843672376,
    -0.06453888262893843863693,
)


def _symmetric(half) -> np.ndarray:
    half = np.asarray(half, dtype=np.float64)
    return np.concatenate([half[:0:-1], half])


def _modulate(h: np.ndarray) -> np.ndarray:
    r = len(h) // 2
    return h * (-1.0) ** np.arange(-r, r + 1)


class FilterBank(NamedTuple):
    analysis_lo: np.ndarray
    analysis_hi: np.ndarray
    synthesis_lo: np.ndarray
    synthesis_hi: np.ndarray


def cdf97_filters() -> FilterBank:
    """CDF 9/7 biorthogonal filter bank (9, 7, 7, 9 taps, centred)."""
    lo9 = _symmetric(_LO9_HALF)
    lo7 = _symmetric(_LO7_HALF)
    return FilterBank(
        analysis_lo=lo9,
        analysis_hi=-_modulate(lo7),
        synthesis_lo=lo7,
        synthesis_hi=-_modulate(lo9),
    )


def _correlate_periodic(x: np.ndarray, f: np.ndarray, offset: int) -> np.ndarray:
    """``y[j] = sum_t f[t] x[j + offset + t]`` with periodic indexing."""
    r = len(f) // 2
    y = np.zeros_like(x)
    for t, c in zip(range(-r, r + 1), f):
        y += c * np.roll(x, -(offset + t))
    return y


def _convolve_periodic(x: np.ndarray, f: np.ndarray, offset: int = 0) -> np.ndarray:
    """``y[j] = sum_t f[t] x[j - offset - t]`` with periodic indexing."""
    r = len(f) // 2
    y = np.zeros_like(x)
    for t, c in zip(range(-r, r + 1), f):
        y += c * np.roll(x, offset + t)
    return y


def analyze(x, bank: FilterBank | None = None):
    """One level of the periodic forward transform; returns ``(approx, detail)``."""
    bank = bank or cdf97_filters()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) % 2:
        raise ParameterError("signal must be 1-D with even length")
    approx = _correlate_periodic(x, bank.analysis_lo, 0)[0::2]
    detail = _correlate_periodic(x, bank.analysis_hi, 1)[0::2]
    return approx, detail


def synthesize(approx, detail, bank: FilterBank | None = None) -> np.ndarray:
    """Inverse of :func:`analyze`."""
    bank = bank or cdf97_filters()
    approx = np.asarray(approx, dtype=np.float64)
    detail = np.asarray(detail, dtype=np.float64)
    up_a = np.zeros(2 * len(approx))
    up_d = np.zeros(2 * len(detail))
    up_a[0::2] = approx
    up_d[0::2] = detail
    return _convolve_periodic(up_a, bank.synthesis_lo) + _convolve_periodic(up_d, bank.synthesis_hi, 1)


def _upsample_filter(f: np.ndarray, factor: int) -> np.ndarray:
    out = np.zeros((len(f) - 1) * factor + 1)
    out[::factor] = f
    return out


def wavelet_atom(length: int, level: int, bank: FilterBank | None = None) -> np.ndarray:
    """Level-``level`` synthesis wavelet on a circle of ``length`` samples, centred at 0.

    Built by the a-trous cascade: highpass upsampled by ``2**(level-1)``
    convolved with the lowpass upsampled by ``2**(level-2), ..., 1``.
    """
    bank = bank or cdf97_filters()
    atom = np.zeros(length)
    atom[0] = 1.0
    atom = _convolve_periodic(atom, _upsample_filter(bank.synthesis_hi, 2 ** (level - 1)))
    for j in range(level - 1):
        atom = _convolve_periodic(atom, _upsample_filter(bank.synthesis_lo, 2**j))
    return atom


@dataclass(frozen=True)
class WaveletSpec:
    signal_len: int
    total_cols: int
    levels: int
    seed: int = 0

    def __post_init__(self):
        l, n, j = self.signal_len, self.total_cols, self.levels
        if l < 2 or l & (l - 1):
            raise ParameterError(f"signal length must be a power of two, got {l}")
        if j < 1 or 2**j > l:
            raise ParameterError(f"need 1 <= levels and 2**levels <= {l}, got {j}")
        if j * l > n:
            raise ParameterError(f"{j} levels need {j * l} columns but only {n} requested")


def wavelet_dictionary(spec: WaveletSpec) -> np.ndarray:
    """``l x n`` dictionary: ``levels`` blocks of shifted wavelets, then Gaussian columns."""
    l, n = spec.signal_len, spec.total_cols
    blocks = []
    for level in range(1, spec.levels + 1):
        atom = wavelet_atom(l, level)
        # normalize before shifting so every shift is bit-identical
        atom = atom / np.linalg.norm(atom)
        blocks.append(np.column_stack([np.roll(atom, c) for c in range(l)]))
    tail = n - spec.levels * l
    if tail:
        g = gaussian_matrix(EnsembleSpec(Ensemble.GAUSSIAN, l, tail, spec.seed))
        blocks.append(g / np.linalg.norm(g, axis=0))
    return np.hstack(blocks)


@dataclass(frozen=True)
class FrameDiagnostics:
    tight_frame_err: float
    column_norm_max_dev: float
    rank: int


def frame_diagnostics(d) -> FrameDiagnostics:
    """How far ``d`` is from a tight frame after the best uniform rescaling."""
    d = matcore.as_matrix(d, "d")
    l = d.shape[0]
    dd = d @ d.T
    c = float(np.trace(dd)) / l
    err = float(np.max(np.abs(dd / c - np.eye(l)))) if c > 0 else float("inf")
    norms = np.linalg.norm(d, axis=0)
    return FrameDiagnostics(err, float(np.max(np.abs(norms - 1.0))), matcore.rank(d))


def canonical_tight_frame(d) -> np.ndarray:
    """Parseval frame ``(DD^T)^{-1/2} D`` spanning the same synthesis space."""
    d = matcore.as_matrix(d, "d")
    return matcore.inv_sqrt_spd(d @ d.T) @ d


def parseval_frame(l: int, n: int, seed: int) -> np.ndarray:
    """First ``l`` rows of a seeded Haar-random ``n x n`` orthonormal matrix."""
    if l > n:
        raise ParameterError(f"need l <= n, got {l} > {n}")
    return random_orthonormal(n, seed)[:l].copy()
