"""Factor a wavelet dictionary against a Gaussian matrix three ways.

Builds the 128 x 1024 undecimated CDF 9/7 dictionary, factors it as
D = G A H with each construction, and checks that the sensing matrix
S = E G^-1 turns S D into selected rows of the rotated random matrix A H.

Run: python demos/factorize_wavelet.py
"""

import numpy as np

from ripsense.dictionary import WaveletSpec, frame_diagnostics, canonical_tight_frame, wavelet_dictionary
from ripsense.ensembles import EnsembleSpec, random_matrix, row_selector
from ripsense.factorize import factorize, sensing_matrix, validate

l, n = 128, 1024
d = wavelet_dictionary(WaveletSpec(l, n, levels=5, seed=1))
a = random_matrix(EnsembleSpec("gaussian", l, n, seed=2))

diag = frame_diagnostics(d)
print(f"dictionary {d.shape}, rank {diag.rank}, distance from a tight frame {diag.tight_frame_err:.3f}")

# the closed-form construction needs a tight frame, so use the canonical
# Parseval frame of the same dictionary for it
targets = {"spectral": d, "gram_schmidt": d, "tight_frame": canonical_tight_frame(d)}

e = row_selector(64, l, seed=3)
print(f"\n{'method':<14}{'residual':>12}{'|HH^T - I|':>14}{'cond(G)':>10}{'|SD - EAH|':>14}")
for method, dd in targets.items():
    f = factorize(dd, a, method)
    rep = validate(f, dd)
    s = sensing_matrix(f, e)
    gap = np.linalg.norm(s @ dd - (a @ f.h)[list(e.indices)]) / np.linalg.norm(dd)
    print(f"{method:<14}{rep.residual_rel:>12.1e}{rep.h_orthonormality_err:>14.1e}{rep.g_condition_number:>10.2f}{gap:>14.1e}")

# the factorization is not unique: a different completion seed gives another valid H
f1 = factorize(d, a, "spectral", seed=10)
f2 = factorize(d, a, "spectral", seed=11)
print(f"\ntwo completions differ by ||H1 - H2||_F = {np.linalg.norm(f1.h - f2.h):.2f}, "
      f"residuals {validate(f1, d).residual_rel:.1e} and {validate(f2, d).residual_rel:.1e}")
