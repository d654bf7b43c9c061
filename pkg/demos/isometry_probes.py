"""Empirical concentration and restricted isometry probes.

Run: python demos/isometry_probes.py
"""

import numpy as np

from ripsense import bench
from ripsense.dictionary import WaveletSpec, wavelet_dictionary
from ripsense.ensembles import EnsembleSpec, apply_selector, random_matrix, row_selector
from ripsense.factorize import factor_spectral

# E[||E A x||^2] * n / m should be close to ||x||^2 = 1
for kind in ("gaussian", "bernoulli"):
    s = bench.concentration_probe(EnsembleSpec(kind, 128, 1024, seed=1), m=64, num_vectors=5000, seed=2)
    print(f"{kind:<10} mean {s.mean:.4f}, worst deviation {s.max_dev:.3f}")

# the sensed dictionary S D and the rotated random matrix E A H are the same
# operator, so their isometry probes agree sample by sample
d = wavelet_dictionary(WaveletSpec(128, 1024, 5, seed=3))
a = random_matrix(EnsembleSpec("gaussian", 128, 1024, seed=4))
f = factor_spectral(d, a)
e = row_selector(96, 128, seed=5)
ours = bench.rip_probe(apply_selector(e, f.g_inv) @ d, k=10, samples=2000, seed=6)
rotated = bench.rip_probe(apply_selector(e, a @ f.h), k=10, samples=2000, seed=6)
plain = bench.rip_probe(apply_selector(e, a), k=10, samples=2000, seed=6)
print(f"\ndelta_hat: S D {ours.delta_hat:.4f}, E A H {rotated.delta_hat:.4f}, E A {plain.delta_hat:.4f}")
print(f"ratio mean: S D {ours.ratio_mean:.4f}, E A {plain.ratio_mean:.4f}")
print(f"two-path difference {abs(ours.delta_hat - rotated.delta_hat):.1e}")
