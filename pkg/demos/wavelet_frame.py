"""The CDF 9/7 filter bank and the undecimated wavelet frame built from it.

Run: python demos/wavelet_frame.py
"""

import numpy as np

from ripsense import dictionary as dic

bank = dic.cdf97_filters()
for name, taps in bank._asdict().items():
    print(f"{name:<13} {len(taps)} taps, sum {taps.sum():+.6f}")

# one periodic level is perfectly reconstructing
x = np.random.default_rng(0).standard_normal(64)
approx, detail = dic.analyze(x)
print(f"\nanalysis/synthesis round trip error: {np.abs(dic.synthesize(approx, detail) - x).max():.1e}")

# level-j atoms widen by roughly a factor of two per level
for level in range(1, 6):
    atom = dic.wavelet_atom(128, level)
    support = np.count_nonzero(np.abs(atom) > 1e-12)
    print(f"level {level}: {support:3d} nonzero samples, energy {np.sum(atom**2):.4f}")

d = dic.wavelet_dictionary(dic.WaveletSpec(128, 1024, 5, seed=1))
print(f"\ncolumn 1 is column 0 shifted by one sample: {np.array_equal(d[:, 1], np.roll(d[:, 0], 1))}")
diag = dic.frame_diagnostics(d)
print(f"tight_frame_err {diag.tight_frame_err:.3f}, column norm deviation {diag.column_norm_max_dev:.1e}")

gram = np.abs(d.T @ d - np.eye(1024))
print(f"mutual coherence: wavelet block {gram[:640, :640].max():.2f}, whole dictionary {gram.max():.2f}")
