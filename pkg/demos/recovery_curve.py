"""Recovery probability against CS ratio, ours against the benchmark.

A short desk-scale run (20 trials per point) of the wavelet and the random
Parseval dictionaries. Writes recovery_<dictionary>_k<k>.svg next to the
current directory. Use the ``ripsense experiment`` command for full runs.

Run: python demos/recovery_curve.py
"""

from ripsense import bench

for source in ("wavelet", "parseval"):
    config = bench.preset(f"desk-{source}-gaussian", trials=20, grid_points=6, k_list=(4, 8))
    result = bench.run_curve(config)
    print(f"\n{source} dictionary ({result.wall_time:.1f} s)")
    print(f"{'k':>3}{'m':>5}{'ours':>8}{'bench':>8}")
    for p in result.points:
        print(f"{p.k:>3}{p.m:>5}{p.probability_ours:>8.2f}{p.probability_benchmark:>8.2f}")
    for path in bench.write_svgs(result, f"recovery_{source}.svg"):
        print("wrote", path)
