"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed together in the
terminal summary (see conftest.py) and also to stdout (visible with -s).
"""

import math
import subprocess
import sys
import time
from statistics import NormalDist

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from ripsense import bench, dictionary, matio
from ripsense.cosamp import RecoveryProblem, cosamp
from ripsense.ensembles import (
    EnsembleSpec,
    apply_selector,
    derive_seed,
    random_matrix,
    random_orthonormal,
    row_selector,
    sparse_vector,
)
from ripsense.errors import FormatError, RankMismatchError
from ripsense.factorize import factorize, validate

METHODS = ("spectral", "tight_frame", "gram_schmidt")
ENSEMBLES = ("gaussian", "bernoulli")
SHAPES = ((64, 256, 3, 50), (128, 1024, 5, 5))  # l, n, wavelet levels, pairs


def record(criterion, ok, detail):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def dictionary_for(method, l, n, levels, seed):
    if method == "tight_frame":
        return dictionary.parseval_frame(l, n, seed)
    return dictionary.wavelet_dictionary(dictionary.WaveletSpec(l, n, levels, seed))


@pytest.fixture(scope="module")
def factorization_runs():
    """All (construction, ensemble, shape, pair) factorizations of criterion 1."""
    t0 = time.perf_counter()
    runs = []
    for method in METHODS:
        for ens in ENSEMBLES:
            for l, n, levels, pairs in SHAPES:
                for i in range(pairs):
                    seed = derive_seed(1, i, f"{method}:{ens}:{l}")
                    d = dictionary_for(method, l, n, levels, derive_seed(seed, 0, "D"))
                    a = random_matrix(EnsembleSpec(ens, l, n, derive_seed(seed, 0, "A")))
                    f = factorize(d, a, method)
                    runs.append((method, ens, l, seed, d, f, validate(f, d)))
    return runs, time.perf_counter() - t0


def test_criterion_01_factorization_correctness(factorization_runs):
    runs, elapsed = factorization_runs
    worst_res = max(r.residual_rel for *_, r in runs)
    worst_orth = max(r.h_orthonormality_err for *_, r in runs)
    ok = worst_res <= 1e-8 and worst_orth <= 1e-8 and elapsed < 300
    record(1, ok, f"{len(runs)} factorizations, max residual {worst_res:.1e}, "
                  f"max |HH^T - I| {worst_orth:.1e}, {elapsed:.0f} s (budget 300 s)")
    assert ok


def test_criterion_02_sensing_equivalence(factorization_runs):
    runs, _ = factorization_runs
    worst = 0.0
    for method, ens, l, seed, d, f, _ in runs:
        ah = f.a @ f.h
        for j in range(20):
            e = row_selector(l // 2, l, derive_seed(seed, j, "E"))
            gap = np.linalg.norm(apply_selector(e, f.g_inv) @ d - apply_selector(e, ah)) / np.linalg.norm(d)
            worst = max(worst, gap)
    ok = worst <= 1e-8
    record(2, ok, f"{20 * len(runs)} selectors, max ||E G^-1 D - E A H||_F / ||D||_F = {worst:.1e}")
    assert ok


def random_projector(l, k, seed):
    q = random_orthonormal(l, seed)[:, :k]
    return q @ q.T


def test_criterion_03_rank_deficient_path():
    l, n = 64, 256
    worst, mismatch_raised, count = 0.0, 0, 0
    for method in ("spectral", "gram_schmidt"):
        for ens in ENSEMBLES:
            for k in (l - 1, l // 2):
                seed = derive_seed(3, k, f"{method}:{ens}")
                d0 = random_matrix(EnsembleSpec("gaussian", l, n, derive_seed(seed, 0, "D")))
                a0 = random_matrix(EnsembleSpec(ens, l, n, derive_seed(seed, 0, "A")))
                d = random_projector(l, k, derive_seed(seed, 0, "PD")) @ d0
                a = random_projector(l, k, derive_seed(seed, 0, "PA")) @ a0
                f = factorize(d, a, method)
                rep = validate(f, d)
                assert f.rank == k
                worst = max(worst, rep.residual_rel, rep.h_orthonormality_err)
                count += 1
                a_short = random_projector(l, k - 1, derive_seed(seed, 0, "PA")) @ a0
                try:
                    factorize(d, a_short, method)
                except RankMismatchError as exc:
                    mismatch_raised += (exc.rank_d, exc.rank_a) == (k, k - 1)
    ok = worst <= 1e-8 and mismatch_raised == count
    record(3, ok, f"{count} rank-deficient pairs (k = 63, 32), max error {worst:.1e}; "
                  f"rank mismatch raised {mismatch_raised}/{count}")
    assert ok


def test_criterion_04_tight_frame_identity():
    worst, count = 0.0, 0
    for l, n, _, _ in SHAPES:
        for ens in ENSEMBLES:
            d = dictionary.parseval_frame(l, n, derive_seed(4, l, ens))
            a = random_matrix(EnsembleSpec(ens, l, n, derive_seed(4, l, "A" + ens)))
            for o in (None, random_orthonormal(l, derive_seed(4, l, "O" + ens))):
                f = factorize(d, a, "tight_frame", o=o)
                g = f.g / np.sqrt(f.scale)
                worst = max(worst, np.abs(g @ a @ a.T @ g.T - np.eye(l)).max())
                count += 1
    ok = worst <= 1e-9
    record(4, ok, f"{count} factorizations (O = I and random O), max |G A A^T G^T - I| = {worst:.1e}")
    assert ok


def test_criterion_05_wavelet_reconstruction_and_structure():
    pr = 0.0
    for i in range(100):
        length = (16, 64, 128)[i % 3]
        x = np.random.default_rng(derive_seed(5, i, "signal")).standard_normal(length)
        pr = max(pr, np.abs(dictionary.synthesize(*dictionary.analyze(x)) - x).max())
    d = dictionary.wavelet_dictionary(dictionary.WaveletSpec(128, 1024, 5, seed=5))
    norm_dev = np.abs(np.linalg.norm(d, axis=0) - 1).max()
    shifts_exact = all(
        np.array_equal(d[:, j * 128 + c], np.roll(d[:, j * 128], c)) for j in range(5) for c in range(128)
    )
    ok = pr <= 1e-10 and norm_dev <= 1e-12 and shifts_exact
    record(5, ok, f"PR error {pr:.1e} on 100 signals, column norm deviation {norm_dev:.1e}, "
                  f"circular shifts exact: {shifts_exact}")
    assert ok


def test_criterion_06_cosamp_sanity():
    t0 = time.perf_counter()
    phi = random_matrix(EnsembleSpec("gaussian", 64, 256, derive_seed(6, 0, "phi")))
    exact = 0
    for t in range(500):
        x = sparse_vector(256, 5, derive_seed(6, t, "x")).dense()
        exact += np.linalg.norm(cosamp(RecoveryProblem(phi, phi @ x, 5)).x_hat - x) <= 1e-6
    elapsed = time.perf_counter() - t0
    ok = exact / 500 >= 0.99 and elapsed < 120
    record(6, ok, f"exact recovery {exact}/500 = {exact / 500:.3f} (need >= 0.99), {elapsed:.1f} s")
    assert ok


def desk_curves(dict_source):
    results = {}
    t0 = time.perf_counter()
    for method in METHODS:
        for ens in ENSEMBLES:
            config = bench.preset(f"desk-{dict_source}-{ens}", method=method, grid_points=8)
            results[(method, ens)] = bench.run_curve(config, jobs=1)
    return results, time.perf_counter() - t0


def max_z(results):
    """Largest two-proportion z-score of ours against benchmark, and the point count."""
    zs = []
    for r in results.values():
        for p in r.points:
            if not p.valid:
                continue
            pooled = (p.successes_ours + p.successes_benchmark) / (2 * p.trials_run)
            se = math.sqrt(2 * pooled * (1 - pooled) / p.trials_run)
            diff = abs(p.probability_ours - p.probability_benchmark)
            zs.append(0.0 if diff == 0 else diff / se if se > 0 else math.inf)
    return max(zs), len(zs)


def format_gaps(results):
    return ", ".join(f"{m}/{e} {r.max_gap():.3f}" for (m, e), r in results.items())


def test_criterion_07_head_to_head_wavelet():
    results, elapsed = desk_curves("wavelet")
    worst = max(r.max_gap() for r in results.values())
    z, _ = max_z(results)
    ok = worst <= 0.08 and elapsed < 1800
    record(7, ok, f"wavelet dictionary, max |p_ours - p_benchmark| = {worst:.3f} (limit 0.08, largest z = {z:.1f}), "
                  f"{elapsed:.0f} s; per configuration: {format_gaps(results)}")
    assert ok


def test_criterion_07_supplement_parseval_frame():
    """Not a criterion: the same head-to-head on a random Parseval frame.

    Separates harness correctness from the wavelet dictionary's coherence.
    At 200 trials per point a max-over-grid gap of 0.08 is within sampling
    noise, so equality is tested per point with a Bonferroni-corrected
    two-proportion z-test at the 1% level.
    """
    results, elapsed = desk_curves("parseval")
    worst = max(r.max_gap() for r in results.values())
    z, npoints = max_z(results)
    z_crit = NormalDist().inv_cdf(1 - 0.01 / (2 * npoints))
    ok = z <= z_crit
    record("7s", ok, f"supplementary, random Parseval frame: largest z = {z:.2f} (critical {z_crit:.2f} "
                     f"over {npoints} points), max gap {worst:.3f}, {elapsed:.0f} s; per configuration: "
                     f"{format_gaps(results)}")
    assert ok


@pytest.mark.slow
def test_criterion_07_paper_scale_runs_to_completion():
    config = bench.preset("paper-wavelet-gaussian")
    result = bench.run_curve(config, jobs=1)
    runs = sum(p.trials_run for p in result.points)
    ok = runs == 3 * 10 * 2000 and all(p.valid for p in result.points)
    record("7p", ok, f"paper-scale preset completed {runs} trials in {result.wall_time:.0f} s "
                     f"(untimed; max gap {result.max_gap():.3f})")
    assert ok


def test_criterion_08_concentration():
    means = {}
    for ens in ENSEMBLES:
        s = bench.concentration_probe(EnsembleSpec(ens, 128, 1024, derive_seed(8, 0, ens)), 64, 5000, 8)
        means[ens] = s.mean
    ok = all(0.97 <= v <= 1.03 for v in means.values())
    record(8, ok, "rescaled mean squared norm " + ", ".join(f"{k} {v:.4f}" for k, v in means.items())
                  + " (need [0.97, 1.03])")
    assert ok


def test_criterion_09_determinism(tmp_path):
    outs = []
    for name in ("c1", "c2"):
        cmd = [sys.executable, "-m", "ripsense.cli", "experiment", "--preset", "paper-wavelet-gaussian",
               "--trials", "200", "--out", str(tmp_path / f"{name}.csv"), "--svg", str(tmp_path / f"{name}.svg")]
        assert subprocess.run(cmd, capture_output=True).returncode == 0
        svgs = b"".join((tmp_path / f"{name}_k{k}.svg").read_bytes() for k in (10, 12, 14))
        outs.append(((tmp_path / f"{name}.csv").read_bytes(), svgs))
    desk = [bench.run_curve(bench.preset("desk-wavelet-bernoulli", trials=50), jobs=j).to_csv() for j in (1, 2)]
    ok = outs[0] == outs[1] and desk[0] == desk[1]
    record(9, ok, "paper-wavelet-gaussian --trials 200 re-run byte-identical (CSV and SVG): "
                  f"{outs[0] == outs[1]}; desk preset with 1 vs 2 workers identical: {desk[0] == desk[1]}")
    assert ok


def test_criterion_10_file_format(tmp_path):
    exact = 0
    for i in range(50):
        rng = np.random.default_rng(derive_seed(10, i, "matrix"))
        rows, cols = (int(v) for v in rng.integers(1, 40, size=2))
        if i % 3 == 0:  # square invertible: empty null space
            cols = rows
        m = rng.standard_normal((rows, cols))
        if i % 3 == 1:  # rank-deficient
            m = m[:, :1] @ rng.standard_normal((1, cols))
        path = tmp_path / f"m{i}.csmx"
        matio.write_matrix(path, m)
        exact += matio.read_matrix(path).tobytes() == m.tobytes()

    good = matio.encode_matrix(np.ones((3, 3)))
    corrupt = [good[:12], b"NOPE" + good[4:], good[:4] + b"\x09" + good[5:], good[:-3], good + b"x",
               good[:8] + (2**30).to_bytes(8, "little") * 2 + good[24:]]
    rejected = 0
    for j, blob in enumerate(corrupt):
        (tmp_path / f"bad{j}.csmx").write_bytes(blob)
        try:
            matio.read_matrix(tmp_path / f"bad{j}.csmx")
        except FormatError:
            rejected += 1
    ok = exact == 50 and rejected == len(corrupt)
    record(10, ok, f"bit-exact round trips {exact}/50, corrupted files rejected {rejected}/{len(corrupt)}")
    assert ok
