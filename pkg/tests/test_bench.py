import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ripsense import bench
from ripsense.dictionary import parseval_frame
from ripsense.ensembles import EnsembleSpec, apply_selector, random_orthonormal, row_selector
from ripsense.errors import ParameterError, RipSenseError
from ripsense.factorize import Method, factor_spectral


def small(**kw):
    base = dict(l=16, n=48, levels=2, k_list=(2,), grid_points=3, trials=20)
    base.update(kw)
    return bench.ExperimentConfig(**base)


# -- configuration ------------------------------------------------------------------------

def test_default_grid():
    c = bench.ExperimentConfig()
    r = c.ratios_for(4)
    assert len(r) == 10
    assert r[0] == pytest.approx(6 / 256) and r[-1] == pytest.approx(64 / 256)


def test_presets():
    c = bench.preset("paper-wavelet-gaussian")
    assert (c.l, c.n, c.levels, c.k_list, c.trials) == (128, 1024, 5, (10, 12, 14), 2000)
    assert bench.preset("desk-wavelet-bernoulli").ensemble.value == "bernoulli"
    assert bench.preset("desk-pksvd-gaussian", dict_source="d.csmx").method is Method.TIGHT_FRAME
    assert bench.preset("desk-wavelet-gaussian", trials=5).trials == 5


@pytest.mark.parametrize("name", ["desk-wavelet", "huge-wavelet-gaussian", "desk-foo-gaussian", "desk-ksvd-gaussian"])
def test_bad_presets(name):
    with pytest.raises((ParameterError, ValueError)):
        bench.preset(name)


def test_config_validation():
    with pytest.raises(ParameterError):
        small(cs_ratios=(0.5,))
    with pytest.raises(ParameterError):
        small(l=60)
    with pytest.raises(ParameterError):
        small(k_list=())


def test_dictionary_file_shape_checked(tmp_path):
    from ripsense import matio

    matio.write_matrix(tmp_path / "d.csmx", np.ones((4, 4)))
    with pytest.raises(ParameterError):
        bench.load_dictionary(small(dict_source=str(tmp_path / "d.csmx")))


# -- trials and curves -----------------------------------------------------------------------

def test_easiest_regime_both_succeed():
    setup = bench.build_setup(small())
    for t in range(10):
        ok_ours, ok_bench, _ = bench.run_trial(setup, 1, 16, t)
        assert ok_ours and ok_bench


def test_trial_precondition():
    setup = bench.build_setup(small())
    with pytest.raises(ParameterError):
        bench.run_trial(setup, 5, 4, 0)


def test_head_to_head_single_point():
    c = bench.preset("desk-wavelet-gaussian", k_list=(4,), cs_ratios=(40 / 256,))
    p = bench.run_curve(c).points[0]
    assert p.m == 40 and p.trials_run == 200
    assert abs(p.probability_ours - p.probability_benchmark) <= 0.05


def test_corollary_spot_check_recorded():
    r = bench.run_curve(small(trials=101))
    assert 0 < r.corollary_max_dev <= 1e-8


def test_skipped_pairs():
    r = bench.run_curve(small(k_list=(4,), cs_ratios=(2 / 48, 16 / 48)))
    low, high = r.points
    assert low.skipped == 20 and low.trials_run == 0 and not low.valid
    assert high.trials_run == 20
    for p in r.points:
        assert p.trials_run + p.skipped + p.errors == 20
    assert ",nan," in r.to_csv()


def test_single_trial_probabilities():
    for p in bench.run_curve(small(trials=1)).points:
        assert p.probability_ours in (0.0, 1.0) and p.probability_benchmark in (0.0, 1.0)


def test_probabilities_bounded():
    for p in bench.run_curve(small()).points:
        assert 0 <= p.successes_ours <= p.trials_run
        assert 0 <= p.probability_benchmark <= 1


def test_deterministic_csv():
    assert bench.run_curve(small()).to_csv() == bench.run_curve(small()).to_csv()


def test_seed_changes_output():
    assert bench.run_curve(small(trials=60)).to_csv() != bench.run_curve(small(trials=60, base_seed=1)).to_csv()


def test_parallel_matches_serial():
    c = small(trials=120, k_list=(2, 3))
    assert bench.run_curve(c, jobs=3).to_csv() == bench.run_curve(c, jobs=1).to_csv()


@pytest.mark.parametrize("method", ["spectral", "tight_frame", "gram_schmidt"])
@pytest.mark.parametrize("ensemble", ["gaussian", "bernoulli"])
def test_every_configuration_runs(method, ensemble):
    r = bench.run_curve(small(method=method, ensemble=ensemble, trials=5))
    assert all(p.valid for p in r.points)
    assert r.corollary_max_dev <= 1e-8


def test_tight_frame_on_wavelet_uses_canonical_frame():
    setup = bench.build_setup(small(method="tight_frame"))
    assert setup.notes
    assert np.abs(setup.d @ setup.d.T - np.eye(16)).max() <= 1e-10


def test_redraw_a():
    r = bench.run_curve(small(redraw_a=True, trials=4))
    assert all(p.trials_run == 4 for p in r.points)


def test_errored_trials_counted_separately(monkeypatch):
    real = bench.run_trial

    def flaky(setup, k, m, t):
        if t % 4 == 0:
            raise RipSenseError("planted")
        return real(setup, k, m, t)

    monkeypatch.setattr(bench, "run_trial", flaky)
    r = bench.run_curve(small(trials=8))
    for p in r.points:
        assert p.errors == 2 and p.trials_run == 6


def test_all_errored_point_is_invalid(monkeypatch):
    def broken(*args):
        raise RipSenseError("planted")

    monkeypatch.setattr(bench, "run_trial", broken)
    r = bench.run_curve(small(trials=3))
    assert all(not p.valid and p.errors == 3 for p in r.points)
    assert all(math.isnan(p.probability_ours) for p in r.points)


# -- output ------------------------------------------------------------------------------------

def test_csv_layout():
    lines = bench.run_curve(small()).to_csv().splitlines()
    assert lines[0] == "method,k,m,cs_ratio,trials,successes,probability,errors,skipped"
    assert len(lines) == 1 + 2 * 3
    fields = lines[1].split(",")
    assert fields[0] == "ours" and lines[2].startswith("benchmark,")
    assert len(fields[3].split(".")[1]) == 6 and len(fields[6].split(".")[1]) == 6


def test_svg_per_k(tmp_path):
    r = bench.run_curve(small(k_list=(2, 3)))
    paths = bench.write_svgs(r, tmp_path / "curve.svg")
    assert [p.name for p in paths] == ["curve_k2.svg", "curve_k3.svg"]
    root = ET.parse(paths[0]).getroot()
    lines = root.findall("{http://www.w3.org/2000/svg}polyline")
    assert {e.get("stroke") for e in lines} == {"red", "blue"}
    assert all(len(e.get("points").split()) == 3 for e in lines)


def test_monotonicity_flags():
    r = bench.CurveResult(small())
    r.points = [bench.PointResult(2, 4, 0.1, 200, 0, 190), bench.PointResult(2, 8, 0.2, 200, 0, 100)]
    assert bench.monotonicity_flags(r) == [(2, 4, 8)]
    r.points[1].successes_benchmark = 185
    assert bench.monotonicity_flags(r) == []


# -- probes -------------------------------------------------------------------------------------

def test_rip_probe_identity():
    res = bench.rip_probe(np.eye(30), 4, 50, 1)
    assert res.delta_hat <= 1e-15 and res.ratio_mean == pytest.approx(1.0)


def test_rip_probe_gaussian_rows():
    a = bench.random_matrix(EnsembleSpec("gaussian", 128, 1024, 3))
    phi = apply_selector(row_selector(96, 128, 4), a)
    res = bench.rip_probe(phi, 10, 2000, 5)
    assert 0.9 <= res.ratio_mean <= 1.1
    assert res.delta_hat > 0


def test_rip_probe_two_paths_agree():
    d = parseval_frame(32, 96, 1)
    a = bench.random_matrix(EnsembleSpec("gaussian", 32, 96, 2))
    f = factor_spectral(d, a)
    e = row_selector(20, 32, 3)
    one = bench.rip_probe(apply_selector(e, f.g_inv) @ d, 5, 300, 7)
    two = bench.rip_probe(apply_selector(e, a @ f.h), 5, 300, 7)
    assert abs(one.delta_hat - two.delta_hat) <= 1e-8


def test_concentration_orthonormal_exact():
    q = random_orthonormal(40, 1)
    s = bench.concentration_probe_matrix(q, 40, 100, 2)
    assert abs(s.mean - 1) <= 1e-12 and s.max_dev <= 1e-12


@pytest.mark.parametrize("kind", ["gaussian", "bernoulli"])
def test_concentration_paper_shape(kind):
    s = bench.concentration_probe(EnsembleSpec(kind, 128, 1024, 8), 64, 5000, 9)
    assert 0.97 <= s.mean <= 1.03


def test_concentration_precondition():
    with pytest.raises(ParameterError):
        bench.concentration_probe(EnsembleSpec("gaussian", 8, 16, 0), 9, 10, 0)
