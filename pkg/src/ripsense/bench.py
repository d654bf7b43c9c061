"""Monte-Carlo recovery curves and empirical isometry probes.

For every sparsity ``k`` and CS ratio ``m / n`` a curve point runs
independent trials. Each trial draws a sparse vector ``x`` and a row
selector ``E`` and solves two problems with CoSaMP on the same ``x`` and
``E``:

* ours: operator ``E G^{-1} D``, measurements ``z = E G^{-1} D x``
* benchmark: operator ``E A``, measurements ``z = E A x``

``A`` and the factorization are fixed for the whole curve unless
``redraw_a`` is set.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import dictionary, matio
from .cosamp import RecoveryProblem, cosamp, recovery_success
from .ensembles import (
    Ensemble,
    EnsembleSpec,
    apply_selector,
    derive_seed,
    random_matrix,
    random_unit_vectors,
    row_selector,
    sparse_vector,
)
from .errors import ParameterError, RipSenseError
from .factorize import Factorization, Method, factorize

log = logging.getLogger(__name__)

COROLLARY_TOL = 1e-8
SPOT_CHECK_EVERY = 100


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a recovery-curve experiment.

    ``dict_source`` is ``"wavelet"``, ``"parseval"`` (random Parseval frame)
    or a path to a CSMX/CSV dictionary. ``cs_ratios=None`` selects, per
    ``k``, ``grid_points`` evenly spaced ratios from ``(k + 2) / n`` to
    ``l / n``.
    """

    dict_source: str = "wavelet"
    ensemble: Ensemble = Ensemble.GAUSSIAN
    method: Method = Method.SPECTRAL
    l: int = 64
    n: int = 256
    levels: int = 3
    k_list: tuple = (4, 6, 8)
    cs_ratios: tuple | None = None
    grid_points: int = 10
    trials: int = 200
    base_seed: int = 0
    max_iter: int = 50
    halt_tol: float = 1e-6
    redraw_a: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ensemble", Ensemble(self.ensemble))
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "k_list", tuple(int(k) for k in self.k_list))
        if self.cs_ratios is not None:
            object.__setattr__(self, "cs_ratios", tuple(float(r) for r in self.cs_ratios))
        if not 1 <= self.l <= self.n:
            raise ParameterError(f"need 1 <= l <= n, got l={self.l}, n={self.n}")
        if self.trials < 1 or self.grid_points < 1:
            raise ParameterError("trials and grid_points must be positive")
        if not self.k_list or min(self.k_list) < 1:
            raise ParameterError("k_list must hold positive sparsity levels")
        for r in self.cs_ratios or ():
            if not 0 < r <= self.l / self.n + 1e-12:
                raise ParameterError(f"CS ratio {r} outside (0, l/n]")

    def ratios_for(self, k: int) -> list[float]:
        if self.cs_ratios is not None:
            return list(self.cs_ratios)
        lo, hi = (k + 2) / self.n, self.l / self.n
        if self.grid_points == 1 or lo >= hi:
            return [hi]
        return [float(r) for r in np.linspace(lo, hi, self.grid_points)]


PRESETS = {
    "desk": dict(l=64, n=256, levels=3, k_list=(4, 6, 8), trials=200, base_seed=0),
    "paper": dict(l=128, n=1024, levels=5, k_list=(10, 12, 14), trials=2000, base_seed=0),
}
DICTIONARIES = ("wavelet", "ksvd", "pksvd", "parseval")


def preset(name: str, **overrides) -> ExperimentConfig:
    """Config for ``"<scale>-<dictionary>-<ensemble>"``, e.g. ``paper-wavelet-gaussian``.

    ``ksvd`` and ``pksvd`` presets need ``dict_source`` pointing at a file.
    """
    try:
        scale, dname, ens = name.split("-")
        base = dict(PRESETS[scale])
    except (ValueError, KeyError):
        raise ParameterError(f"unknown preset {name!r}") from None
    if dname not in DICTIONARIES:
        raise ParameterError(f"unknown dictionary in preset {name!r}")
    base["ensemble"] = Ensemble(ens)
    if dname in ("ksvd", "pksvd"):
        if "dict_source" not in overrides:
            raise ParameterError(f"preset {name!r} needs a dictionary file")
        if dname == "pksvd":
            base["method"] = Method.TIGHT_FRAME
    else:
        base["dict_source"] = dname
    base.update(overrides)
    return ExperimentConfig(**base)


# -- results -------------------------------------------------------------------

@dataclass
class PointResult:
    k: int
    m: int
    cs_ratio: float
    trials_run: int = 0
    successes_ours: int = 0
    successes_benchmark: int = 0
    errors: int = 0
    skipped: int = 0

    @property
    def valid(self) -> bool:
        return self.trials_run > 0

    @property
    def probability_ours(self) -> float:
        return self.successes_ours / self.trials_run if self.trials_run else float("nan")

    @property
    def probability_benchmark(self) -> float:
        return self.successes_benchmark / self.trials_run if self.trials_run else float("nan")


@dataclass
class CurveResult:
    config: ExperimentConfig
    points: list = field(default_factory=list)
    wall_time: float = 0.0
    corollary_max_dev: float = 0.0
    notes: list = field(default_factory=list)

    def point(self, k: int, m: int) -> PointResult:
        return next(p for p in self.points if p.k == k and p.m == m)

    def max_gap(self) -> float:
        """Largest ``|p_ours - p_benchmark|`` over valid points."""
        gaps = [abs(p.probability_ours - p.probability_benchmark) for p in self.points if p.valid]
        return max(gaps, default=0.0)

    def to_csv(self) -> str:
        lines = ["method,k,m,cs_ratio,trials,successes,probability,errors,skipped"]
        for p in self.points:
            for method, succ, prob in (
                ("ours", p.successes_ours, p.probability_ours),
                ("benchmark", p.successes_benchmark, p.probability_benchmark),
            ):
                prob_s = "nan" if math.isnan(prob) else f"{prob:.6f}"
                lines.append(f"{method},{p.k},{p.m},{p.cs_ratio:.6f},{p.trials_run},{succ},{prob_s},{p.errors},{p.skipped}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        matio.atomic_write_bytes(path, self.to_csv().encode("ascii"))


# -- setup -----------------------------------------------------------------------

def load_dictionary(config: ExperimentConfig) -> np.ndarray:
    src = config.dict_source
    if src == "wavelet":
        spec = dictionary.WaveletSpec(config.l, config.n, config.levels, derive_seed(config.base_seed, 0, "dictionary"))
        return dictionary.wavelet_dictionary(spec)
    if src == "parseval":
        return dictionary.parseval_frame(config.l, config.n, derive_seed(config.base_seed, 0, "dictionary"))
    d = matio.load(src)
    if d.shape != (config.l, config.n):
        raise ParameterError(f"dictionary {src} has shape {d.shape}, config expects {(config.l, config.n)}")
    return d


@dataclass
class CurveSetup:
    config: ExperimentConfig
    d: np.ndarray
    a: np.ndarray
    factorization: Factorization
    sensed_dictionary: np.ndarray  # G^{-1} D
    ah: np.ndarray
    notes: list = field(default_factory=list)


def _draw_a(config: ExperimentConfig, index: int = 0) -> np.ndarray:
    seed = derive_seed(config.base_seed, index, "A")
    return random_matrix(EnsembleSpec(config.ensemble, config.l, config.n, seed))


def build_setup(config: ExperimentConfig, d: np.ndarray | None = None, a_index: int = 0) -> CurveSetup:
    notes = []
    if d is None:
        d = load_dictionary(config)
    if config.method is Method.TIGHT_FRAME and dictionary.frame_diagnostics(d).tight_frame_err > 1e-6:
        d = dictionary.canonical_tight_frame(d)
        notes.append("dictionary replaced by its canonical Parseval frame for the tight_frame construction")
    a = _draw_a(config, a_index)
    f = factorize(d, a, config.method)
    return CurveSetup(config, d, a, f, f.g_inv @ d, a @ f.h, notes)


# -- trials ----------------------------------------------------------------------

def trial_seed(config: ExperimentConfig, k: int, m: int, trial_index: int) -> int:
    return derive_seed(config.base_seed, trial_index, f"trial:k={k}:m={m}")


def _solve(phi: np.ndarray, z: np.ndarray, k: int, config: ExperimentConfig) -> np.ndarray:
    p = RecoveryProblem(phi, z, k, max_iter=config.max_iter, halt_tol=config.halt_tol, relaxed=True)
    return cosamp(p).x_hat


def run_trial(setup: CurveSetup, k: int, m: int, trial_index: int):
    """One paired trial; returns ``(success_ours, success_benchmark, corollary_dev)``.

    ``corollary_dev`` is the relative gap between ``E G^{-1} D`` and ``E A H``
    on spot-checked trials and ``None`` otherwise.
    """
    config = setup.config
    if not 1 <= k <= m <= config.l:
        raise ParameterError(f"trial needs k <= m <= l, got k={k}, m={m}, l={config.l}")
    if config.redraw_a:
        setup = build_setup(config, setup.d, a_index=trial_index + 1)
    seed = trial_seed(config, k, m, trial_index)
    x = sparse_vector(config.n, k, derive_seed(seed, 0, "x")).dense()
    e = row_selector(m, config.l, derive_seed(seed, 0, "E"))

    phi_ours = apply_selector(e, setup.sensed_dictionary)
    phi_bench = apply_selector(e, setup.a)
    ok_ours = recovery_success(_solve(phi_ours, phi_ours @ x, k, config), x)
    ok_bench = recovery_success(_solve(phi_bench, phi_bench @ x, k, config), x)

    dev = None
    if trial_index % SPOT_CHECK_EVERY == 0:
        dev = float(np.linalg.norm(phi_ours - apply_selector(e, setup.ah)) / np.linalg.norm(setup.d))
    return ok_ours, ok_bench, dev


def _run_chunk(setup: CurveSetup, k: int, m: int, trials: range):
    out = []
    for t in trials:
        try:
            out.append(run_trial(setup, k, m, t))
        except (RipSenseError, np.linalg.LinAlgError) as exc:
            log.debug("trial %d at k=%d m=%d failed: %s", t, k, m, exc)
            out.append(None)
    return out


_WORKER_SETUP = None


def _init_worker(setup):
    global _WORKER_SETUP
    _WORKER_SETUP = setup


def _run_chunk_in_worker(k, m, start, stop):
    return _run_chunk(_WORKER_SETUP, k, m, range(start, stop))


def run_curve(config: ExperimentConfig, jobs: int = 1, setup: CurveSetup | None = None) -> CurveResult:
    """Run every ``(k, ratio)`` point; output depends only on ``config``."""
    t0 = time.perf_counter()
    setup = setup or build_setup(config)
    result = CurveResult(config, notes=list(setup.notes))

    tasks = []
    for k in config.k_list:
        for ratio in config.ratios_for(k):
            m = int(round(ratio * config.n))
            point = PointResult(k, m, ratio)
            result.points.append(point)
            if not (1 <= m <= config.l and k <= m):
                point.skipped = config.trials
                log.info("skipping k=%d m=%d (ratio %.4f): needs k <= m <= l", k, m, ratio)
                continue
            tasks.append(point)

    chunk = max(1, min(50, config.trials))
    spans = [(lo, min(lo + chunk, config.trials)) for lo in range(0, config.trials, chunk)]
    if jobs > 1 and tasks:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(setup,)) as pool:
            futures = [[pool.submit(_run_chunk_in_worker, p.k, p.m, lo, hi) for lo, hi in spans] for p in tasks]
            outcomes = [[o for fut in futs for o in fut.result()] for futs in futures]
    else:
        outcomes = [[o for lo, hi in spans for o in _run_chunk(setup, p.k, p.m, range(lo, hi))] for p in tasks]

    for point, trials in zip(tasks, outcomes):
        for outcome in trials:
            if outcome is None:
                point.errors += 1
                continue
            ok_ours, ok_bench, dev = outcome
            point.trials_run += 1
            point.successes_ours += int(ok_ours)
            point.successes_benchmark += int(ok_bench)
            if dev is not None:
                result.corollary_max_dev = max(result.corollary_max_dev, dev)
        if not point.valid:
            log.warning("point k=%d m=%d invalid: all %d trials errored", point.k, point.m, point.errors)
    if result.corollary_max_dev > COROLLARY_TOL:
        log.warning("E G^-1 D differs from E A H by %.3e (relative)", result.corollary_max_dev)
    result.wall_time = time.perf_counter() - t0
    return result


def monotonicity_flags(result: CurveResult, z: float = 2.576) -> list[tuple[int, int, int]]:
    """Benchmark-curve inversions larger than the two-sided 99% binomial band.

    Returns ``(k, m_lower, m_upper)`` for each flagged adjacent pair.
    """
    flags = []
    for k in result.config.k_list:
        pts = sorted((p for p in result.points if p.k == k and p.valid), key=lambda p: p.m)
        for lo, hi in zip(pts, pts[1:]):
            p1, p2 = lo.probability_benchmark, hi.probability_benchmark
            se = math.sqrt(p1 * (1 - p1) / lo.trials_run + p2 * (1 - p2) / hi.trials_run)
            if p1 - p2 > z * max(se, 1e-12):
                flags.append((k, lo.m, hi.m))
    return flags


# -- plotting ----------------------------------------------------------------------

def curve_svg(result: CurveResult, k: int, width: int = 480, height: int = 320) -> str:
    """Static SVG of recovery probability against CS ratio for one ``k``."""
    pts = [p for p in result.points if p.k == k and p.valid]
    pad = 40
    xmax = result.config.l / result.config.n

    def xy(ratio, prob):
        return pad + (width - 2 * pad) * ratio / xmax, height - pad - (height - 2 * pad) * prob

    def polyline(attr, colour):
        coords = " ".join("%.2f,%.2f" % xy(p.cs_ratio, getattr(p, attr)) for p in pts)
        return f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{coords}"/>'

    x0, y0 = xy(0, 0)
    x1, y1 = xy(xmax, 1)
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" height="{y0 - y1:.2f}" fill="none" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" font-size="12">CS ratio m/n (k = {k})</text>',
        f'<text x="12" y="{height / 2:.0f}" font-size="12" transform="rotate(-90 12 {height / 2:.0f})" text-anchor="middle">P(recovery)</text>',
        f'<text x="{x0 - 4:.2f}" y="{y0:.2f}" font-size="10" text-anchor="end">0</text>',
        f'<text x="{x0 - 4:.2f}" y="{y1 + 8:.2f}" font-size="10" text-anchor="end">1</text>',
        f'<text x="{x1:.2f}" y="{y0 + 14:.2f}" font-size="10" text-anchor="middle">{xmax:.3f}</text>',
        polyline("probability_benchmark", "red"),
        polyline("probability_ours", "blue"),
        f'<text x="{x0 + 8:.2f}" y="{y1 + 14:.2f}" font-size="10" fill="blue">ours</text>',
        f'<text x="{x0 + 8:.2f}" y="{y1 + 26:.2f}" font-size="10" fill="red">benchmark</text>',
        "</svg>",
        "",
    ])


def write_svgs(result: CurveResult, path) -> list[Path]:
    """Write one SVG per sparsity level as ``<stem>_k<k><suffix>``."""
    path = Path(path)
    out = []
    for k in result.config.k_list:
        target = path.with_name(f"{path.stem}_k{k}{path.suffix or '.svg'}")
        matio.atomic_write_bytes(target, curve_svg(result, k).encode("utf-8"))
        out.append(target)
    return out


# -- probes ----------------------------------------------------------------------

@dataclass(frozen=True)
class RipProbeResult:
    k: int
    samples: int
    delta_hat: float
    ratio_mean: float


def rip_probe(phi, k: int, samples: int, seed: int, rescale: bool = True) -> RipProbeResult:
    """Empirical lower bound on the restricted isometry constant of ``phi``.

    ``phi`` (``m x n``) is scaled by ``sqrt(n / m)`` so that ensembles with
    variance ``1 / n`` become isometries on average, then applied to
    ``samples`` seeded ``k``-sparse unit vectors. Not a certificate.
    """
    phi = np.asarray(phi, dtype=np.float64)
    m, n = phi.shape
    if not 1 <= k <= n or samples < 1:
        raise ParameterError(f"need 1 <= k <= n and samples >= 1, got k={k}, samples={samples}")
    if rescale:
        phi = phi * np.sqrt(n / m)
    ratios = np.empty(samples)
    for i in range(samples):
        sv = sparse_vector(n, k, derive_seed(seed, i, "rip"))
        vals = sv.values / np.linalg.norm(sv.values)
        ratios[i] = float(np.sum((phi[:, sv.support] @ vals) ** 2))
    return RipProbeResult(k, samples, float(np.max(np.abs(ratios - 1.0))), float(np.mean(ratios)))


@dataclass(frozen=True)
class ConcentrationSummary:
    mean: float
    max_dev: float
    num_vectors: int


def concentration_probe_matrix(a, m: int, num_vectors: int, seed: int) -> ConcentrationSummary:
    """Statistics of ``||E A x||^2 * n / m`` over seeded unit vectors ``x``."""
    a = np.asarray(a, dtype=np.float64)
    l, n = a.shape
    if not 1 <= m <= l:
        raise ParameterError(f"need 1 <= m <= {l}, got {m}")
    ea = apply_selector(row_selector(m, l, derive_seed(seed, 0, "E")), a)
    x = random_unit_vectors(n, num_vectors, derive_seed(seed, 0, "x"))
    ratios = np.sum((x @ ea.T) ** 2, axis=1) * (n / m)
    return ConcentrationSummary(float(np.mean(ratios)), float(np.max(np.abs(ratios - 1.0))), num_vectors)


def concentration_probe(ensemble: EnsembleSpec, m: int, num_vectors: int, seed: int) -> ConcentrationSummary:
    return concentration_probe_matrix(random_matrix(ensemble), m, num_vectors, seed)


def config_dict(config: ExperimentConfig) -> dict:
    out = asdict(config)
    out["ensemble"] = config.ensemble.value
    out["method"] = config.method.value
    return out
