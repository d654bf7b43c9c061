"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical or validation error,
3 I/O or file-format error. The fully resolved configuration is logged to
standard error on every run. Settings resolve as flags > ``--config`` file
(flat ``key=value`` lines) > preset > built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, dictionary, matio
from .cosamp import RecoveryProblem, cosamp
from .ensembles import Ensemble, EnsembleSpec, random_matrix, row_selector, apply_selector
from .errors import FormatError, RipSenseError
from .factorize import factorize, invert_g, validate

log = logging.getLogger("ripsense")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- helpers ---------------------------------------------------------------------

def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _fresh_seed() -> int:
    return int.from_bytes(os.urandom(8), "little") >> 1


def _load(path) -> np.ndarray:
    if path == "-":
        data = sys.stdin.buffer.read()
        return matio.parse_csv(data.decode("ascii")) if not data.startswith(matio.MAGIC) else matio.decode_matrix(data)
    return matio.load(path)


def _save(path, m) -> None:
    if path == "-":
        sys.stdout.buffer.write(matio.encode_matrix(m))
        sys.stdout.flush()
    else:
        matio.save(path, m)


def _write_text(path, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        matio.atomic_write_bytes(path, text.encode("utf-8"))


def _vector(m: np.ndarray) -> np.ndarray:
    if 1 not in m.shape:
        raise UsageError(f"expected a single row or column, got shape {m.shape}")
    return m.ravel()


# -- subcommands -----------------------------------------------------------------

def cmd_gen(opts):
    if opts.kind == "selector":
        e = row_selector(opts.rows, opts.cols, opts.seed)
        _save(opts.out, np.array([e.indices], dtype=np.float64))
        return
    if opts.kind == "parseval":
        m = dictionary.parseval_frame(opts.rows, opts.cols, opts.seed)
    else:
        m = random_matrix(EnsembleSpec(Ensemble(opts.kind), opts.rows, opts.cols, opts.seed))
    _save(opts.out, m)


def cmd_dict(opts):
    if opts.input:
        d = _load(opts.input)
    elif opts.kind == "wavelet":
        d = dictionary.wavelet_dictionary(dictionary.WaveletSpec(opts.rows, opts.cols, opts.levels, opts.seed))
    else:
        d = dictionary.parseval_frame(opts.rows, opts.cols, opts.seed)
    if opts.tighten:
        d = dictionary.canonical_tight_frame(d)
    diag = dictionary.frame_diagnostics(d)
    log.info("frame diagnostics: tight_frame_err=%.3e column_norm_max_dev=%.3e rank=%d",
             diag.tight_frame_err, diag.column_norm_max_dev, diag.rank)
    if opts.out:
        _save(opts.out, d)


REPORT_HEADER = "method,rank,scale,residual_rel,h_orthonormality_err,g_condition_number,rank_d,rank_a"


def cmd_factorize(opts):
    d, a = _load(opts.dict), _load(opts.a)
    f = factorize(d, a, opts.method, tol=opts.tol, seed=opts.completion_seed)
    rep = validate(f, d)
    log.info("residual_rel=%.3e h_orthonormality_err=%.3e g_condition_number=%.3f",
             rep.residual_rel, rep.h_orthonormality_err, rep.g_condition_number)
    if opts.out_g:
        _save(opts.out_g, f.g)
    if opts.out_h:
        _save(opts.out_h, f.h)
    if opts.report:
        row = (f"{f.method.value},{f.rank},{f.scale:.17g},{rep.residual_rel:.6e},{rep.h_orthonormality_err:.6e},"
               f"{rep.g_condition_number:.6e},{rep.rank_d},{rep.rank_a}")
        _write_text(opts.report, REPORT_HEADER + "\n" + row + "\n")
    if not rep.ok():
        raise RipSenseError(f"factorization failed validation: residual {rep.residual_rel:.3e}, "
                            f"orthonormality {rep.h_orthonormality_err:.3e}")


def cmd_sense(opts):
    g = _load(opts.g)
    l = g.shape[0]
    e = row_selector(opts.m, l, opts.seed)
    s = apply_selector(e, invert_g(g, opts.tol))
    if opts.dict and opts.a and opts.h:
        d, a, h = _load(opts.dict), _load(opts.a), _load(opts.h)
        dev = np.linalg.norm(s @ d - apply_selector(e, a @ h)) / np.linalg.norm(d)
        log.info("||S D - E A H||_F / ||D||_F = %.3e", dev)
        if dev > bench.COROLLARY_TOL:
            raise RipSenseError(f"S D differs from E A H by {dev:.3e}")
    if opts.indices_out:
        _save(opts.indices_out, np.array([e.indices], dtype=np.float64))
    _save(opts.out, s)


def cmd_recover(opts):
    if opts.phi:
        phi = _load(opts.phi)
    elif opts.s and opts.dict:
        phi = _load(opts.s) @ _load(opts.dict)
    else:
        raise UsageError("recover needs --phi, or --s together with --dict")
    z = _vector(_load(opts.z))
    res = cosamp(RecoveryProblem(phi, z, opts.k, opts.max_iter, opts.halt_tol, relaxed=opts.relaxed))
    log.info("iterations=%d final_residual=%.3e converged=%s min_norm=%s",
             res.iterations, res.final_residual, res.converged, res.min_norm)
    _save(opts.out, res.x_hat[:, None])


def _parse_list(value, cast):
    if value is None or isinstance(value, (list, tuple)):
        return value
    return tuple(cast(v) for v in str(value).replace(";", ",").split(",") if v.strip())


def experiment_config(opts) -> bench.ExperimentConfig:
    fields = dict(
        dict_source=opts.dict or opts.dict_source,
        ensemble=opts.ensemble,
        method=opts.method,
        l=opts.rows,
        n=opts.cols,
        levels=opts.levels,
        k_list=_parse_list(opts.k, int),
        cs_ratios=_parse_list(opts.ratios, float),
        grid_points=opts.grid_points,
        trials=opts.trials,
        base_seed=opts.seed,
        max_iter=opts.max_iter,
        halt_tol=opts.halt_tol,
        redraw_a=opts.redraw_a,
    )
    fields = {k: v for k, v in fields.items() if v is not None}
    if opts.preset:
        return bench.preset(opts.preset, **fields)
    return bench.ExperimentConfig(**fields)


def cmd_experiment(opts):
    config = experiment_config(opts)
    log.info("experiment config: %s", json.dumps(bench.config_dict(config), sort_keys=True))
    result = bench.run_curve(config, jobs=opts.jobs)
    for note in result.notes:
        log.info("%s", note)
    log.info("wall time %.1f s, max |ours - benchmark| = %.3f, corollary check %.2e",
             result.wall_time, result.max_gap(), result.corollary_max_dev)
    for k, lo, hi in bench.monotonicity_flags(result):
        log.warning("benchmark curve for k=%d drops between m=%d and m=%d beyond the 99%% band", k, lo, hi)
    _write_text(opts.out, result.to_csv())
    if opts.svg:
        for path in bench.write_svgs(result, opts.svg):
            log.info("wrote %s", path)


def cmd_probe(opts):
    if opts.kind == "rip":
        if not opts.phi:
            raise UsageError("probe --kind rip needs --phi")
        r = bench.rip_probe(_load(opts.phi), opts.k, opts.samples, opts.seed)
        text = f"k,samples,delta_hat,ratio_mean\n{r.k},{r.samples},{r.delta_hat:.6f},{r.ratio_mean:.6f}\n"
    else:
        spec = EnsembleSpec(Ensemble(opts.ensemble), opts.rows, opts.cols, opts.seed)
        r = bench.concentration_probe(spec, opts.m, opts.samples, opts.seed)
        text = f"num_vectors,mean,max_dev\n{r.num_vectors},{r.mean:.6f},{r.max_dev:.6f}\n"
    _write_text(opts.out, text)


# -- parser ----------------------------------------------------------------------

# Built-in defaults; None-valued parser defaults mean "not given on the command line".
DEFAULTS = {
    "gen": dict(kind="gaussian", rows=128, cols=1024, seed=None),
    "dict": dict(kind="wavelet", rows=128, cols=1024, levels=5, seed=None, tighten=False),
    "factorize": dict(method="spectral", tol=None, completion_seed=None),
    "sense": dict(seed=None, tol=None),
    "recover": dict(max_iter=50, halt_tol=1e-6, relaxed=False),
    "experiment": dict(jobs=os.cpu_count() or 1, out="-"),
    "probe": dict(kind="rip", k=10, samples=2000, seed=None, ensemble="gaussian", rows=128, cols=1024, m=64, out="-"),
}
INT_KEYS = {"rows", "cols", "levels", "seed", "completion_seed", "m", "k", "max_iter", "samples", "trials", "grid_points", "jobs"}
FLOAT_KEYS = {"tol", "halt_tol"}
BOOL_KEYS = {"tighten", "relaxed", "redraw_a"}
SEEDED = {"gen", "dict", "sense", "probe", "experiment"}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ripsense", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, argument_default=None)
        sp.add_argument("--config", help="flat key=value file")
        return sp

    sp = add("gen", "generate a random matrix, Parseval frame or row selector")
    sp.add_argument("--kind", choices=["gaussian", "bernoulli", "parseval", "selector"])
    sp.add_argument("--rows", type=int)
    sp.add_argument("--cols", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)

    sp = add("dict", "build, import or diagnose a dictionary")
    sp.add_argument("--kind", choices=["wavelet", "parseval"])
    sp.add_argument("--input", help="import an existing dictionary (CSV or CSMX)")
    sp.add_argument("--rows", type=int)
    sp.add_argument("--cols", type=int)
    sp.add_argument("--levels", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tighten", action="store_true", default=None, help="replace by the canonical Parseval frame")
    sp.add_argument("--out")

    sp = add("factorize", "factor D = G A H")
    sp.add_argument("--dict", required=True)
    sp.add_argument("--a", required=True)
    sp.add_argument("--method", choices=["spectral", "tight_frame", "gram_schmidt"])
    sp.add_argument("--tol", type=float)
    sp.add_argument("--completion-seed", type=int)
    sp.add_argument("--out-g")
    sp.add_argument("--out-h")
    sp.add_argument("--report")

    sp = add("sense", "derive the sensing matrix S = E G^-1")
    sp.add_argument("--g", required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--dict", help="with --a and --h: verify S D = E A H")
    sp.add_argument("--a")
    sp.add_argument("--h")
    sp.add_argument("--indices-out")
    sp.add_argument("--out", required=True)

    sp = add("recover", "recover a sparse vector with CoSaMP")
    sp.add_argument("--phi")
    sp.add_argument("--s")
    sp.add_argument("--dict")
    sp.add_argument("--z", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--halt-tol", type=float)
    sp.add_argument("--relaxed", action="store_true", default=None)
    sp.add_argument("--out", required=True)

    sp = add("experiment", "recovery probability against CS ratio")
    sp.add_argument("--preset", help="<desk|paper>-<wavelet|ksvd|pksvd|parseval>-<gaussian|bernoulli>")
    sp.add_argument("--dict", help="dictionary file (CSMX or CSV)")
    sp.add_argument("--dict-source", choices=["wavelet", "parseval"])
    sp.add_argument("--ensemble", choices=["gaussian", "bernoulli"])
    sp.add_argument("--method", choices=["spectral", "tight_frame", "gram_schmidt"])
    sp.add_argument("--rows", type=int, help="signal length l")
    sp.add_argument("--cols", type=int, help="dictionary columns n")
    sp.add_argument("--levels", type=int)
    sp.add_argument("--k", help="comma-separated sparsity levels")
    sp.add_argument("--ratios", help="comma-separated CS ratios m/n")
    sp.add_argument("--grid-points", type=int)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--halt-tol", type=float)
    sp.add_argument("--redraw-a", action="store_true", default=None)
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--out")
    sp.add_argument("--svg", help="write <stem>_k<k>.svg per sparsity level")

    sp = add("probe", "empirical RIP or concentration probe")
    sp.add_argument("--kind", choices=["rip", "concentration"])
    sp.add_argument("--phi")
    sp.add_argument("--k", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--ensemble", choices=["gaussian", "bernoulli"])
    sp.add_argument("--rows", type=int)
    sp.add_argument("--cols", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--out")
    return p


def _coerce(key, value):
    if not isinstance(value, str):
        return value
    if key in INT_KEYS:
        return int(value)
    if key in FLOAT_KEYS:
        return float(value)
    if key in BOOL_KEYS:
        return value.lower() in ("1", "true", "yes", "on")
    return value


def resolve(opts) -> argparse.Namespace:
    """Fill unset options from the config file, then the built-in defaults."""
    from_file = read_config_file(opts.config) if opts.config else {}
    values = vars(opts)
    for key in list(values):
        if values[key] is None and key in from_file:
            values[key] = _coerce(key, from_file[key])
    for key, default in DEFAULTS.get(opts.command, {}).items():
        if values.get(key) is None:
            values[key] = default
    # presets pin their own base seed
    preset_seeded = opts.command == "experiment" and opts.preset
    if opts.command in SEEDED and values.get("seed") is None and not preset_seeded:
        values["seed"] = _fresh_seed()
        print(f"seed={values['seed']}", file=sys.stderr)
    return opts


COMMANDS = {
    "gen": cmd_gen,
    "dict": cmd_dict,
    "factorize": cmd_factorize,
    "sense": cmd_sense,
    "recover": cmd_recover,
    "experiment": cmd_experiment,
    "probe": cmd_probe,
}


def dispatch(argv=None) -> int:
    try:
        opts = build_parser().parse_args(argv)
        opts = resolve(opts)
        shown = {k: v for k, v in sorted(vars(opts).items())}
        log.info("resolved configuration: %s", json.dumps(shown, default=str, sort_keys=True))
        COMMANDS[opts.command](opts)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RipSenseError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
