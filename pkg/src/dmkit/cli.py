"""Command-line entry point: ``dmkit dm ...`` and ``dmkit pulse ...``.

Every command that writes ``--out PATH`` also writes ``PATH`` with its
suffix replaced by ``.manifest.json``, recording the command, parameters,
seed, artifacts and package version. Outputs contain no timestamps, so the
same argv reproduces byte-identical files. Without ``--out`` the result is
printed to stdout and no manifest is written.

Validation problems exit with status 2 and a single ``error: ...`` line on
stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiment import PHASES, PipelineConfig, interferometer_phase, run_pipeline
from .peakfit import FitError, fit_multipeak, grid_init
from .physicality import STRATEGIES, project_physical
from .protocols import CHI_FLATTENING, VARIANTS, dm_povm_full, dm_process_full, dm_state_full
from .pulselab import (
    AmziConfig,
    amzi,
    detect,
    read_waveform_csv,
    state_from_json,
    synth_pulse_train,
)
from .qmodel import (
    DensityOperator,
    PovmElement,
    channel_from_json,
    matrix_from_json,
    matrix_to_json,
)
from .sampler import ShotPlan, make_rng, variance_sweep

__all__ = ["main", "build_parser"]

SWEEP_COLUMNS = ("A", "k", "n", "predicted", "empirical", "n_seeds")


class CliError(Exception):
    """Validation failure reported as ``error: ...`` with exit status 2."""


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.json")


def _emit(args, text, extra_artifacts=(), parameters=None):
    """Write ``text`` to ``--out`` (plus manifest) or to stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    skip = {"func", "out", "group", "command", "command_path"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    if parameters:
        params.update(parameters)
    manifest = {
        "command": args.command_path,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "artifacts": [str(out)] + [str(p) for p in extra_artifacts],
        "version": __version__,
    }
    _manifest_path(out).write_text(_dump(manifest))


def _estimate_json(est, seed):
    return {
        "kind": est.kind,
        "variant": est.variant,
        "dim": est.dim,
        "matrix": matrix_to_json(est.matrix),
        "stderr_re": est.stderr_re.tolist(),
        "stderr_im": est.stderr_im.tolist(),
        "shots_per_element": est.shots_per_element,
        "seed": seed if est.shots_per_element else None,
        **({"flattening": CHI_FLATTENING} if est.kind == "process" else {}),
    }


def _plan(args):
    if args.exact and args.shots is not None:
        raise CliError("--exact and --shots are mutually exclusive")
    if args.shots is None:
        return None
    if args.shots < 2:
        raise CliError("--shots must be at least 2 (split between real and imaginary readouts)")
    return ShotPlan(args.shots, args.seed)


def cmd_dm_state(args):
    rho = DensityOperator(matrix_from_json(_load_json(args.input)))
    est = dm_state_full(rho, args.variant, _plan(args))
    _emit(args, _dump(_estimate_json(est, args.seed)))


def cmd_dm_povm(args):
    e = PovmElement(matrix_from_json(_load_json(args.input)))
    est = dm_povm_full(e, args.variant, _plan(args))
    _emit(args, _dump(_estimate_json(est, args.seed)))


def cmd_dm_process(args):
    ch = channel_from_json(_load_json(args.input))
    est = dm_process_full(ch, args.variant, _plan(args))
    _emit(args, _dump(_estimate_json(est, args.seed)))


def cmd_dm_variance_sweep(args):
    if args.n < 1 or args.n_seeds < 2:
        raise CliError("need --n >= 1 and --n-seeds >= 2")
    if any(k <= 0 for k in args.k):
        raise CliError("every k must be positive")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, extrasaction="ignore",
                            lineterminator="\n")
    writer.writeheader()
    for row in variance_sweep(args.A, args.k, args.n, args.n_seeds, args.seed):
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    _emit(args, buf.getvalue())


def cmd_dm_project(args):
    raw = matrix_from_json(_load_json(args.input))
    report = project_physical(raw, args.strategy)
    body = _dump(matrix_to_json(report.output))
    rep = {
        "strategy": report.strategy,
        "normalization": report.normalization,
        "clipped_eigenvalues": [{"original": [z.real, z.imag], "clipped": c}
                                for z, c in report.clipped_eigenvalues],
    }
    if args.out is None:
        sys.stdout.write(_dump({"matrix": json.loads(body), "report": rep}))
        return
    rep_path = Path(args.out).with_name(Path(args.out).stem + ".report.json")
    rep_path.parent.mkdir(parents=True, exist_ok=True)
    rep_path.write_text(_dump(rep))
    _emit(args, body, extra_artifacts=[rep_path])


def _state(args):
    try:
        return state_from_json(_load_json(args.state))
    except ValueError as exc:
        raise CliError(f"{args.state}: {exc}") from None


def cmd_pulse_simulate(args):
    state = _state(args)
    if args.noise < 0:
        raise CliError("--noise must be non-negative")
    field = synth_pulse_train(state, args.dt)
    shift = 0
    if args.delay:
        shift = round(args.delay / state.period)
        if abs(shift * state.period - args.delay) > 1e-9 or not 1 <= shift < state.d:
            raise CliError(f"--delay must be a multiple 1..{state.d - 1} of the {state.period} ps period")
        field = amzi(field, AmziConfig(delay=args.delay, phase=interferometer_phase(args.phase)))
    sigma = args.noise * float(np.max(np.abs(state.amplitudes) ** 2))
    # same stream as the pipeline uses for this trace
    stream = make_rng(args.seed, shift, int(args.phase) + 1 if shift else 0)
    wave = detect(field, sigma, stream)
    buf = io.StringIO()
    buf.write(f"# dt_ps={wave.dt!r}\n# t0_ps={wave.t0!r}\n")
    buf.writelines(f"{float(v)!r}\n" for v in wave.samples)
    _emit(args, buf.getvalue())


def _fit_json(fit):
    return {
        "converged": fit.converged,
        "iterations": fit.iterations,
        "residual_norm": fit.residual_norm,
        "gradient_norm": fit.gradient_norm,
        "message": fit.message,
        "peaks": [{"x0": p.x0, "sigma": p.sigma, "tau1": p.tau1, "tau2": p.tau2,
                   "A": p.A, "R": p.R} for p in fit.peaks],
    }


def cmd_pulse_fit(args):
    try:
        wave = read_waveform_csv(args.input)
    except OSError as exc:
        raise CliError(f"cannot read {args.input}: {exc.strerror}") from None
    if args.peaks < 1:
        raise CliError("--peaks must be at least 1")
    centers = [args.first + k * args.period for k in range(args.peaks)]
    fit = fit_multipeak(wave, args.peaks, grid_init(wave, centers, args.width), args.max_iter)
    _emit(args, _dump(_fit_json(fit)))


def cmd_pulse_pipeline(args):
    state = _state(args)
    if args.noise < 0:
        raise CliError("--noise must be non-negative")
    cfg = PipelineConfig(dt=args.dt, noise=args.noise, seed=args.seed, strategy=args.strategy,
                         max_iter=args.max_iter)
    res = run_pipeline(state, cfg)
    out = {
        "dim": state.d,
        "raw": matrix_to_json(res.raw),
        "projected": matrix_to_json(res.projected),
        "fidelity": res.fidelity,
        "clipped_eigenvalues": [{"original": [z.real, z.imag], "clipped": c}
                                for z, c in res.report.clipped_eigenvalues],
        "fits": {("plain" if m == 0 else f"shift{m}_phase{ph}"): _fit_json(f)
                 for (m, ph), f in res.fits.items()},
    }
    _emit(args, _dump(out))


def _add_out(p):
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout, no manifest)")


def _add_dm_common(p):
    p.add_argument("--in", dest="input", required=True, metavar="JSON", help="input JSON file")
    p.add_argument("--variant", choices=VARIANTS, default="shift",
                   help="gate choice (default: shift)")
    p.add_argument("--shots", type=int, metavar="N",
                   help="probe shots per element; omit for exact expectations")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    p.add_argument("--exact", action="store_true", help="exact expectations (the default)")
    _add_out(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmkit", description="Direct measurement of density matrices via Hadamard tests.")
    parser.add_argument("--version", action="version", version=f"dmkit {__version__}")
    top = parser.add_subparsers(dest="group", required=True, metavar="{dm,pulse}")

    dm = top.add_parser("dm", help="direct-measurement protocols")
    dm_sub = dm.add_subparsers(dest="command", required=True,
                               metavar="{state,povm,process,variance-sweep,project}")

    p = dm_sub.add_parser("state", help="measure every density-matrix element")
    _add_dm_common(p)
    p.set_defaults(func=cmd_dm_state)

    p = dm_sub.add_parser("povm", help="measure every element of a POVM element")
    _add_dm_common(p)
    p.set_defaults(func=cmd_dm_povm)

    p = dm_sub.add_parser("process", help="measure the process tensor of a Kraus channel")
    _add_dm_common(p)
    p.set_defaults(func=cmd_dm_process)

    p = dm_sub.add_parser("variance-sweep", help="empirical vs predicted estimator variance (CSV)")
    p.add_argument("--A", type=_floats, default=[0.0, 0.3, 0.6, 0.9], metavar="LIST",
                   help="target values (default: 0,0.3,0.6,0.9)")
    p.add_argument("--k", type=_floats, default=[1.0, 0.5, 1.0 / 3.0], metavar="LIST",
                   help="scale factors (default: 1,0.5,0.333...)")
    p.add_argument("--n", type=int, default=10_000, help="shots per run (default: 10000)")
    p.add_argument("--n-seeds", type=int, default=200, help="runs per grid point (default: 200)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    _add_out(p)
    p.set_defaults(func=cmd_dm_variance_sweep)

    p = dm_sub.add_parser("project", help="project a raw estimate onto the physical states")
    p.add_argument("--in", dest="input", required=True, metavar="JSON", help="raw matrix JSON")
    p.add_argument("--strategy", choices=STRATEGIES, default="hermitize",
                   help="projection strategy (default: hermitize)")
    _add_out(p)
    p.set_defaults(func=cmd_dm_project)

    pulse = top.add_parser("pulse", help="pulse-train experiment emulation")
    pl_sub = pulse.add_subparsers(dest="command", required=True,
                                  metavar="{simulate,fit,pipeline}")

    p = pl_sub.add_parser("simulate", help="detected intensity trace (CSV)")
    p.add_argument("--state", required=True, metavar="JSON", help="pulse-train state JSON")
    p.add_argument("--delay", type=float, default=0.0,
                   help="interferometer delay in ps; 0 means no interferometer (default: 0)")
    p.add_argument("--phase", type=int, choices=PHASES, default=0,
                   help="readout phase in degrees (default: 0)")
    p.add_argument("--noise", type=float, default=0.01,
                   help="noise sigma as a fraction of the peak intensity (default: 0.01)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    p.add_argument("--dt", type=float, default=1.0, help="sample step in ps (default: 1)")
    _add_out(p)
    p.set_defaults(func=cmd_pulse_simulate)

    p = pl_sub.add_parser("fit", help="joint multi-peak fit of a trace (JSON)")
    p.add_argument("--in", dest="input", required=True, metavar="CSV", help="waveform CSV")
    p.add_argument("--peaks", type=int, required=True, metavar="N", help="number of peaks")
    p.add_argument("--period", type=float, default=200.0,
                   help="peak spacing in ps (default: 200)")
    p.add_argument("--width", type=float, default=44.0,
                   help="pulse FWHM in ps used for initialization (default: 44)")
    p.add_argument("--first", type=float, default=0.0,
                   help="centre of the first peak in ps (default: 0)")
    p.add_argument("--max-iter", type=int, default=500, help="iteration cap (default: 500)")
    _add_out(p)
    p.set_defaults(func=cmd_pulse_fit)

    p = pl_sub.add_parser("pipeline", help="full emulation: traces, fits, extraction, projection")
    p.add_argument("--state", required=True, metavar="JSON", help="pulse-train state JSON")
    p.add_argument("--noise", type=float, default=0.01,
                   help="noise sigma as a fraction of the peak intensity (default: 0.01)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    p.add_argument("--dt", type=float, default=1.0, help="sample step in ps (default: 1)")
    p.add_argument("--strategy", choices=STRATEGIES, default="paper_faithful",
                   help="projection strategy (default: paper_faithful)")
    p.add_argument("--max-iter", type=int, default=PipelineConfig.max_iter,
                   help=f"iteration cap per fit (default: {PipelineConfig.max_iter})")
    _add_out(p)
    p.set_defaults(func=cmd_pulse_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.command_path = f"{args.group} {args.command}"
    try:
        args.func(args)
    except (CliError, FitError, ValueError, IndexError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
