"""Command-line front end: one subcommand per estimator plus ``bench``.

Exit codes: 0 success, 2 unreadable or malformed input, 3 solver did not
converge, 4 invalid parameters or configuration. Errors print one line
``svmdsp: error code=<n> kind=<name> message=<text>`` on stderr. Output files
are written to a temporary name and renamed, so a failed run leaves none.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import io as sio
from .bench import EXPERIMENTS, ExperimentConfig, run_experiment
from .core import (ConvergenceError, EpsHuberParams, IllConditionedError, InvalidInputError,
                   NumericalError, SampledSignal)
from .dsm import dsm_deconv_fit, dsm_rbf_fit, dsm_sinc_fit, spike_readout
from .kernels import ImpulseResponse, KernelSpec
from .psm import (ArxOrders, SpectralGrid, SteeringScene, arx_fit, deconv_psm_fit, qpsk_slicer,
                  sinc_psm_fit, spectral_fit, temporal_beamformer_fit)
from .rsm import CanonicalSignalSet, KernelArxRegressor, spatial_beamformer_fit

EXIT_OK, EXIT_PARSE, EXIT_CONVERGENCE, EXIT_CONFIG = 0, 2, 3, 4
ENV_SEED, ENV_TRIALS = "SVMDSP_SEED", "SVMDSP_TRIALS"


class InputFileError(Exception):
    """An input file is missing or cannot be parsed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(EXIT_PARSE, "UsageError", message)


def _fail(code, kind, message):
    message = " ".join(str(message).split())
    print(f"svmdsp: error code={code} kind={kind} message={message}", file=sys.stderr)
    sys.exit(code)


def _read(reader, path):
    if not os.path.isfile(path):
        raise InputFileError(f"input file not found: {path}")
    try:
        return reader(path)
    except InvalidInputError as err:
        raise InputFileError(str(err)) from err


def _loss(args):
    return EpsHuberParams(args.eps, args.delta, args.cost)


def _add_loss(p, eps=0.0, delta=1.0, cost=1.0):
    g = p.add_argument_group("epsilon-Huber loss")
    g.add_argument("--eps", type=float, default=eps,
                   help=f"insensitive zone width, in units of the target signal (default {eps})")
    g.add_argument("--delta", type=float, default=delta,
                   help=f"quadratic zone scale and Gram ridge, in target units per "
                        f"multiplier unit (default {delta})")
    g.add_argument("--cost", type=float, default=cost,
                   help=f"linear zone slope C and multiplier bound, dimensionless (default {cost})")


def _add_io(p, input_help, output_help):
    p.add_argument("--input", required=True, help=input_help)
    p.add_argument("--output", required=True, help=output_help)


# ----------------------------------------------------------------------------
# subcommands


def _cmd_spectral(args):
    sig = _read(sio.read_signal, args.input)
    default = SpectralGrid.default_for(sig.times)
    grid = SpectralGrid(default.omega0 if args.omega0 is None else args.omega0,
                        default.harmonics if args.harmonics is None else args.harmonics)
    _, c = spectral_fit(sig, grid, _loss(args))
    sio.write_csv(args.output, ["frequency_hz", "amplitude", "phase_rad", "in_phase", "quadrature"],
                  zip(grid.frequencies, c.amplitude, c.phase, c.in_phase, c.quadrature))


def _cmd_arx(args):
    y = _read(sio.read_signal, args.input)
    x = _read(sio.read_signal, args.exo) if args.exo else None
    _, c = arx_fit(x, y, ArxOrders(args.ar_order, args.exo_order), _loss(args))
    rows = [("ar", p + 1, v) for p, v in enumerate(c.ar)]
    rows += [("exo", q, v) for q, v in enumerate(c.exo)] if x is not None else []
    sio.write_csv(args.output, ["term", "lag", "coefficient"], rows)


def _query_times(args, train):
    if args.times:
        return _read(sio.read_column, args.times)
    if not args.step > 0:
        raise InvalidInputError("--step must be positive")
    return np.arange(train.times[0], train.times[-1] + 0.5 * args.step, args.step)


def _cmd_interp_psm(args):
    sig = _read(sio.read_signal, args.input)
    t = _query_times(args, sig)
    _, _, pred = sinc_psm_fit(sig, args.sigma0, _loss(args))
    sio.write_signal(args.output, SampledSignal(t, pred(t)))


def _cmd_interp_dsm(args):
    sig = _read(sio.read_signal, args.input)
    t = _query_times(args, sig)
    if args.kernel == "sinc":
        _, pred = dsm_sinc_fit(sig, args.sigma0, _loss(args))
    else:
        _, pred = dsm_rbf_fit(sig, args.sigma, _loss(args))
    sio.write_signal(args.output, SampledSignal(t, pred(t)))


def _impulse(args):
    return ImpulseResponse(_read(sio.read_column, args.impulse))


def _cmd_deconv_psm(args):
    y = _read(sio.read_signal, args.input)
    _, x_hat = deconv_psm_fit(y, _impulse(args), _loss(args))
    sio.write_csv(args.output, ["index", "amplitude"], enumerate(x_hat))


def _cmd_deconv_dsm(args):
    y = _read(sio.read_signal, args.input)
    loss = _loss(args)
    _, _, x_hat = dsm_deconv_fit(y, _impulse(args), loss)
    idx, amp = spike_readout(x_hat, loss.cost_cap)
    sio.write_csv(args.output, ["index", "amplitude"], zip(idx, amp))


def _cmd_narx(args):
    y = _read(sio.read_signal, args.input)
    x = _read(sio.read_signal, args.exo) if args.exo else None
    est = KernelArxRegressor(args.model, args.M, args.Q, args.sigma,
                             args.eps, args.delta, args.cost).fit(y, x)
    if args.test_input:
        y = _read(sio.read_signal, args.test_input)
        x = _read(sio.read_signal, args.test_exo) if args.test_exo else None
    rows, y_hat = est.predictor_.predict(x, y)
    sio.write_signal(args.output, SampledSignal(y.times[rows], y_hat))


def _split_symbols(z, path):
    if z.shape[1] < 2:
        raise InputFileError(f"{path}: need snapshot columns plus a symbol column")
    return z[:, :-1], z[:, -1]


def _write_decisions(path, soft):
    sio.write_complex_columns(path, ["soft", "symbol"], [soft, qpsk_slicer(soft)])


def _cmd_beamform_tr(args):
    X, b = _split_symbols(_read(sio.read_snapshots, args.input), args.input)
    _, w, det = temporal_beamformer_fit(X, b, _loss(args))
    T = X
    if args.test:
        T = _read(sio.read_snapshots, args.test)
        if T.shape[1] == X.shape[1] + 1:
            T = T[:, :-1]
    if T.shape[1] != X.shape[1]:
        raise InvalidInputError("test snapshots have a different element count")
    _write_decisions(args.output, det.soft(T))
    if args.weights:
        sio.write_complex_columns(args.weights, ["weight"], [w])


def _cmd_beamform_sr(args):
    X = _read(sio.read_snapshots, args.input)
    scene = SteeringScene(X.shape[1], args.spacing)
    canonical = CanonicalSignalSet.qpsk(scene, math.radians(args.theta0))
    _, det = spatial_beamformer_fit(X, canonical, KernelSpec.rbf(args.sigma), _loss(args))
    T = _read(sio.read_snapshots, args.test) if args.test else X
    if T.shape[1] != X.shape[1]:
        raise InvalidInputError("test snapshots have a different element count")
    _write_decisions(args.output, det.soft(T))


def _env_int(name):
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise InvalidInputError(f"{name} must be an integer, got {raw!r}") from None


def _floats(text, name):
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise InvalidInputError(f"{name} must be a comma-separated list of numbers") from None


def bench_config(args):
    """Resolve an :class:`ExperimentConfig` from flags, a config file and the environment.

    Precedence: flags, then environment (seed and trials only), then the
    config file, then experiment defaults.
    """
    cfg = {}
    if args.config:
        if not os.path.isfile(args.config):
            raise InputFileError(f"config file not found: {args.config}")
        cfg = sio.read_config(args.config)
    exp = EXPERIMENTS.get(args.experiment)
    if exp is None:
        raise InvalidInputError(
            f"unknown experiment {args.experiment!r}; choose from {sorted(EXPERIMENTS)}")

    def pick(flag, env, key, default):
        from_file = cfg.pop(key, None)
        if flag is not None:
            return flag
        if env is not None:
            return env
        if from_file is not None:
            return int(_floats(from_file, key)[0])
        return default

    seed = pick(args.seed, _env_int(ENV_SEED), "seed", 0)
    trials = pick(args.trials, _env_int(ENV_TRIALS), "trials", 20)
    grid_text = {}
    for key in ("eps", "delta", "cost"):
        flag = getattr(args, key)
        if flag is not None:
            grid_text[key] = flag
        elif key in cfg:
            grid_text[key] = cfg[key]
        cfg.pop(key, None)
    cfg.pop("experiment", None)
    params = {k: _floats(v, k)[0] for k, v in cfg.items()}
    grid = ()
    if grid_text:
        base = exp.loss_grid[0]
        eps = _floats(grid_text.get("eps", base.eps), "eps")
        delta = _floats(grid_text.get("delta", base.delta), "delta")
        cost = _floats(grid_text.get("cost", base.cost_cap), "cost")
        grid = tuple(EpsHuberParams(e, d, c) for e in eps for d in delta for c in cost)
    return ExperimentConfig(args.experiment, params, grid, seed, trials)


def _cmd_bench(args):
    result = run_experiment(bench_config(args))
    text = result.csv_text()
    if args.output:
        sio.atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# parser


def build_parser():
    p = _Parser(prog="svmdsp", description="Support vector machine estimators for signal processing.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sig_in = "signal CSV with columns time (seconds), value"

    s = sub.add_parser("spectral", help="robust spectral analysis on a harmonic grid")
    _add_io(s, sig_in, "CSV: frequency_hz, amplitude, phase_rad, in_phase, quadrature")
    s.add_argument("--omega0", type=float, help="grid spacing in rad/s (default 2 pi / span)")
    s.add_argument("--harmonics", type=int, help="highest harmonic index (default samples - 1)")
    _add_loss(s, delta=10.0)
    s.set_defaults(func=_cmd_spectral)

    s = sub.add_parser("arx", help="ARX identification with past outputs and exogenous taps")
    _add_io(s, "output signal CSV (time in seconds, value)", "CSV: term, lag (samples), coefficient")
    s.add_argument("--exo", help="exogenous input signal CSV (time in seconds, value)")
    s.add_argument("--ar-order", type=int, default=2, help="number of past outputs (samples)")
    s.add_argument("--exo-order", type=int, default=0,
                   help="highest exogenous lag Q; taps x_n..x_{n-Q} (samples)")
    _add_loss(s)
    s.set_defaults(func=_cmd_arx)

    for name, func, label in (("interp-psm", _cmd_interp_psm, "primal sinc expansion"),
                              ("interp-dsm", _cmd_interp_dsm, "dual sinc or Gaussian kernel")):
        s = sub.add_parser(name, help=f"nonuniform interpolation, {label}")
        _add_io(s, sig_in, "CSV: time (seconds), value")
        g = s.add_mutually_exclusive_group()
        g.add_argument("--times", help="single-column CSV of query times (seconds)")
        g.add_argument("--step", type=float, default=0.1,
                       help="query grid spacing in seconds over the input span (default 0.1)")
        s.add_argument("--sigma0", type=float, default=math.pi,
                       help="sinc bandwidth in rad/s (default pi)")
        if name == "interp-dsm":
            s.add_argument("--kernel", choices=("sinc", "rbf"), default="sinc",
                           help="kernel family (default sinc)")
            s.add_argument("--sigma", type=float, default=1.0,
                           help="Gaussian kernel width in seconds (default 1)")
        _add_loss(s)
        s.set_defaults(func=func)

    for name, func, out in (("deconv-psm", _cmd_deconv_psm, "CSV: index (samples), amplitude"),
                            ("deconv-dsm", _cmd_deconv_dsm,
                             "CSV: index (samples), amplitude of the nonzero spikes")):
        s = sub.add_parser(name, help="sparse deconvolution with a known impulse response")
        _add_io(s, "observation CSV (time in seconds, value)", out)
        s.add_argument("--impulse", required=True,
                       help="single-column CSV of impulse response samples (one per line)")
        _add_loss(s, delta=1e-3, cost=10.0)
        s.set_defaults(func=func)

    s = sub.add_parser("narx", help="kernel NARX identification and one-step prediction")
    _add_io(s, "output signal CSV (time in seconds, value)",
            "CSV: time (seconds), one-step prediction")
    s.add_argument("--exo", help="exogenous input signal CSV (time in seconds, value)")
    s.add_argument("--test-input", help="output signal CSV to predict (default: training signal)")
    s.add_argument("--test-exo", help="exogenous input matching --test-input")
    s.add_argument("--model", choices=("stacked", "2k", "4k", "combined"), default="4k",
                   help="kernel structure (default 4k)")
    s.add_argument("-M", type=int, default=2, help="output state length (samples)")
    s.add_argument("-Q", type=int, default=2, help="input state length (samples)")
    s.add_argument("--sigma", type=float, default=1.0,
                   help="Gaussian kernel width, in signal units (default 1)")
    _add_loss(s, delta=1e-2, cost=10.0)
    s.set_defaults(func=_cmd_narx)

    s = sub.add_parser("beamform-tr", help="temporal-reference beamformer from training symbols")
    _add_io(s, "CSV of re,im pairs: K snapshot elements then the training symbol",
            "CSV: soft_re, soft_im, symbol_re, symbol_im")
    s.add_argument("--test", help="snapshots to detect (re,im pairs; default: training snapshots)")
    s.add_argument("--weights", help="optional CSV for the complex weights (weight_re, weight_im)")
    _add_loss(s, delta=1e-6, cost=1e6)
    s.set_defaults(func=_cmd_beamform_tr)

    s = sub.add_parser("beamform-sr", help="kernel spatial-reference beamformer from the desired DOA")
    _add_io(s, "CSV of re,im pairs, one per array element (unlabelled snapshots)",
            "CSV: soft_re, soft_im, symbol_re, symbol_im")
    s.add_argument("--test", help="snapshots to detect (re,im pairs; default: input snapshots)")
    s.add_argument("--theta0", type=float, default=0.0, help="desired DOA in degrees (default 0)")
    s.add_argument("--spacing", type=float, default=0.5,
                   help="element spacing in wavelengths (default 0.5)")
    s.add_argument("--sigma", type=float, default=1000.0,
                   help="Gaussian kernel width, in snapshot amplitude units (default 1000)")
    _add_loss(s, delta=1e-3, cost=10.0)
    s.set_defaults(func=_cmd_beamform_sr)

    ids = ", ".join(sorted(EXPERIMENTS))
    units = "; ".join(f"{k}: {EXPERIMENTS[k].loss_units}" for k in sorted(EXPERIMENTS))
    s = sub.add_parser("bench", help="run a synthetic experiment and write a metrics CSV",
                       description=f"Experiments: {ids}. Loss grid units: {units}. "
                                   f"Environment: {ENV_SEED}, {ENV_TRIALS} "
                                   f"(flags take precedence).")
    s.add_argument("experiment", help=f"experiment id ({ids})")
    s.add_argument("--trials", type=int, help="number of trials (count; default 20)")
    s.add_argument("--seed", type=int, help="base seed; trial i uses seed + i (default 0)")
    s.add_argument("--config", help="key = value file: seed, trials, eps, delta, cost and "
                                    "generator parameters")
    s.add_argument("--output", help="metrics CSV path (default: standard output)")
    g = s.add_argument_group("loss grid (comma-separated candidates; units per experiment)")
    g.add_argument("--eps", help="insensitive zone candidates")
    g.add_argument("--delta", help="quadratic zone scale candidates")
    g.add_argument("--cost", help="linear zone slope C candidates")
    s.set_defaults(func=_cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InputFileError as err:
        _fail(EXIT_PARSE, "InputFileError", err)
    except ConvergenceError as err:
        _fail(EXIT_CONVERGENCE, "ConvergenceError", err)
    except (InvalidInputError, IllConditionedError, NumericalError) as err:
        _fail(EXIT_CONFIG, type(err).__name__, err)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
