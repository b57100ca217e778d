"""``nhwm`` command line.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analysis import compare_runs
from .config import ConfigError, RunConfig, parse_config
from .io import read_csv, write_csv
from .runs import gain_map, loss_spectrum_table, run_scenario, sweep, three_mode_table
from .scenarios import ConvergenceError
from .solver import NumericalError
from .three_mode import DegenerateEigenbasisError, StepSizeError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# keys that would introduce a nondeterministic source; none is supported
_RANDOM_KEYS = ("seed", "random", "noise")


def _load(args) -> tuple:
    if args.config is None:
        return RunConfig(), None
    with open(args.config, encoding="utf-8") as fh:
        text = fh.read()
    run = parse_config(text)
    if getattr(args, "seedless", False):
        for _, key in run.keys_seen:
            if any(r in key for r in _RANDOM_KEYS):
                raise ConfigError(f"--seedless: key {key!r} names a random source")
    return run, text


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse value list {text!r}") from None


def _cmd_run(args):
    run, text = _load(args)
    res = run_scenario(run, args.out, no_loss=args.no_loss, input_text=text)
    s = res.series
    print(f"t_end={s['t'][-1]:.6g} ms  p_s: {s['p_s'][0]:.6g} -> {s['p_s'][-1]:.6g}  "
          f"N_lost={s['N_lost'][-1]:.6g}")


def _cmd_three_mode(args):
    run, text = _load(args)
    tab = three_mode_table(run, args.out, no_loss=args.no_loss, input_text=text)
    print(f"n_s: {tab['n_s'][0]:.6g} -> {tab['n_s'][-1]:.6g} (analytic {tab['n_s_analytic'][-1]:.6g})")


def _cmd_loss_spectrum(args):
    run, text = _load(args)
    tab = loss_spectrum_table(run, args.out, k_max=args.k_max, n=args.points, input_text=text)
    i = int(np.argmax(tab["gamma"]))
    print(f"peak gamma={tab['gamma'][i]:.6g} /ms at k={tab['k'][i]:.6g} /um ({tab['k'].size} samples)")


def _cmd_gain_map(args):
    run, text = _load(args)
    ratios = _float_list(args.ratios) if args.ratios else np.geomspace(1.0, 64.0, 13)
    gammas = _float_list(args.gammas) if args.gammas else np.geomspace(0.1, 10.0, 21)
    tab = gain_map(ratios, gammas, coupling=args.coupling, out_dir=args.out, run=run, input_text=text)
    print(f"{tab['ratio'].size} grid points")


def _cmd_sweep(args):
    run, text = _load(args)
    values = _float_list(args.values)
    summary = sweep(run, args.key, values, args.out, mode=args.mode, workers=args.workers, input_text=text)
    for v, g, ok in zip(summary["value"], summary["fitted_gain"], summary["ok"]):
        print(f"{args.key}={float(v)!r}: fitted gain {g:.6g} /ms{'' if ok else '  FAILED'}")


def _cmd_compare(args):
    a = read_csv(args.a)
    b = read_csv(args.b)
    for name, s in (("a", a), ("b", b)):
        if args.observable not in s or "t" not in s:
            raise ConfigError(f"series {name} lacks column 't' or {args.observable!r}")
    window = tuple(_float_list(args.window)) if args.window else None
    if window is not None and len(window) != 2:
        raise ConfigError("--window takes two numbers: start,stop")
    rep = compare_runs(a, b, args.observable, window)
    d = rep.as_dict()
    if args.out:
        write_csv(args.out, {k: [v] for k, v in d.items() if k != "observable"})
    for k, v in d.items():
        print(f"{k} = {v}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nhwm", description="Non-Hermitian four-wave mixing simulations.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", required=out_required, help="output directory")
        sp.add_argument("--seedless", action="store_true", help="reject any nondeterministic input")

    sp = sub.add_parser("run", help="propagate a scenario")
    common(sp)
    sp.add_argument("--no-loss", action="store_true", help="paired control run without loss")
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("three-mode", help="three-mode trajectory and analytic signal")
    common(sp)
    sp.add_argument("--no-loss", action="store_true", help="set the idler damping to zero")
    sp.set_defaults(func=_cmd_three_mode)

    sp = sub.add_parser("loss-spectrum", help="tabulate the Lambda-system loss spectrum")
    common(sp)
    sp.add_argument("--k-max", type=float, default=None, help="half range in 1/um (default 2 k_s)")
    sp.add_argument("--points", type=int, default=2001, help="initial samples before refinement")
    sp.set_defaults(func=_cmd_loss_spectrum)

    sp = sub.add_parser("gain-map", help="exact vs approximate gain over mismatch and damping")
    common(sp)
    sp.add_argument("--coupling", type=float, default=1.0, help="U rho / hbar in 1/ms")
    sp.add_argument("--ratios", help="comma separated dE/(U rho) values")
    sp.add_argument("--gammas", help="comma separated gamma/(dE/hbar) values")
    sp.set_defaults(func=_cmd_gain_map)

    sp = sub.add_parser("sweep", help="repeat a run over values of one key")
    common(sp)
    sp.add_argument("--key", required=True, help="section.key or scenario field name")
    sp.add_argument("--values", required=True, help="comma separated values, kept in order")
    sp.add_argument("--mode", choices=("run", "three-mode"), default="run", help="what each point computes")
    sp.add_argument("--workers", type=int, default=None, help="process pool size (default NHWM_THREADS, else 1)")
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("compare", help="compare two series CSV files")
    sp.add_argument("a", help="first series CSV")
    sp.add_argument("b", help="second series CSV")
    sp.add_argument("--observable", default="p_s", help="column to compare")
    sp.add_argument("--window", help="start,stop in ms")
    sp.add_argument("--out", help="report CSV path")
    sp.set_defaults(func=_cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        args.func(args)
    except (ConfigError, FileNotFoundError, KeyError) as exc:
        print(f"nhwm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ConvergenceError, StepSizeError, DegenerateEigenbasisError,
            FloatingPointError) as exc:
        print(f"nhwm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"nhwm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
