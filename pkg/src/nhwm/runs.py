"""Batch drivers behind the command line: single runs, sweeps and tables.

Each driver writes ``manifest.ini`` first, then its data files, then appends
the ``# DONE`` marker to the manifest.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import fit_growth_rate
from .config import RunConfig, dump_config, set_key
from .eit import loss_spectrum
from .grid import write_snapshot
from .io import finish_manifest, write_csv, write_manifest
from .scenarios import ScenarioConfig, build, collision_momenta, default_eit_params
from .solver import evolve, signal_strength
from .three_mode import (ThreeModeParams, ThreeModeState, analytic_modes, eigenvalues_from,
                         gain_approx_from, integrate_three_mode)

__all__ = ["RunResult", "observers_for", "run_scenario", "three_mode_table", "loss_spectrum_table",
           "gain_map", "sweep", "SERIES_COLUMNS"]

SERIES_COLUMNS = ("t", "N", "N_lost", "p_s")


@dataclass
class RunResult:
    series: dict
    state: object
    out_dir: Path | None = None


def observers_for(cfg: ScenarioConfig) -> dict:
    """p_s (and p_3 for the collision) as observer callables."""
    K = cfg.band_half_width_per_um
    if cfg.variant == "collision2d":
        mom = collision_momenta(cfg)
        return {"p_s": lambda o, c=mom["p1"]: signal_strength(o.field, c, K),
                "p_3": lambda o, c=mom["p3"]: signal_strength(o.field, c, K)}
    return {"p_s": lambda o, c=cfg.k_s_per_um: signal_strength(o.field, c, K)}


def _control(run: RunConfig, no_loss: bool) -> RunConfig:
    return replace(run, scenario=run.scenario.with_(loss="none")) if no_loss else run


def run_scenario(run: RunConfig, out_dir=None, no_loss: bool = False, input_text: str | None = None,
                 snapshot: bool = True) -> RunResult:
    """Build, propagate to ``t_end_ms`` and (optionally) write outputs."""
    run = _control(run, no_loss)
    cfg = run.scenario
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        outputs = ["series.csv"] + (["final.nhwm"] if snapshot else [])
        write_manifest(out / "manifest.ini", dump_config(run), outputs, input_text=input_text,
                       extra={"command": "run", "no_loss": no_loss})
    state = build(cfg)
    obs = observers_for(cfg)
    callbacks, cb_stride = (), None
    if out is not None and snapshot and run.snapshot_stride_ms > 0:
        counter = iter(range(10**9))

        def _snap(ob):
            write_snapshot(out / f"snap_{next(counter):05d}.nhwm", ob.field, ob.t)

        callbacks, cb_stride = (_snap,), run.snapshot_stride_ms
    state, series = evolve(state, cfg.t_end_ms, obs, stride=run.stride_ms, callbacks=callbacks,
                           callback_stride=cb_stride)
    if out is not None:
        order = list(SERIES_COLUMNS) + [k for k in series if k not in SERIES_COLUMNS]
        write_csv(out / "series.csv", series, order)
        if snapshot:
            write_snapshot(out / "final.nhwm", state.field, state.t)
        finish_manifest(out / "manifest.ini")
    return RunResult(series=series, state=state, out_dir=out)


def _three_mode_params(cfg: ScenarioConfig) -> tuple:
    p = cfg.physical()
    if cfg.variant == "homogeneous":
        L = cfg.extent_um
    elif cfg.variant == "box":
        L = cfg.box_length_um
    else:
        raise ValueError("the three-mode model applies to the 1D scenarios only")
    gamma = cfg.gamma_a_per_ms if cfg.gamma_a_per_ms is not None else cfg.mismatch()
    if cfg.loss == "none":
        gamma = 0.0
    tp = ThreeModeParams.homogeneous(cfg.k0_per_um, cfg.k_s_per_um, p.mass, p.U1D, cfg.atom_number, L, gamma)
    return tp, cfg.atom_number


def three_mode_table(run: RunConfig, out_dir=None, no_loss: bool = False, input_text=None) -> dict:
    """Nonlinear three-mode trajectory and the linearised analytic signal."""
    run = _control(run, no_loss)
    cfg = run.scenario
    tp, N = _three_mode_params(cfg)
    A = cfg.signal_fraction
    # the configured step is used as is; an under-resolving one raises StepSizeError
    dt = cfg.dt_ms
    every = max(1, int(round(run.stride_ms / dt)))
    tr = integrate_three_mode(ThreeModeState(math.sqrt((1 - A) * N), math.sqrt(A * N), 0j), tp, dt,
                              cfg.t_end_ms, record_every=every)
    phis, _ = analytic_modes(math.sqrt(A * N), 0j, tp, tr.t)
    pops = tr.populations
    table = {"t": tr.t, "n_0": pops[:, 0], "n_s": pops[:, 1], "n_i": pops[:, 2], "sum": pops.sum(axis=1),
             "n_s_analytic": np.abs(phis) ** 2}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out / "manifest.ini", dump_config(run), ["three_mode.csv"], input_text=input_text,
                       extra={"command": "three-mode", "no_loss": no_loss})
        write_csv(out / "three_mode.csv", table)
        finish_manifest(out / "manifest.ini")
    return table


def loss_spectrum_table(run: RunConfig, out_dir=None, k_max: float | None = None, n: int = 2001,
                        input_text=None) -> dict:
    """gamma(k), dE(k) and the closed-form columns for the configured Lambda system."""
    cfg = run.scenario
    lam = cfg.eit if cfg.eit is not None else default_eit_params()
    k_max = k_max if k_max is not None else 2.0 * abs(cfg.k_s_per_um)
    tab = loss_spectrum(lam, np.linspace(-k_max, k_max, n), cfg.physical().mass, closed_forms=True)
    table = {"k": tab.k, "v": tab.v, "gamma": tab.gamma, "deltaE": tab.delta_e,
             "gamma_closed_form": tab.gamma_closed_form, "deltaE_closed_form": tab.delta_e_closed_form}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out / "manifest.ini", dump_config(run), ["loss_spectrum.csv"], input_text=input_text,
                       extra={"command": "loss-spectrum"})
        write_csv(out / "loss_spectrum.csv", table)
        finish_manifest(out / "manifest.ini")
    return table


def gain_map(ratios, gammas_over_de, coupling: float = 1.0, out_dir=None, run=None, input_text=None) -> dict:
    """Exact Im(lambda+) and its large-mismatch approximation on a (dE/U rho, gamma/dE) grid.

    Uses the linear-response detuning kappa = dE - 2 U rho.
    """
    R, G = np.meshgrid(np.asarray(ratios, dtype=float), np.asarray(gammas_over_de, dtype=float), indexing="ij")
    exact = np.empty(R.shape)
    approx = np.empty(R.shape)
    for idx in np.ndindex(R.shape):
        de = R[idx] * coupling
        gamma = G[idx] * de
        exact[idx] = eigenvalues_from(coupling, de - 2.0 * coupling, gamma)[0].imag
        approx[idx] = gain_approx_from(coupling, de, gamma)
    table = {"ratio": R.ravel(), "gamma_over_de": G.ravel(), "im_lambda": exact.ravel(),
             "gain_approx": approx.ravel()}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        text = dump_config(run) if run is not None else ""
        write_manifest(out / "manifest.ini", text, ["gain_map.csv"], input_text=input_text,
                       extra={"command": "gain-map", "coupling": repr(coupling)})
        write_csv(out / "gain_map.csv", table)
        finish_manifest(out / "manifest.ini")
    return table


def _sweep_point(args):
    run, key, value, out_dir, mode = args
    try:
        point = set_key(run, key, value)
        if mode == "three-mode":
            tab = three_mode_table(point, out_dir)
            t, y = tab["t"], tab["n_s"]
            final, lost = float(y[-1]), float("nan")
        else:
            res = run_scenario(point, out_dir, snapshot=False)
            t, y = res.series["t"], res.series["p_s"]
            final, lost = float(y[-1]), float(res.series["N_lost"][-1])
        t_mid = 0.5 * (t[0] + t[-1])
        gain = fit_growth_rate(t, y, (t_mid, t[-1]))
        return final, lost, gain, ""
    except Exception as exc:  # recorded per point; the sweep carries on
        return float("nan"), float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"


def sweep(run: RunConfig, key: str, values, out_dir, mode: str = "run", workers: int | None = None,
          input_text=None) -> dict:
    """Independent runs over ``values`` of ``key``; summary rows keep the given order.

    ``mode`` is ``"run"`` (full GPE) or ``"three-mode"``.  Failed points get
    NaN entries and ``ok = 0``; their messages go into the summary manifest.
    """
    values = list(values)
    if not values:
        raise ValueError("no sweep values")
    set_key(run, key, values[0])  # validates the key before anything is written
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out / "manifest.ini", dump_config(run), ["summary.csv"], input_text=input_text,
                   extra={"command": "sweep", "key": key, "mode": mode,
                          "values": ",".join(repr(float(v)) for v in values)})
    jobs = [(run, key, v, out / f"point_{i:03d}", mode) for i, v in enumerate(values)]
    if workers is None:
        workers = int(os.environ.get("NHWM_THREADS", "1") or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    summary = {"index": np.arange(len(values), dtype=float), "value": np.asarray(values, dtype=float),
               "p_s_final": np.array([r[0] for r in results]), "N_lost": np.array([r[1] for r in results]),
               "fitted_gain": np.array([r[2] for r in results]),
               "ok": np.array([0.0 if r[3] else 1.0 for r in results])}
    write_csv(out / "summary.csv", summary)
    with open(out / "manifest.ini", "a", encoding="utf-8", newline="\n") as fh:
        for i, r in enumerate(results):
            if r[3]:
                fh.write(f"# failed point {i}: {r[3]}\n")
    finish_manifest(out / "manifest.ini")
    summary["errors"] = [r[3] for r in results]
    return summary
