import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nhwm.analysis import compare_runs, fit_growth_rate
from nhwm.config import ConfigError, RunConfig, dump_config, parse_config, set_key
from nhwm.io import finish_manifest, manifest_complete, read_csv, write_csv, write_manifest
from nhwm.runs import run_scenario, sweep
from nhwm.scenarios import ScenarioConfig

SMALL = """
[scenario]
variant = homogeneous

[solver]
n_points = 256
t_end_ms = 2.0
observer_stride_ms = 0.25
"""


# --- parsing ----------------------------------------------------------------------------

def test_empty_loss_section_selects_control_run():
    run = parse_config("[scenario]\nvariant = box\n[loss]\n")
    assert run.scenario.loss == "none"
    assert parse_config("[scenario]\nvariant = box\n").scenario.loss == "gaussian"


def test_k_s_round_trips_bit_exactly():
    run = parse_config("[scenario]\nvariant = box\n[signal]\nk_s_per_um = 2.7\n")
    again = parse_config(dump_config(run))
    assert again.scenario.k_s_per_um == 2.7
    assert again.scenario == run.scenario


@given(st.floats(0.1, 5.0, allow_nan=False))
def test_dump_parse_is_identity_for_floats(k):
    run = set_key(RunConfig(), "signal.k_s_per_um", k)
    assert parse_config(dump_config(run)).scenario.k_s_per_um == k


def test_eit_section_round_trip():
    text = "[scenario]\nvariant = box\n[loss]\nkind = eit\n[eit]\nomega_p_per_ms = 40.0\ntheta_c_deg = 90\n"
    run = parse_config(text)
    assert run.scenario.eit.Omega_p == 40.0
    assert run.scenario.eit.theta_c == pytest.approx(math.pi / 2)
    assert parse_config(dump_config(run)).scenario == run.scenario


def test_eit_short_key_names():
    short = "[scenario]\nvariant = box\n[loss]\nkind = eit\n[eit]\nomega_p = 40\nomega_c = 900\n" \
            "delta0 = 50\ngamma_decay = 600\nq_um_inv = 21\ntheta_c_deg = 180\n"
    long = "[scenario]\nvariant = box\n[loss]\nkind = eit\n[eit]\nomega_p_per_ms = 40\nomega_c_per_ms = 900\n" \
           "delta0_per_ms = 50\ngamma_per_ms = 600\nq_per_um = 21\ntheta_c_rad = 3.141592653589793\n"
    assert parse_config(short).scenario == parse_config(long).scenario
    assert "omega_p =" not in dump_config(parse_config(short))


def _line_of(text):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    return exc.value.line, str(exc.value)


def test_malformed_line_reports_line_number():
    line, msg = _line_of("[scenario]\nvariant = box\n[solver]\ndt_ms 0.001\n")
    assert line == 4
    assert msg.startswith("line 4")


@pytest.mark.parametrize("text, line, fragment", [
    ("[scenario]\nvariant = box\n[solver]\ndt_s = 1e-6\n", 4, "unit suffix"),
    ("[scenario]\nvariant = box\n[solver]\nfoo_ms = 1\n", 4, "unknown key"),
    ("[scenario]\nvariant = box\n[lasers]\n", 3, "unknown section"),
    ("[scenario]\natom_number = 10\n", 1, "missing required"),
    ("[scenario]\nvariant = box\nvariant = box\n", 3, "duplicate"),
    ("[scenario]\nvariant = ring\n", 2, "unknown variant"),
    ("k = 1\n", 1, "outside"),
    ("[scenario]\nvariant = box\n[solver]\nn_points = 1.5\n", 4, "bad value"),
    ("[scenario]\nvariant = box\n[eit]\ntheta_p_rad = 0\ntheta_p_deg = 0\n", 5, "same quantity"),
    ("[scenario]\nvariant = box\n[eit]\nomega_p = 1\nomega_p_per_ms = 1\n", 5, "same quantity"),
    ("[scenario]\nvariant = box\n[solver]\ndt_ms = nan\n", 4, "finite"),
])
def test_config_errors(text, line, fragment):
    got, msg = _line_of(text)
    assert got == line
    assert fragment in msg


def test_variant_selects_defaults():
    run = parse_config("[scenario]\nvariant = collision2d\n")
    assert run.scenario == ScenarioConfig.collision_default()


def test_set_key_paths():
    run = RunConfig()
    assert set_key(run, "loss-gaussian.gamma_a_per_ms", 1.5).scenario.gamma_a_per_ms == 1.5
    assert set_key(run, "dt_ms", 2e-3).scenario.dt_ms == 2e-3
    assert set_key(run, "solver.observer_stride_ms", 0.1).stride_ms == 0.1
    with pytest.raises(ConfigError):
        set_key(run, "solver.nope", 1)


# --- CSV and manifests ------------------------------------------------------------------------

def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    cols = {"t": np.linspace(0, 1, 17), "y": rng.normal(size=17) * 1e-300, "z": rng.normal(size=17) * 1e300}
    cols["y"][3] = 0.1 + 0.2
    write_csv(tmp_path / "a.csv", cols)
    back = read_csv(tmp_path / "a.csv")
    for k in cols:
        assert back[k].tobytes() == cols[k].tobytes()
    raw = (tmp_path / "a.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_csv_rejects_ragged(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "a.csv", {"a": [1, 2], "b": [1]})


def test_manifest_done_marker(tmp_path):
    p = tmp_path / "manifest.ini"
    write_manifest(p, "[scenario]\nvariant = box\n", ["x.csv"], input_text="abc")
    assert not manifest_complete(p)
    finish_manifest(p)
    assert manifest_complete(p)
    # the manifest body parses back to a configuration
    assert parse_config(p.read_text()).scenario.variant == "box"
    assert not manifest_complete(tmp_path / "missing.ini")


def test_run_writes_manifest_before_data(tmp_path, monkeypatch):
    import nhwm.runs

    out = tmp_path / "out"
    seen = []

    def spy(path, *a, **kw):
        seen.append(((out / "manifest.ini").exists(), manifest_complete(out / "manifest.ini")))
        return write_csv(path, *a, **kw)

    monkeypatch.setattr(nhwm.runs, "write_csv", spy)
    res = run_scenario(parse_config(SMALL), out)
    assert seen == [(True, False)]
    assert manifest_complete(out / "manifest.ini")
    series = read_csv(out / "series.csv")
    assert list(series)[:4] == ["t", "N", "N_lost", "p_s"]
    assert series["p_s"].tobytes() == np.asarray(res.series["p_s"]).tobytes()


def test_rerun_from_manifest_is_bit_identical(tmp_path):
    run_scenario(parse_config(SMALL), tmp_path / "a")
    manifest = (tmp_path / "a" / "manifest.ini").read_text()
    run_scenario(parse_config(manifest), tmp_path / "b")
    assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()
    assert (tmp_path / "a" / "final.nhwm").read_bytes() == (tmp_path / "b" / "final.nhwm").read_bytes()


def test_snapshot_stride(tmp_path):
    run = parse_config(SMALL + "snapshot_stride_ms = 1.0\n")
    run_scenario(run, tmp_path)
    assert sorted(p.name for p in tmp_path.glob("snap_*.nhwm")) == ["snap_00000.nhwm", "snap_00001.nhwm",
                                                                   "snap_00002.nhwm"]


# --- comparison harness ---------------------------------------------------------------------

def _series(rate=0.1, scale=1.0, n=41):
    t = np.linspace(0, 4, n)
    return {"t": t, "p_s": scale * np.exp(rate * t)}


def test_compare_identical():
    rep = compare_runs(_series(), _series(), "p_s")
    assert rep.max_relative_deviation == 0 and rep.mean_relative_deviation == 0
    assert rep.growth_rate_a == pytest.approx(0.1)


def test_compare_scaled():
    rep = compare_runs(_series(), _series(scale=2.0), "p_s")
    assert rep.mean_relative_deviation == pytest.approx(1.0, rel=1e-14)
    assert rep.growth_rate_a == pytest.approx(rep.growth_rate_b, rel=1e-12)


def test_compare_resamples_and_windows():
    a, b = _series(n=41), _series(n=17)
    rep = compare_runs(a, b, "p_s", window=(1.0, 3.0))
    assert rep.window == (1.0, 3.0)
    assert rep.max_relative_deviation < 1e-3


def test_compare_empty_overlap():
    a = _series()
    b = {"t": a["t"] + 10.0, "p_s": a["p_s"]}
    with pytest.raises(ValueError):
        compare_runs(a, b, "p_s")


def test_fit_growth_rate_needs_samples():
    with pytest.raises(ValueError):
        fit_growth_rate([0, 1], [1, 2], window=(5, 6))


# --- sweeps ----------------------------------------------------------------------------------

def test_sweep_keeps_given_order(tmp_path):
    run = parse_config(SMALL)
    values = [3.0, 1.0, 2.0]
    summary = sweep(run, "loss-gaussian.gamma_a_per_ms", values, tmp_path, workers=1)
    assert list(summary["value"]) == values
    back = read_csv(tmp_path / "summary.csv")
    assert list(back["value"]) == values
    assert all(manifest_complete(tmp_path / f"point_{i:03d}" / "manifest.ini") for i in range(3))
    assert manifest_complete(tmp_path / "manifest.ini")


def test_single_value_sweep_equals_plain_run(tmp_path):
    run = parse_config(SMALL)
    gamma = run.scenario.mismatch()
    sweep(run, "loss-gaussian.gamma_a_per_ms", [gamma], tmp_path / "sw", workers=1)
    run_scenario(set_key(run, "loss-gaussian.gamma_a_per_ms", gamma), tmp_path / "plain", snapshot=False)
    assert (tmp_path / "sw" / "point_000" / "series.csv").read_bytes() == \
        (tmp_path / "plain" / "series.csv").read_bytes()


def test_sweep_records_failures_and_continues(tmp_path):
    run = parse_config(SMALL)
    summary = sweep(run, "loss-gaussian.sigma_per_um", [0.3, -1.0, 0.5], tmp_path, workers=1)
    assert list(summary["ok"]) == [1.0, 0.0, 1.0]
    assert "failed point 1" in (tmp_path / "manifest.ini").read_text()


def test_sweep_parallel_matches_serial(tmp_path):
    run = parse_config(SMALL)
    a = sweep(run, "loss-gaussian.gamma_a_per_ms", [1.0, 2.0], tmp_path / "s", workers=1)
    b = sweep(run, "loss-gaussian.gamma_a_per_ms", [1.0, 2.0], tmp_path / "p", workers=2)
    assert (tmp_path / "s" / "summary.csv").read_bytes() == (tmp_path / "p" / "summary.csv").read_bytes()
    assert a["errors"] == b["errors"]


def test_three_mode_sweep_gain_peaks_at_mismatch(tmp_path):
    run = RunConfig(scenario=ScenarioConfig.homogeneous_default(t_end_ms=40.0))
    de = run.scenario.mismatch()
    summary = sweep(run, "loss-gaussian.gamma_a_per_ms", [0.5 * de, 2.0 * de, de], tmp_path,
                    mode="three-mode", workers=1)
    assert int(np.argmax(summary["fitted_gain"])) == 2
