"""Shared, session-cached scenario runs.

The box and collision propagations take tens of seconds to minutes, so each
one is run at most once per session and reused by every test that needs it.
"""

import functools

import pytest

from nhwm.config import RunConfig
from nhwm.runs import run_scenario
from nhwm.scenarios import ScenarioConfig, build_box_1d, ground_state_imaginary_time, box_potential


ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running scenario propagation")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@functools.lru_cache(maxsize=None)
def box_ground_state():
    cfg = ScenarioConfig.box_default()
    p = cfg.physical()
    grid = cfg.grid()
    V = box_potential(grid.axes[0], cfg.box_length_um, cfg.wall_width_um, cfg.wall_height)
    return ground_state_imaginary_time(grid, V, p, cfg.atom_number, p.U1D)


@functools.lru_cache(maxsize=None)
def box_run(loss="gaussian", delta_e_scale=1.0, dt_ms=1e-3):
    """Box scenario at default parameters; returns (series, final state, initial state)."""
    cfg = ScenarioConfig.box_default(loss=loss, delta_e_scale=delta_e_scale, dt_ms=dt_ms)
    from nhwm.solver import evolve, signal_strength

    state = build_box_1d(cfg, ground_state=box_ground_state().copy())
    e0_state = state.copy()
    obs = {"p_s": lambda o: signal_strength(o.field, cfg.k_s_per_um, cfg.band_half_width_per_um)}
    state, series = evolve(state, cfg.t_end_ms, obs, stride=0.5)
    return series, state, e0_state


@functools.lru_cache(maxsize=None)
def collision_run(loss="gaussian"):
    run = RunConfig(scenario=ScenarioConfig.collision_default(loss=loss))
    return run_scenario(run).series


@pytest.fixture(scope="session")
def box_gaussian():
    return box_run("gaussian")


@pytest.fixture(scope="session")
def box_lossless():
    return box_run("none")
