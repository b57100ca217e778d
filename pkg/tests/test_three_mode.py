import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from nhwm.analysis import fit_growth_rate
from nhwm.three_mode import (DegenerateEigenbasisError, StepSizeError, ThreeModeParams, ThreeModeState,
                             analytic_modes, analytic_solution, coupling_matrix, eigenvalues,
                             eigenvalues_from, gain_approx, gain_approx_from, integrate_three_mode)


def test_hermitian_example_is_real_sqrt3():
    lp, lm = eigenvalues_from(1.0, 0.0, 0.0)
    assert lp == pytest.approx(math.sqrt(3))
    assert lm == pytest.approx(-math.sqrt(3))
    assert abs(lp.imag) < 1e-15 and abs(lm.imag) < 1e-15


def test_lossy_example_against_dense_eigensolve():
    A, kappa, gamma = 1.0, 6.0, 2.0
    B = 2 * A + kappa / 2
    M = np.array([[B, A], [-A, -B - 1j * gamma]])
    ref = sorted(np.linalg.eigvals(M), key=lambda z: z.imag, reverse=True)
    got = eigenvalues_from(A, kappa, gamma)
    for a, b in zip(got, ref):
        assert abs(a - b) < 1e-12 * abs(b)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 10), st.floats(-20, 20), st.floats(0, 20))
def test_trace_identity(A, kappa, gamma):
    lp, lm = eigenvalues_from(A, kappa, gamma)
    assert abs((lp + lm) - (-1j * gamma)) < 1e-12 * max(1.0, abs(lp), abs(lm))
    assert lp.imag >= lm.imag


def test_momentum_closure_enforced():
    with pytest.raises(ValueError):
        ThreeModeParams(k0=0.0, ks=1.0, ki=-0.9, mass=1.0, U_d=1.0, n0=1.0)
    p = ThreeModeParams.homogeneous(0.3, 2.7, 1.37, 0.007, 1e4, 100.0)
    assert p.ks + p.ki == pytest.approx(2 * p.k0, abs=1e-12)


def test_gain_formula_substitution():
    assert gain_approx_from(1.0, 10.0, 10.0) == pytest.approx(0.05, rel=1e-14)


def test_gain_formula_against_exact_at_moderate_mismatch():
    # exact value from a dense eigensolve of the generator (kappa = dE - 2 U rho)
    p = ThreeModeParams.from_rates(1.0, 10.0, 10.0)
    exact = max(np.linalg.eigvals(coupling_matrix(p)).imag)
    rep = gain_approx(p)
    assert rep.exact == pytest.approx(exact, rel=1e-12)
    assert rep.exact == pytest.approx(0.0412114, rel=1e-6)
    # the approximation is only asymptotic; here it overestimates by about 18%
    assert rep.relative_deviation == pytest.approx(-0.17577, abs=1e-4)


def test_gain_formula_converges_monotonically():
    devs = []
    for r in (4, 8, 16, 32, 64):
        rep = gain_approx(ThreeModeParams.from_rates(1.0, float(r), float(r)))
        devs.append(abs(rep.relative_deviation))
    assert all(b < a for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.05


def test_analytic_solution_initial_value_exact():
    p = ThreeModeParams.from_rates(0.7, 5.0, 3.0)
    assert analytic_solution(0.3 + 0.1j, -0.2j, p, 0.0) == (0.3 + 0.1j, -0.2j)


def test_lossless_real_spectrum_is_bounded():
    p = ThreeModeParams.from_rates(1.0, 10.0, 0.0)
    t = np.linspace(0, 500, 5001)
    Ps, _ = analytic_solution(1.0, 0.0, p, t)
    assert np.max(np.abs(Ps)) < 2.0


def test_exceptional_point_is_reported():
    # with gamma = 0 and no mismatch the generator is nilpotent
    with pytest.raises(DegenerateEigenbasisError):
        analytic_solution(1.0, 0.0, ThreeModeParams.from_rates(1.0, 0.0, 0.0), 1.0)


def test_analytic_against_ode_oracle():
    p = ThreeModeParams.from_rates(1.0, 6.0, 4.0)
    M = coupling_matrix(p)
    t_end = 10.0 / eigenvalues(p)[0].imag
    y0 = np.array([0.8 + 0.1j, -0.3j])
    sol = solve_ivp(lambda t, y: -1j * (M @ y), (0, t_end), y0, method="DOP853", rtol=1e-13, atol=1e-15,
                    dense_output=True)
    t = np.linspace(0, t_end, 201)
    ref = sol.sol(t)
    Ps, Pi = analytic_solution(y0[0], y0[1], p, t)
    scale = np.abs(ref).max(axis=0)
    assert np.max(np.abs(Ps - ref[0]) / scale) < 1e-8
    assert np.max(np.abs(Pi - ref[1]) / scale) < 1e-8


def test_pump_only_fixed_point():
    p = ThreeModeParams.from_rates(1.0, 10.0, 5.0)
    n0 = 2.0
    tr = integrate_three_mode(ThreeModeState(math.sqrt(n0), 0j, 0j), p, 1e-3, 5.0, record_every=100)
    assert np.all(tr.phis == 0) and np.all(tr.phii == 0)
    np.testing.assert_allclose(np.abs(tr.phi0) ** 2, n0, rtol=1e-12)
    expected = np.exp(-1j * p.U_d * n0 * tr.t)
    np.testing.assert_allclose(tr.phi0 / math.sqrt(n0), expected, atol=1e-10)


def test_hermitian_three_mode_conserves_population():
    p = ThreeModeParams.from_rates(1.0, 3.0, 0.0)
    s = ThreeModeState(1.0, 0.4 + 0.2j, 0.1j)
    tr = integrate_three_mode(s, p, 1e-3, 100.0, record_every=10_000)
    tot = tr.populations.sum(axis=1)
    assert tr.t[-1] == pytest.approx(100.0)
    assert np.max(np.abs(tot - tot[0])) / tot[0] < 1e-10


def test_undepleted_growth_matches_eigenvalue():
    # |phi0|^2 = 100 |phis|^2; the decaying branch is gone after ~1/gamma and the
    # pump is still undepleted a few ms later
    p = ThreeModeParams.from_rates(1.0, 10.0, 10.0)
    tr = integrate_three_mode(ThreeModeState(1.0, 0.1, 0j), p, 1e-3, 5.0, record_every=10)
    rate = fit_growth_rate(tr.t, np.abs(tr.phis), (1.0, 5.0))
    assert rate == pytest.approx(eigenvalues(p)[0].imag, rel=0.02)


def test_interaction_picture_modes_follow_three_mode_early():
    p = ThreeModeParams.from_rates(1.0, 8.0, 8.0)
    s0 = 1e-3
    tr = integrate_three_mode(ThreeModeState(1.0, s0, 0j), p, 1e-3, 10.0, record_every=100)
    # undepleted pump phase is exp(-i U n0 t); the linear modes are relative to it
    ps, _ = analytic_modes(s0, 0j, p, tr.t)
    np.testing.assert_allclose(np.abs(tr.phis), np.abs(ps), rtol=1e-3)


def test_step_size_guard():
    p = ThreeModeParams.from_rates(1.0, 100.0, 100.0)
    with pytest.raises(StepSizeError):
        integrate_three_mode(ThreeModeState(1.0, 0.1, 0j), p, 1e-3, 1.0)
