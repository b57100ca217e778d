import math

import pytest
from hypothesis import given, strategies as st
from scipy import constants

from nhwm.units import (RB87_MASS_KG, UNITS, hz_to_rad_per_ms, physical_params, reduced_interaction_2d,
                        rubidium87_params)


def test_rb87_mass_internal_units():
    # m / (hbar * 1 ms / 1 um^2), evaluated from CODATA values
    expected = 86.909180527 * 1.66053906660e-27 / (1.054571817e-34 * 1e-3 / 1e-12)
    assert UNITS.mass_from_si(RB87_MASS_KG) == pytest.approx(expected, rel=1e-9)
    assert UNITS.mass_from_si(RB87_MASS_KG) == pytest.approx(1.3684804325, rel=1e-9)


def test_trap_frequency_conversion():
    assert hz_to_rad_per_ms(100.0) == pytest.approx(0.6283185307179586, rel=1e-14)


def test_derived_1d_quantities_at_100hz():
    p = physical_params()
    assert p.sigma_perp == pytest.approx(1.078427, rel=1e-6)
    assert p.U3D == pytest.approx(0.0486684, rel=1e-5)
    assert p.U1D == pytest.approx(0.00666018, rel=1e-5)


def test_u2d_at_200hz_independent_evaluation():
    # sigma = sqrt(hbar/(m w)) and U3D = 4 pi hbar^2 a / m, done in SI then converted
    m = RB87_MASS_KG
    w = 2 * math.pi * 200.0
    sigma_si = math.sqrt(constants.hbar / (m * w))
    u3d_si = 4 * math.pi * constants.hbar**2 * 5.3e-9 / m  # J m^3
    u2d_si = u3d_si / (math.sqrt(2 * math.pi) * sigma_si)  # J m^2
    u2d = u2d_si / constants.hbar * 1e-3 / 1e-12  # hbar/ms * um^2
    p = physical_params(omega_perp_hz=200.0)
    assert reduced_interaction_2d(p) == pytest.approx(u2d, rel=1e-10)
    assert p.sigma_perp == pytest.approx(0.7626, rel=1e-3)


def test_u2d_grows_with_confinement():
    values = [physical_params(omega_perp_hz=f).U2D for f in (10, 50, 100, 400, 1600, 1e5)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_doubling_trap_frequency_scales_u2d_by_sqrt2():
    a = physical_params(omega_perp_hz=150.0).U2D
    b = physical_params(omega_perp_hz=300.0).U2D
    assert b / a == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_rubidium87_params_takes_rad_per_ms():
    p = rubidium87_params(hz_to_rad_per_ms(100.0))
    assert p.U1D == pytest.approx(physical_params().U1D, rel=1e-12)


def test_rejects_attractive_and_nonpositive():
    from nhwm.units import PhysicalParams

    with pytest.raises(ValueError):
        PhysicalParams(mass=1.0, a_s=-1e-3, omega_perp=1.0)
    with pytest.raises(ValueError):
        PhysicalParams(mass=0.0, a_s=1e-3, omega_perp=1.0)
    with pytest.raises(ValueError):
        PhysicalParams(mass=1.0, a_s=1e-3, omega_perp=0.0)


finite = st.floats(min_value=1e-30, max_value=1e30, allow_nan=False, allow_infinity=False)


@given(finite)
def test_si_round_trips(x):
    for a, b in ((UNITS.mass_from_si, UNITS.mass_to_si), (UNITS.length_from_si, UNITS.length_to_si),
                 (UNITS.time_from_si, UNITS.time_to_si), (UNITS.rate_from_si, UNITS.rate_to_si),
                 (UNITS.velocity_from_si, UNITS.velocity_to_si), (UNITS.energy_from_si, UNITS.energy_to_si)):
        assert b(a(x)) == pytest.approx(x, rel=1e-12)
