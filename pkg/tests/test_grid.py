import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhwm.grid import Grid, WaveField, read_snapshot, to_momentum, to_position, wavenumbers, write_snapshot


def test_wavenumbers_small_lattice():
    g = Grid.line(8, 2 * math.pi)
    np.testing.assert_allclose(wavenumbers(g)[0], [0, 1, 2, 3, -4, -3, -2, -1], atol=1e-14)


@pytest.mark.parametrize("n", [64, 1024, 4096])
def test_dk_for_box_length(n):
    g = Grid.line(n, 640.0)
    assert g.dk[0] == pytest.approx(2 * math.pi / 640, rel=1e-14)
    assert g.dx[0] * g.dk[0] * n == pytest.approx(2 * math.pi, rel=1e-12)


def test_square_grid_is_outer_product():
    g = Grid.square(16, 10.0)
    # sparse, broadcastable coordinates
    KX, KY = g.kcoords
    assert KX.shape == (16, 1) and KY.shape == (1, 16)
    np.testing.assert_array_equal(KX[:, 0], g.k_axes[0])
    np.testing.assert_array_equal(KY[0, :], g.k_axes[1])
    assert g.k_squared.shape == (16, 16)


def test_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        Grid.line(100, 10.0)


def test_plane_wave_lands_in_one_bin():
    g = Grid.line(256, 100.0)
    k0 = 7 * g.dk[0]
    phi = to_momentum(g, np.exp(1j * k0 * g.axes[0]))
    mag = np.abs(phi)
    j = g.on_grid_index(k0)[0]
    others = np.delete(mag, j)
    assert others.max() < 1e-12 * mag[j]


def test_gaussian_transform_matches_analytic():
    g = Grid.line(1024, 200.0)
    s = 3.0
    phi = to_momentum(g, np.exp(-g.axes[0] ** 2 / (2 * s**2)))
    k = g.k_axes[0]
    # (2 pi)^-1/2 * integral exp(-x^2/2s^2 - ikx) dx
    exact = s * np.exp(-(k**2) * s**2 / 2)
    np.testing.assert_allclose(phi, exact, atol=1e-8)


def test_off_centre_gaussian_phase():
    g = Grid.line(1024, 200.0)
    s, x0 = 2.0, 13.0
    phi = to_momentum(g, np.exp(-((g.axes[0] - x0) ** 2) / (2 * s**2)))
    k = g.k_axes[0]
    np.testing.assert_allclose(phi, s * np.exp(-(k**2) * s**2 / 2 - 1j * k * x0), atol=1e-8)


def _random_field(shape, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(32,), (128,), (16, 16)]))
def test_round_trip_and_parseval(seed, shape):
    g = Grid(shape, tuple(7.3 for _ in shape))
    f = _random_field(shape, seed)
    phi = to_momentum(g, f)
    back = to_position(g, phi)
    np.testing.assert_allclose(back, f, rtol=0, atol=1e-12 * np.abs(f).max())
    nx = np.sum(np.abs(f) ** 2) * g.cell_volume
    nk = np.sum(np.abs(phi) ** 2) * g.k_cell_volume
    assert nk == pytest.approx(nx, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_linearity(seed, a, b):
    g = Grid.line(64, 5.0)
    f, h = _random_field(64, seed), _random_field(64, seed + 1)
    lhs = to_momentum(g, a * f + b * h)
    rhs = a * to_momentum(g, f) + b * to_momentum(g, h)
    scale = max(1.0, np.abs(lhs).max())
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * scale)


def test_hermitian_symmetry_of_real_field():
    # n is even so the Nyquist bin has no partner; compare bins -k and k away from it
    g = Grid.line(128, 31.0)
    f = np.random.default_rng(3).normal(size=128).astype(complex)
    phi = to_momentum(g, f)
    n = 128
    for j in range(1, n // 2):
        assert abs(phi[-j] - np.conj(phi[j])) < 1e-12 * np.abs(phi).max()


def test_plane_wave_kinetic_energy():
    from nhwm.solver import SimState, energy
    from nhwm.units import physical_params

    p = physical_params()
    g = Grid.line(512, 80.0)
    k0 = 11 * g.dk[0]
    rho = 3.0
    st_ = SimState(WaveField(g, math.sqrt(rho) * np.exp(1j * k0 * g.axes[0])), p, interaction=0.0)
    N = rho * 80.0
    assert energy(st_) == pytest.approx(k0**2 / (2 * p.mass) * N, rel=1e-10)


def test_non_finite_input_rejected():
    g = Grid.line(16, 1.0)
    f = np.ones(16, dtype=complex)
    f[3] = np.nan
    with pytest.raises(FloatingPointError):
        to_momentum(g, f)


def test_snapshot_round_trip_is_bit_exact(tmp_path):
    g = Grid.square(8, 3.5)
    f = WaveField(g, _random_field((8, 8), 11))
    write_snapshot(tmp_path / "a.nhwm", f, 0.1 + 0.2)
    back, t = read_snapshot(tmp_path / "a.nhwm")
    assert t == 0.1 + 0.2
    assert back.grid == g
    assert back.psi.tobytes() == f.psi.tobytes()


def test_snapshot_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"hello\n\x00\x00")
    with pytest.raises(ValueError):
        read_snapshot(p)
