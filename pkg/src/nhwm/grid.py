"""Periodic 1D/2D grids, continuum-normalised spectral transforms, snapshots.

The momentum amplitudes follow the unitary continuum convention

    psi(x) = (2 pi)^(-d/2) \\int d^d k  exp(i k.x) phi(k)

so that ``sum |phi|^2 prod(dk)`` equals the atom number.  Position space is
the canonical representation; grids are centred on the origin with
``x_j = -L/2 + j dx``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "WaveField",
    "fft_workers",
    "wavenumbers",
    "to_momentum",
    "to_position",
    "write_snapshot",
    "read_snapshot",
    "SNAPSHOT_MAGIC",
]

SNAPSHOT_MAGIC = "NHWM1"


def fft_workers() -> int:
    """Worker count for scipy.fft, capped by the NHWM_THREADS variable."""
    cap = os.environ.get("NHWM_THREADS")
    if cap is None:
        return 1
    try:
        return max(1, int(cap))
    except ValueError:
        return 1


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice.

    Parameters
    ----------
    n : tuple of int
        Points per dimension, each a power of two.
    extent : tuple of float
        Domain length per dimension in um.
    """

    n: tuple
    extent: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        extent = tuple(float(v) for v in np.atleast_1d(self.extent))
        if len(n) not in (1, 2) or len(n) != len(extent):
            raise ValueError(f"need 1 or 2 dimensions with matching extents, got n={n}, extent={extent}")
        for v in n:
            if not _is_pow2(v):
                raise ValueError(f"grid sizes must be powers of two, got {v}")
        for v in extent:
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"extent must be positive and finite, got {v}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "extent", extent)

    @classmethod
    def line(cls, n: int, length: float) -> "Grid":
        return cls((n,), (length,))

    @classmethod
    def square(cls, n: int, length: float) -> "Grid":
        return cls((n, n), (length, length))

    @property
    def ndim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def dx(self) -> tuple:
        return tuple(L / n for L, n in zip(self.extent, self.n))

    @property
    def dk(self) -> tuple:
        return tuple(2.0 * math.pi / L for L in self.extent)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    @property
    def k_cell_volume(self) -> float:
        return float(np.prod(self.dk))

    @property
    def k_nyquist(self) -> tuple:
        return tuple(math.pi / d for d in self.dx)

    @cached_property
    def axes(self) -> tuple:
        """1D coordinate arrays, one per dimension."""
        return tuple(-L / 2 + d * np.arange(n) for L, d, n in zip(self.extent, self.dx, self.n))

    @cached_property
    def k_axes(self) -> tuple:
        """1D wavenumber arrays in FFT order, one per dimension."""
        return tuple(2.0 * math.pi * np.fft.fftfreq(n, d=d) for n, d in zip(self.n, self.dx))

    @cached_property
    def coords(self) -> tuple:
        """Broadcastable ``ij``-indexed coordinate meshes."""
        return tuple(np.meshgrid(*self.axes, indexing="ij", sparse=True))

    @cached_property
    def kcoords(self) -> tuple:
        return tuple(np.meshgrid(*self.k_axes, indexing="ij", sparse=True))

    @cached_property
    def k_squared(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for kd in self.kcoords:
            out = out + kd**2
        return out

    @cached_property
    def _shift_phase(self) -> np.ndarray:
        # exp(-i k x_min) * prod(dx) / (2 pi)^(d/2): makes the DFT approximate the continuum transform
        phase = np.ones(self.shape, dtype=complex)
        for kd, ax in zip(self.kcoords, self.axes):
            phase = phase * np.exp(-1j * kd * ax[0])
        return phase * (self.cell_volume / (2.0 * math.pi) ** (self.ndim / 2))

    def dealias_mask(self) -> np.ndarray:
        """Boolean 2/3-rule mask in FFT order (True = retained)."""
        mask = np.ones(self.shape, dtype=bool)
        for kd, kn in zip(self.kcoords, self.k_nyquist):
            mask = mask & (np.abs(kd) <= (2.0 / 3.0) * kn)
        return mask

    def contains_wavenumber(self, k) -> bool:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        return all(abs(kv) < kn for kv, kn in zip(k, self.k_nyquist))

    def on_grid_index(self, k, tol: float = 1e-9) -> tuple:
        """FFT index of wavenumber ``k`` (per dimension); ValueError if off-lattice."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        idx = []
        for kv, dk, n in zip(k, self.dk, self.n):
            j = kv / dk
            if abs(j - round(j)) > tol or abs(round(j)) >= n // 2:
                raise ValueError(f"wavenumber {kv} is not on the lattice (dk={dk}, n={n})")
            idx.append(int(round(j)) % n)
        return tuple(idx)


def wavenumbers(grid: Grid) -> tuple:
    """FFT-ordered wavenumber lattice per dimension (1/um)."""
    return grid.k_axes


def _check_finite(a: np.ndarray, what: str):
    if not np.all(np.isfinite(a)):
        bad = int(np.count_nonzero(~np.isfinite(a)))
        raise FloatingPointError(f"{what}: {bad} non-finite entries")


def to_momentum(grid: Grid, psi: np.ndarray, *, check: bool = True) -> np.ndarray:
    """Continuum-normalised momentum amplitudes phi(k) in FFT order."""
    if check:
        _check_finite(psi, "to_momentum")
    return sfft.fftn(psi, workers=fft_workers()) * grid._shift_phase


def to_position(grid: Grid, phi: np.ndarray, *, check: bool = True) -> np.ndarray:
    """Inverse of :func:`to_momentum`."""
    if check:
        _check_finite(phi, "to_position")
    return sfft.ifftn(phi / grid._shift_phase, workers=fft_workers())


@dataclass
class WaveField:
    """Condensate amplitude psi(x) on a grid, with a lazily cached momentum view."""

    grid: Grid
    psi: np.ndarray
    _phi: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != self.grid.shape:
            raise ValueError(f"field shape {psi.shape} does not match grid {self.grid.shape}")
        self.psi = psi

    @classmethod
    def from_momentum(cls, grid: Grid, phi: np.ndarray) -> "WaveField":
        return cls(grid, to_position(grid, phi))

    def set_psi(self, psi: np.ndarray):
        self.psi = psi
        self._phi = None

    def momentum(self) -> np.ndarray:
        if self._phi is None:
            self._phi = to_momentum(self.grid, self.psi)
        return self._phi

    def atom_number(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.cell_volume)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def copy(self) -> "WaveField":
        return WaveField(self.grid, self.psi.copy())


# --- snapshots -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_snapshot(path, field: WaveField, t: float):
    """Header line then raw little-endian complex128 of psi(x), row-major."""
    g = field.grid
    parts = [SNAPSHOT_MAGIC, str(g.ndim), *(str(n) for n in g.n), *(_fmt(L) for L in g.extent), _fmt(t)]
    header = (" ".join(parts) + "\n").encode("ascii")
    body = np.ascontiguousarray(field.psi, dtype="<c16").tobytes(order="C")
    Path(path).write_bytes(header + body)


def read_snapshot(path) -> tuple:
    """Returns ``(WaveField, t)``."""
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    tokens = raw[:nl].decode("ascii").split()
    if not tokens or tokens[0] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not an {SNAPSHOT_MAGIC} snapshot")
    ndim = int(tokens[1])
    if ndim not in (1, 2) or len(tokens) != 2 + 2 * ndim + 1:
        raise ValueError(f"{path}: malformed header {tokens!r}")
    n = tuple(int(v) for v in tokens[2:2 + ndim])
    extent = tuple(float(v) for v in tokens[2 + ndim:2 + 2 * ndim])
    t = float(tokens[-1])
    grid = Grid(n, extent)
    data = np.frombuffer(raw[nl + 1:], dtype="<c16")
    if data.size != int(np.prod(n)):
        raise ValueError(f"{path}: expected {int(np.prod(n))} samples, found {data.size}")
    return WaveField(grid, data.reshape(n).astype(complex)), t
