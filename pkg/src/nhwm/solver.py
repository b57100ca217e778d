"""Split-step propagation of the GPE with momentum-selective loss.

One step of length dt applies, in order,

1. a half step diagonal in k:  exp(-i [hbar k^2/2m + dE(k)] dt/2 - gamma(k) dt/2)
2. a full step diagonal in x:  exp(-i [V(x) + U |psi(x)|^2] dt)
3. the same k-space half step again.

The norm removed by the two k-space half steps is accumulated exactly in
``SimState.N_lost`` so that ``N + N_lost`` stays at ``N0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np
import scipy.fft as sfft

from .grid import Grid, WaveField, fft_workers
from .units import UNITS, PhysicalParams

__all__ = [
    "LossModel",
    "SimState",
    "Observation",
    "NumericalError",
    "StepSizeWarning",
    "step",
    "evolve",
    "signal_strength",
    "momentum_density",
    "energy",
    "loss_rate_check",
    "rms_width",
]


class NumericalError(RuntimeError):
    """Raised when the propagated field stops being finite."""


class StepSizeWarning(UserWarning):
    """Nonlinear phase per step is large enough to spoil accuracy."""


MAX_NONLINEAR_PHASE = 0.5


@dataclass(frozen=True)
class LossModel:
    """Momentum-dependent loss rate gamma(k) (1/ms) and light shift dE(k) (hbar/ms).

    Use the constructors :meth:`none`, :meth:`gaussian`, :meth:`flat`,
    :meth:`tabulated` and :meth:`eit` rather than the raw fields.

    For 2D grids ``axes`` selects the dimensions the profile depends on; a
    Gaussian stripe along k_y that ignores k_x is ``axes=(1,)``.
    """

    kind: str = "none"
    amplitude: float = 0.0
    center: tuple = ()
    sigma: float = 1.0
    axes: tuple | None = None
    k_table: np.ndarray | None = None
    gamma_table: np.ndarray | None = None
    delta_e_table: np.ndarray | None = None
    t_on: float = 0.0
    delta_e_scale: float = 1.0
    source: object = None

    @classmethod
    def none(cls) -> "LossModel":
        return cls()

    @classmethod
    def flat(cls, rate: float, t_on: float = 0.0) -> "LossModel":
        return cls(kind="flat", amplitude=float(rate), t_on=t_on)

    @classmethod
    def gaussian(cls, amplitude: float, center, sigma: float, axes=None, t_on: float = 0.0) -> "LossModel":
        if amplitude < 0:
            raise ValueError("loss amplitude must be nonnegative")
        if not sigma > 0:
            raise ValueError("sigma_loss must be positive")
        center = tuple(float(c) for c in np.atleast_1d(center))
        return cls(kind="gaussian", amplitude=float(amplitude), center=center, sigma=float(sigma),
                   axes=None if axes is None else tuple(axes), t_on=t_on)

    @classmethod
    def tabulated(cls, k, gamma, delta_e=None, axis: int = 0, t_on: float = 0.0,
                  delta_e_scale: float = 1.0, source=None) -> "LossModel":
        k = np.asarray(k, dtype=float)
        gamma = np.asarray(gamma, dtype=float)
        delta_e = np.zeros_like(gamma) if delta_e is None else np.asarray(delta_e, dtype=float)
        if k.ndim != 1 or k.shape != gamma.shape or k.shape != delta_e.shape:
            raise ValueError("table arrays must be 1D and of equal length")
        if np.any(np.diff(k) <= 0):
            raise ValueError("table wavenumbers must be strictly increasing")
        if np.any(gamma < 0) or not np.all(np.isfinite(gamma)) or not np.all(np.isfinite(delta_e)):
            raise ValueError("tabulated gamma must be finite and nonnegative")
        return cls(kind="tabulated", k_table=k, gamma_table=gamma, delta_e_table=delta_e,
                   axes=(axis,), t_on=t_on, delta_e_scale=delta_e_scale, source=source)

    @classmethod
    def eit(cls, lam, k_samples, mass: float, axis: int = 0, t_on: float = 0.0,
            delta_e_scale: float = 1.0) -> "LossModel":
        """Tabulate gamma(k), dE(k) from Lambda-system parameters ``lam``."""
        from .eit import loss_spectrum

        table = loss_spectrum(lam, k_samples, mass)
        return cls.tabulated(table.k, table.gamma, table.delta_e, axis=axis, t_on=t_on,
                             delta_e_scale=delta_e_scale, source=lam)

    @property
    def is_none(self) -> bool:
        return self.kind == "none"

    def with_scale(self, delta_e_scale: float) -> "LossModel":
        return replace(self, delta_e_scale=delta_e_scale)

    def gamma_on(self, grid: Grid) -> np.ndarray:
        """gamma(k) on the FFT-ordered k lattice of ``grid``."""
        shape = grid.shape
        if self.kind == "none":
            return np.zeros(shape)
        if self.kind == "flat":
            return np.full(shape, self.amplitude)
        if self.kind == "gaussian":
            axes = self.axes if self.axes is not None else tuple(range(grid.ndim))
            if len(self.center) != len(axes):
                raise ValueError(f"loss center {self.center} does not match axes {axes}")
            r2 = np.zeros(shape)
            for c, ax in zip(self.center, axes):
                r2 = r2 + (grid.kcoords[ax] - c) ** 2
            return self.amplitude * np.exp(-r2 / (2.0 * self.sigma**2))
        if self.kind == "tabulated":
            kk = grid.kcoords[self.axes[0]]
            return np.broadcast_to(np.interp(kk, self.k_table, self.gamma_table), shape).copy()
        raise ValueError(f"unknown loss kind {self.kind!r}")

    def delta_e_on(self, grid: Grid) -> np.ndarray:
        if self.kind != "tabulated":
            return np.zeros(grid.shape)
        kk = grid.kcoords[self.axes[0]]
        de = np.interp(kk, self.k_table, self.delta_e_table) * self.delta_e_scale
        return np.broadcast_to(de, grid.shape).copy()


@dataclass
class SimState:
    """Everything needed to advance the condensate.

    ``step`` and ``evolve`` mutate the state in place and also return it.
    """

    field: WaveField
    params: PhysicalParams
    interaction: float
    dt: float = 1e-3
    t: float = 0.0
    N0: float | None = None
    N_lost: float = 0.0
    potential: np.ndarray | None = None
    loss: LossModel = field(default_factory=LossModel.none)
    dealias: bool = False
    steps_taken: int = 0
    _ops: dict = field(default_factory=dict, repr=False, compare=False)
    _warned: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N0 is None:
            self.N0 = self.field.atom_number()
        if self.potential is None:
            self.potential = np.zeros(self.grid.shape)
        self.potential = np.broadcast_to(np.asarray(self.potential, dtype=float), self.grid.shape)

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @property
    def psi(self) -> np.ndarray:
        return self.field.psi

    def atom_number(self) -> float:
        return self.field.atom_number()

    def loss_active(self, t: float | None = None) -> bool:
        t = self.t if t is None else t
        return (not self.loss.is_none) and t >= self.loss.t_on

    def copy(self) -> "SimState":
        return SimState(field=self.field.copy(), params=self.params, interaction=self.interaction,
                        dt=self.dt, t=self.t, N0=self.N0, N_lost=self.N_lost,
                        potential=np.array(self.potential), loss=self.loss, dealias=self.dealias,
                        steps_taken=self.steps_taken)

    # cached split-step factors, keyed by (dt, loss on/off)
    def _operators(self, dt: float, lossy: bool):
        key = (dt, lossy, id(self.loss), id(self.potential), self.dealias)
        ops = self._ops.get(key)
        if ops is None:
            g = self.grid
            hbar = UNITS.hbar
            e_k = hbar * g.k_squared / (2.0 * self.params.mass)
            gamma = np.zeros(g.shape)
            if lossy:
                e_k = e_k + self.loss.delta_e_on(g) / hbar
                gamma = self.loss.gamma_on(g)
                if np.any(gamma < 0):
                    raise ValueError("loss model produced negative rates")
            # combined FFT normalisation is folded into the forward transform
            half = np.exp(-1j * e_k * dt / 2.0 - gamma * dt / 2.0)
            if self.dealias:
                half = half * g.dealias_mask()
            keep = np.exp(-gamma * dt)
            # |phi|^2 prod(dk) = |fft(psi)|^2 * prod(dx) / n_total
            scale = g.cell_volume / int(np.prod(g.n))
            ops = dict(half=half, leak=(1.0 - keep) if lossy else None, norm_scale=scale,
                       vdt=self.potential * dt / hbar)
            self._ops = {key: ops}
            ops = self._ops[key]
        return ops


def _half_step(psi_hat: np.ndarray, ops) -> float:
    """Applies the k-space factor in place and returns the norm it removed."""
    lost = 0.0
    if ops["leak"] is not None:
        w = psi_hat.real**2 + psi_hat.imag**2
        lost = float(np.sum(w * ops["leak"])) * ops["norm_scale"]
    psi_hat *= ops["half"]
    return lost


def step(state: SimState, dt: float | None = None) -> SimState:
    """Advance ``state`` by one Strang step (default ``state.dt``).

    A negative ``dt`` runs the unitary part backwards; it is rejected while
    loss is active because dissipation cannot be reversed.
    """
    dt = state.dt if dt is None else dt
    if dt == 0 or not math.isfinite(dt):
        raise ValueError(f"invalid time step {dt}")
    lossy = state.loss_active()
    if dt < 0 and lossy:
        raise ValueError("cannot step backwards with loss switched on")
    ops = state._operators(dt, lossy)
    workers = fft_workers()
    hbar = UNITS.hbar

    psi_hat = sfft.fftn(state.field.psi, workers=workers)
    lost = _half_step(psi_hat, ops)
    psi = sfft.ifftn(psi_hat, workers=workers, overwrite_x=True)

    dens = psi.real**2 + psi.imag**2
    if state.interaction != 0.0 and not state._warned:
        phase = abs(state.interaction) * float(dens.max()) * abs(dt) / hbar
        if phase > MAX_NONLINEAR_PHASE:
            warnings.warn(f"nonlinear phase per step {phase:.3g} rad exceeds {MAX_NONLINEAR_PHASE}; "
                          f"reduce dt", StepSizeWarning, stacklevel=2)
            state._warned = True
    psi *= np.exp(-1j * (ops["vdt"] + state.interaction * dens * dt / hbar))

    psi_hat = sfft.fftn(psi, workers=workers, overwrite_x=True)
    lost += _half_step(psi_hat, ops)
    psi = sfft.ifftn(psi_hat, workers=workers, overwrite_x=True)

    if not math.isfinite(lost) or not np.isfinite(psi[(0,) * psi.ndim]) or not np.isfinite(dens.sum()):
        raise NumericalError(f"non-finite field after step {state.steps_taken + 1} (t={state.t + dt:g} ms)")
    state.field.set_psi(psi)
    state.N_lost += lost
    state.steps_taken += 1
    state.t = state.t + dt
    return state


@dataclass(frozen=True)
class Observation:
    """Read-only view of the state handed to observers."""

    t: float
    grid: Grid
    psi: np.ndarray
    N: float
    N_lost: float
    N0: float
    params: PhysicalParams
    interaction: float
    potential: np.ndarray
    loss: LossModel

    @property
    def field(self) -> WaveField:
        return WaveField(self.grid, self.psi)

    def momentum(self) -> np.ndarray:
        return self.field.momentum()


def _observe(state: SimState) -> Observation:
    psi = state.field.psi.copy()
    psi.setflags(write=False)
    return Observation(t=state.t, grid=state.grid, psi=psi, N=state.atom_number(), N_lost=state.N_lost,
                       N0=state.N0, params=state.params, interaction=state.interaction,
                       potential=state.potential, loss=state.loss)


def evolve(state: SimState, t_end: float, observers: Mapping[str, Callable] | None = None,
           stride: float = 0.1, callbacks=(), callback_stride: float | None = None):
    """Step ``state`` until ``t_end`` and record observables.

    Parameters
    ----------
    observers : mapping name -> callable(Observation) -> float
        Recorded every ``stride`` ms alongside ``t``, ``N`` and ``N_lost``.
    callbacks : iterable of callable(Observation)
        Called every ``callback_stride`` ms (e.g. snapshot writers).

    Returns
    -------
    state, series
        ``series`` maps column names to 1D float arrays.
    """
    if t_end < state.t - 1e-12 * max(1.0, abs(t_end)):
        raise ValueError(f"t_end={t_end} lies before the current time {state.t}")
    observers = dict(observers or {})
    dt = state.dt
    n_steps = max(0, int(math.ceil((t_end - state.t) / dt - 1e-9)))
    obs_every = max(1, int(round(stride / dt)))
    cb_every = None if callback_stride is None else max(1, int(round(callback_stride / dt)))

    cols = {"t": [], "N": [], "N_lost": [], **{name: [] for name in observers}}

    def record():
        ob = _observe(state)
        cols["t"].append(ob.t)
        cols["N"].append(ob.N)
        cols["N_lost"].append(ob.N_lost)
        for name, fn in observers.items():
            cols[name].append(float(fn(ob)))
        return ob

    t0 = state.t
    ob = record()
    for cb in callbacks:
        cb(ob)
    for i in range(1, n_steps + 1):
        target = t0 + i * dt
        if target <= t_end + 1e-9 * dt:
            step(state, dt)
            state.t = target
        else:
            step(state, t_end - state.t)
            state.t = t_end
        last = i == n_steps
        if i % obs_every == 0 or last:
            ob = record()
        if cb_every is not None and (i % cb_every == 0 or last):
            ob = _observe(state)
            for cb in callbacks:
                cb(ob)
    return state, {k: np.asarray(v, dtype=float) for k, v in cols.items()}


# --- observables -------------------------------------------------------------

def momentum_density(field: WaveField) -> np.ndarray:
    """|phi(k)|^2 in FFT order; sums to N with weight prod(dk)."""
    phi = field.momentum()
    return phi.real**2 + phi.imag**2


def signal_strength(field: WaveField, k_center, K: float) -> float:
    """Atoms within distance K of ``k_center`` in momentum space (interval or disk)."""
    g = field.grid
    kc = np.atleast_1d(np.asarray(k_center, dtype=float))
    if kc.size != g.ndim:
        raise ValueError(f"k_center needs {g.ndim} components")
    if not K > 0:
        raise ValueError("band half-width K must be positive")
    for c, kn in zip(kc, g.k_nyquist):
        if abs(c) + K >= kn:
            raise ValueError(f"band around {c} with half-width {K} exceeds the Nyquist wavenumber {kn}")
    r2 = np.zeros(g.shape)
    for c, kd in zip(kc, g.kcoords):
        r2 = r2 + (kd - c) ** 2
    mask = r2 <= K**2
    return float(np.sum(momentum_density(field)[mask]) * g.k_cell_volume)


def energy(state: SimState, include_light_shift: bool = True) -> float:
    """Mean-field energy functional (hbar/ms)."""
    g = state.grid
    rho_k = momentum_density(state.field)
    e_k = UNITS.hbar**2 * g.k_squared / (2.0 * state.params.mass)
    if include_light_shift and state.loss_active():
        e_k = e_k + state.loss.delta_e_on(g)
    dens = state.field.density()
    kinetic = float(np.sum(e_k * rho_k)) * g.k_cell_volume
    local = float(np.sum(state.potential * dens + 0.5 * state.interaction * dens**2)) * g.cell_volume
    return kinetic + local


def loss_rate_check(state: SimState) -> float:
    """Relative mismatch between dN/dt and the instantaneous loss rate.

    Takes two steps on a copy of ``state``; dN/dt is the centred difference
    over them and the loss term is evaluated at the middle point.  Returns 0
    when the loss term vanishes identically.
    """
    probe = state.copy()
    n_a = probe.atom_number()
    step(probe)
    g = probe.grid
    gamma = probe.loss.gamma_on(g) if probe.loss_active() else np.zeros(g.shape)
    rate = 2.0 * float(np.sum(gamma * momentum_density(probe.field))) * g.k_cell_volume
    step(probe)
    n_b = probe.atom_number()
    dndt = (n_b - n_a) / (2.0 * state.dt)
    if rate == 0.0:
        return abs(dndt)
    return abs(dndt + rate) / rate


def rms_width(field: WaveField, axis: int = 0) -> float:
    """Standard deviation of the density along ``axis`` (um)."""
    g = field.grid
    dens = field.density()
    other = tuple(a for a in range(g.ndim) if a != axis)
    prof = dens.sum(axis=other) if other else dens
    x = g.axes[axis]
    w = prof / prof.sum()
    mean = float(np.sum(w * x))
    return math.sqrt(float(np.sum(w * (x - mean) ** 2)))
