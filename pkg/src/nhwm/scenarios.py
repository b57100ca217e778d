"""Initial-state builders for the three simulated experiments.

* ``homogeneous``: periodic 1D condensate with a seeded plane-wave signal.
* ``box``: 1D condensate in a smooth-walled box with an imprinted signal
  wave packet and loss near the idler wavenumber.
* ``collision2d``: three Gaussian clouds meeting at the origin, with a loss
  stripe in k_y around the missing fourth momentum.

Default values here are not published numbers; they were chosen so that the
dynamics sit in the regime where the three-mode theory applies (see README).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .eit import LambdaParams
from .grid import Grid, WaveField, to_momentum, to_position
from .solver import LossModel, SimState, energy
from .units import RB87_MASS_KG, UNITS, PhysicalParams, physical_params

__all__ = [
    "ScenarioConfig",
    "ImprintWarning",
    "ConvergenceError",
    "VARIANTS",
    "ground_state_imaginary_time",
    "box_potential",
    "imprint_signal",
    "imprint_norm",
    "build_homogeneous_1d",
    "build_box_1d",
    "build_collision_2d",
    "build",
    "default_eit_params",
    "cloud_overlap",
    "collision_velocities",
    "collision_momenta",
    "collision_mismatch",
    "LOSS_KINDS",
]

VARIANTS = ("homogeneous", "box", "collision2d")
LOSS_KINDS = ("none", "gaussian", "eit")


class ImprintWarning(UserWarning):
    """The imprinted signal is too large for the undepleted-pump picture."""


class ConvergenceError(RuntimeError):
    pass


def default_eit_params() -> LambdaParams:
    """Lambda-system settings whose narrow resonance sits at k = -2.7/um for 87Rb.

    Counter-propagating probe and coupling beams (cos theta = +1, -1) double
    the Doppler sensitivity of the two-photon detuning.  The coupling light
    shift Omega_c^2/(4 Delta0) fixes the resonance position.  Gamma/Delta0 and
    the Raman Rabi frequency Omega_p Omega_c/(2 Delta0) trade peak height
    against the off-resonant tail at +k_s, which damps the signal itself.
    """
    return LambdaParams(Omega_p=51.0, Omega_c=2112.68, Delta0=13468.0, Gamma=673.4,
                        q=2.0 * math.pi / 0.297, theta_p=0.0, theta_c=math.pi)


@dataclass
class ScenarioConfig:
    """Flat description of one run; lengths in um, times in ms, rates in 1/ms."""

    variant: str = "box"
    # physics (SI at this boundary)
    mass_kg: float = RB87_MASS_KG
    a_s_m: float = 5.3e-9
    omega_perp_hz: float = 100.0
    # grid
    n_points: int = 4096
    extent_um: float = 800.0
    # condensate
    atom_number: float = 3.2e4
    box_length_um: float = 640.0
    wall_width_um: float = 2.0
    wall_height: float = 50.0
    k0_per_um: float = 0.0
    # signal
    k_s_per_um: float = 2.7
    signal_fraction: float = 0.005
    signal_amplitude: float | None = None
    signal_variance_um2: float = 400.0
    x0_um: float = -150.0
    band_half_width_per_um: float = 1.0
    # loss
    loss: str = "gaussian"
    gamma_a_per_ms: float | None = None
    k_loss_per_um: float | None = None
    sigma_loss_per_um: float = 0.3
    t_on_ms: float = 0.0
    delta_e_scale: float = 1.0
    eit: LambdaParams | None = None
    # 2D collision
    cloud_atoms: float = 12000.0
    cloud_width_um: float = 50.0
    v_pump_um_per_ms: float = 0.4
    v_signal_um_per_ms: float = 0.66
    t_collision_ms: float = 290.0
    # propagation
    dt_ms: float = 1e-3
    t_end_ms: float = 50.0
    dealias: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown scenario variant {self.variant!r}; expected one of {VARIANTS}")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss selection {self.loss!r}; expected one of {LOSS_KINDS}")

    @classmethod
    def box_default(cls, **kw) -> "ScenarioConfig":
        return cls(variant="box", **kw)

    @classmethod
    def homogeneous_default(cls, **kw) -> "ScenarioConfig":
        base = dict(variant="homogeneous", n_points=1024, extent_um=2.0 * math.pi * 64 / 2.7,
                    atom_number=None, signal_fraction=1e-4, sigma_loss_per_um=0.3, dt_ms=1e-3,
                    t_end_ms=40.0)
        base.update(kw)
        if base["atom_number"] is None:
            base["atom_number"] = 50.0 * base["extent_um"]
        return cls(**base)

    @classmethod
    def collision_default(cls, **kw) -> "ScenarioConfig":
        # dilute clouds: the overlap density has to stay well below dE/U so the
        # closed channel stays closed without loss; that needs a 1 mm box.
        base = dict(variant="collision2d", n_points=512, extent_um=1024.0, omega_perp_hz=200.0,
                    atom_number=36000.0, cloud_width_um=50.0, t_collision_ms=290.0,
                    sigma_loss_per_um=0.15, band_half_width_per_um=0.4, dt_ms=0.1, loss="gaussian",
                    t_end_ms=540.0)
        base.update(kw)
        return cls(**base)

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)

    def physical(self) -> PhysicalParams:
        return physical_params(self.mass_kg, self.a_s_m, self.omega_perp_hz)

    def grid(self) -> Grid:
        if self.variant == "collision2d":
            return Grid.square(self.n_points, self.extent_um)
        return Grid.line(self.n_points, self.extent_um)

    @property
    def k_idler(self) -> float:
        return 2.0 * self.k0_per_um - self.k_s_per_um

    def mismatch(self) -> float:
        """Energy mismatch dE of the degenerate process (hbar/ms)."""
        p = self.physical()
        return float(p.kinetic_energy(self.k_s_per_um) + p.kinetic_energy(self.k_idler)
                     - 2.0 * p.kinetic_energy(self.k0_per_um))

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.eit is not None:
            d["eit"] = asdict(self.eit)
        return d


# --- ground states -------------------------------------------------------------

def ground_state_imaginary_time(grid: Grid, V, params: PhysicalParams, N: float, interaction: float,
                                dtau: float = 1e-2, tol: float = 1e-10, max_iter: int = 200_000,
                                psi_init=None, check_every: int = 10, field_tol: float | None = None) -> WaveField:
    """Normalised gradient flow: split-step in imaginary time, renormalised to N each step.

    Stops once the relative energy change per step drops below ``tol``.  The
    energy is quadratic in the field error, so for a field accurate beyond
    ~sqrt(tol) also pass ``field_tol``, a bound on the relative field change
    per step.
    """
    if not N > 0:
        raise ValueError("atom number must be positive")
    V = np.broadcast_to(np.asarray(V, dtype=float), grid.shape)
    if not np.all(np.isfinite(V)):
        raise ValueError("potential must be finite (bounded below)")
    dv = grid.cell_volume
    if psi_init is None:
        if interaction > 0:
            # Thomas-Fermi profile at the chemical potential that holds N atoms
            vmin = float(V.min())
            lo, hi = vmin, vmin + 1.0
            while np.sum(np.clip(hi - V, 0, None)) * dv / interaction < N:
                hi = vmin + 2.0 * (hi - vmin)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if np.sum(np.clip(mid - V, 0, None)) * dv / interaction < N:
                    lo = mid
                else:
                    hi = mid
            psi = np.sqrt(np.clip(hi - V, 0, None) / interaction) + 1e-6 * np.exp(-(V - vmin))
        else:
            psi = np.exp(-(V - V.min()))
        psi = psi.astype(complex)
    else:
        psi = np.array(psi_init, dtype=complex)

    e_k = UNITS.hbar * grid.k_squared / (2.0 * params.mass)
    half = np.exp(-e_k * dtau / 2.0)

    def normalise(f):
        return f * math.sqrt(N / (np.sum(np.abs(f) ** 2) * dv))

    def energy_of(f):
        st = SimState(WaveField(grid, f), params, interaction, potential=V)
        return energy(st)

    psi = normalise(psi)
    psi_prev = psi.copy()
    e_old = energy_of(psi)
    for it in range(1, max_iter + 1):
        phi = to_momentum(grid, psi, check=False) * half
        psi = to_position(grid, phi, check=False)
        psi = psi * np.exp(-(V + interaction * np.abs(psi) ** 2) * dtau / UNITS.hbar)
        psi = to_position(grid, to_momentum(grid, psi, check=False) * half, check=False)
        psi = normalise(psi)
        if it % check_every == 0:
            e_new = energy_of(psi)
            if not math.isfinite(e_new):
                raise ConvergenceError(f"imaginary-time flow diverged at iteration {it}")
            change = abs(e_new - e_old) / max(abs(e_new), 1e-300) / check_every
            e_old = e_new
            done = change < tol
            if done and field_tol is not None:
                moved = np.linalg.norm(psi - psi_prev) / np.linalg.norm(psi) / check_every
                done = moved < field_tol
            if done:
                break
        if field_tol is not None and (it + 1) % check_every == 0:
            psi_prev = psi.copy()
    else:
        raise ConvergenceError(f"no convergence after {max_iter} iterations (relative change {change:.3g})")
    # fix the global phase so the field is real and nonnegative
    idx = np.unravel_index(np.argmax(np.abs(psi)), psi.shape)
    psi = psi * np.exp(-1j * np.angle(psi[idx]))
    return WaveField(grid, np.abs(psi).astype(complex))


def box_potential(x, length: float, wall_width: float, height: float):
    """V0 [1 - (tanh((x + L/2)/w) - tanh((x - L/2)/w)) / 2]: zero inside, V0 outside."""
    x = np.asarray(x, dtype=float)
    return height * (1.0 - 0.5 * (np.tanh((x + length / 2) / wall_width) - np.tanh((x - length / 2) / wall_width)))


# --- signal imprint ---------------------------------------------------------------

def imprint_norm(A_s: float, sigma: float) -> float:
    """Atom number of A_s exp(-(x-x0)^2/(2 sigma)), sigma being a variance."""
    return A_s**2 * math.sqrt(math.pi * sigma)


def imprint_signal(field: WaveField, A_s: float, sigma: float, x0: float, k_s: float) -> WaveField:
    """Return ``field + A_s exp(-(x - x0)^2 / (2 sigma) + i k_s x)``; sigma is a variance (um^2)."""
    if A_s == 0:
        return field.copy()
    if not sigma > 0:
        raise ValueError("imprint variance must be positive")
    g = field.grid
    if g.ndim != 1:
        raise ValueError("signal imprinting is one-dimensional")
    x = g.axes[0]
    N = field.atom_number()
    added = imprint_norm(A_s, sigma)
    if N > 0 and added > 0.05 * N:
        warnings.warn(f"imprint holds {added / N:.1%} of the atoms (> 5%)", ImprintWarning, stacklevel=2)
    packet = A_s * np.exp(-(x - x0) ** 2 / (2.0 * sigma) + 1j * k_s * x)
    return WaveField(g, field.psi + packet)


# --- loss selection -------------------------------------------------------------------

def _loss_model(cfg: ScenarioConfig, grid: Grid, params: PhysicalParams, center, axes=None) -> LossModel:
    if cfg.loss == "none":
        return LossModel.none()
    if cfg.loss == "gaussian":
        amp = cfg.gamma_a_per_ms if cfg.gamma_a_per_ms is not None else cfg.mismatch() / UNITS.hbar
        return LossModel.gaussian(amp, center, cfg.sigma_loss_per_um, axes=axes, t_on=cfg.t_on_ms)
    lam = cfg.eit if cfg.eit is not None else default_eit_params()
    axis = 0 if axes is None else axes[0]
    k = np.sort(grid.k_axes[axis])
    return LossModel.eit(lam, k, params.mass, axis=axis, t_on=cfg.t_on_ms, delta_e_scale=cfg.delta_e_scale)


# --- builders -----------------------------------------------------------------------------

def build_homogeneous_1d(cfg: ScenarioConfig) -> SimState:
    """Plane-wave pump with a fraction A_s seeded at k_s in a periodic box."""
    if cfg.variant != "homogeneous":
        raise ValueError("expected a homogeneous configuration")
    params = cfg.physical()
    grid = cfg.grid()
    for k in (cfg.k0_per_um, cfg.k_s_per_um, cfg.k_idler):
        grid.on_grid_index(k)
    N, L, A = cfg.atom_number, grid.extent[0], cfg.signal_fraction
    if not 0 <= A < 1:
        raise ValueError("seed fraction must lie in [0, 1)")
    x = grid.axes[0]
    psi = math.sqrt(N / L) * (math.sqrt(1.0 - A) * np.exp(1j * cfg.k0_per_um * x)
                              + math.sqrt(A) * np.exp(1j * cfg.k_s_per_um * x))
    center = cfg.k_loss_per_um if cfg.k_loss_per_um is not None else cfg.k_idler
    return SimState(field=WaveField(grid, psi), params=params, interaction=params.U1D, dt=cfg.dt_ms,
                    N0=N, loss=_loss_model(cfg, grid, params, center), dealias=cfg.dealias)


def build_box_1d(cfg: ScenarioConfig, ground_state: WaveField | None = None) -> SimState:
    """Box-trapped ground state with an imprinted signal packet; loss centred at k_i = 2 k0 - k_s."""
    if cfg.variant != "box":
        raise ValueError("expected a box configuration")
    if cfg.extent_um < 1.2 * cfg.box_length_um:
        raise ValueError("the domain must be at least 1.2 box lengths")
    if abs(cfg.k_s_per_um) >= 0.5 * math.pi * cfg.n_points / cfg.extent_um:
        raise ValueError("k_s must lie below half the Nyquist wavenumber")
    params = cfg.physical()
    grid = cfg.grid()
    V = box_potential(grid.axes[0], cfg.box_length_um, cfg.wall_width_um, cfg.wall_height)
    if ground_state is None:
        ground_state = ground_state_imaginary_time(grid, V, params, cfg.atom_number, params.U1D)
    A_s = cfg.signal_amplitude
    if A_s is None:
        A_s = math.sqrt(cfg.signal_fraction * cfg.atom_number / math.sqrt(math.pi * cfg.signal_variance_um2))
    f = imprint_signal(ground_state, A_s, cfg.signal_variance_um2, cfg.x0_um, cfg.k_s_per_um)
    center = cfg.k_loss_per_um if cfg.k_loss_per_um is not None else cfg.k_idler
    return SimState(field=f, params=params, interaction=params.U1D, dt=cfg.dt_ms, potential=V,
                    loss=_loss_model(cfg, grid, params, center), dealias=cfg.dealias)


def cloud_overlap(a: np.ndarray, b: np.ndarray) -> float:
    """Normalised density overlap  sum(n_a n_b) / sqrt(sum n_a^2 sum n_b^2)."""
    na, nb = np.abs(a) ** 2, np.abs(b) ** 2
    return float(np.sum(na * nb) / math.sqrt(np.sum(na**2) * np.sum(nb**2)))


def collision_velocities(cfg: ScenarioConfig) -> list:
    vp, vs = cfg.v_pump_um_per_ms, cfg.v_signal_um_per_ms
    return [np.array([vp, 0.0]), np.array([0.0, vs]), np.array([-vp, 0.0])]


def build_collision_2d(cfg: ScenarioConfig) -> SimState:
    """Clouds 0 and 2 head-on along x, cloud 1 along +y; all reach the origin at t_c."""
    if cfg.variant != "collision2d":
        raise ValueError("expected a collision2d configuration")
    params = cfg.physical()
    grid = cfg.grid()
    m = params.mass
    X, Y = grid.coords
    w = cfg.cloud_width_um
    clouds = []
    for v in collision_velocities(cfg):
        k = m * v / UNITS.hbar
        if not grid.contains_wavenumber(np.abs(k) + 4.0 / w):
            raise ValueError("grid does not resolve the cloud momenta")
        r0 = -v * cfg.t_collision_ms
        if np.any(np.abs(r0) + 3 * w > 0.5 * np.asarray(grid.extent)):
            raise ValueError("clouds do not fit into the domain")
        amp = math.sqrt(cfg.cloud_atoms / (math.pi * w**2))
        clouds.append(amp * np.exp(-((X - r0[0]) ** 2 + (Y - r0[1]) ** 2) / (2 * w**2)
                                   + 1j * (k[0] * X + k[1] * Y)))
    for i in range(3):
        for j in range(i + 1, 3):
            ov = cloud_overlap(clouds[i], clouds[j])
            if ov >= 1e-4:
                raise ValueError(f"clouds {i} and {j} overlap initially ({ov:.2e} >= 1e-4)")
    psi = clouds[0] + clouds[1] + clouds[2]
    k3y = -m * cfg.v_signal_um_per_ms / UNITS.hbar
    if cfg.loss == "gaussian":
        amp = cfg.gamma_a_per_ms if cfg.gamma_a_per_ms is not None else collision_mismatch(cfg)
        loss = LossModel.gaussian(amp, (k3y,), cfg.sigma_loss_per_um, axes=(1,), t_on=cfg.t_on_ms)
    else:
        loss = _loss_model(cfg, grid, params, (k3y,), axes=(1,))
    return SimState(field=WaveField(grid, psi), params=params, interaction=params.U2D, dt=cfg.dt_ms,
                    loss=loss, dealias=cfg.dealias)


def collision_momenta(cfg: ScenarioConfig) -> dict:
    """Cloud wavenumbers p0, p1, p2 and the empty target p3 = -p1 (1/um)."""
    m = cfg.physical().mass
    v0, v1, v2 = collision_velocities(cfg)
    return {"p0": m * v0, "p1": m * v1, "p2": m * v2, "p3": -m * v1}


def collision_mismatch(cfg: ScenarioConfig) -> float:
    """E(p1) + E(p3) - E(p0) - E(p2) for the channel p0 + p2 -> p1 + p3 (hbar/ms)."""
    p = cfg.physical()
    mom = collision_momenta(cfg)
    e = {k: float(p.kinetic_energy(np.linalg.norm(v))) for k, v in mom.items()}
    return e["p1"] + e["p3"] - e["p0"] - e["p2"]


def build(cfg: ScenarioConfig) -> SimState:
    return {"homogeneous": build_homogeneous_1d, "box": build_box_1d,
            "collision2d": build_collision_2d}[cfg.variant](cfg)
