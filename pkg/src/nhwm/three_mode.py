"""Pump/signal/idler reduction of the lossy GPE.

Mode amplitudes are normalised so that ``|phi_n|^2`` is the number of atoms
in mode n, and are written in the interaction picture with respect to the
free dispersion E_n = hbar^2 k_n^2 / 2m.  Only the idler decays.

Linearising about an undepleted pump of population n0 and passing to the
rotating frame

    phi_s = Phi_s exp(i kappa t / 2),    phi_i = conj(Phi_i) exp(i kappa t / 2)

gives ``i dPhi/dt = M Phi`` with

    M = [[ B,   A        ],
         [-A,  -B - i gamma]],   A = U_d n0 / hbar,  B = 2 A + kappa / 2.

(The conjugated idler carries +kappa/2 in its phase; with the opposite sign
the coupling term would keep an explicit time dependence.)
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .units import UNITS

__all__ = [
    "ThreeModeParams",
    "ThreeModeState",
    "Trajectory",
    "GainReport",
    "StepSizeError",
    "DegenerateEigenbasisError",
    "coupling_matrix",
    "eigenvalues",
    "eigenvalues_from",
    "eigenvectors",
    "gain_approx",
    "gain_approx_from",
    "analytic_solution",
    "analytic_modes",
    "integrate_three_mode",
    "integrate_linearized",
]


class StepSizeError(ValueError):
    pass


class DegenerateEigenbasisError(ArithmeticError):
    pass


KAPPA_CONVENTIONS = ("linear", "reduced")


@dataclass(frozen=True)
class ThreeModeParams:
    """Mode wavenumbers, mass, discrete coupling and idler loss.

    ``convention`` picks the rotating-frame detuning: ``"linear"`` uses
    kappa = (dE - 2 U_d n0)/hbar, ``"reduced"`` uses kappa = (dE - U_d n0)/hbar.
    """

    k0: float
    ks: float
    ki: float
    mass: float
    U_d: float
    n0: float
    gamma: float = 0.0
    convention: str = "linear"
    E0: float = field(init=False)
    Es: float = field(init=False)
    Ei: float = field(init=False)

    def __post_init__(self):
        scale = max(1.0, abs(self.k0), abs(self.ks), abs(self.ki))
        if abs(self.ks + self.ki - 2.0 * self.k0) > 1e-12 * scale:
            raise ValueError(f"momentum closure violated: ks + ki - 2 k0 = {self.ks + self.ki - 2 * self.k0}")
        if self.convention not in KAPPA_CONVENTIONS:
            raise ValueError(f"convention must be one of {KAPPA_CONVENTIONS}")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        hb = UNITS.hbar
        for name, k in (("E0", self.k0), ("Es", self.ks), ("Ei", self.ki)):
            object.__setattr__(self, name, hb**2 * k**2 / (2.0 * self.mass))

    @classmethod
    def homogeneous(cls, k0: float, ks: float, mass: float, U: float, N: float, L: float,
                    gamma: float = 0.0, convention: str = "linear") -> "ThreeModeParams":
        """Modes of a periodic box of length L holding N atoms (U_d = U dk / 2 pi = U / L)."""
        return cls(k0=k0, ks=ks, ki=2.0 * k0 - ks, mass=mass, U_d=U / L, n0=N, gamma=gamma,
                   convention=convention)

    @classmethod
    def from_rates(cls, coupling: float, delta_e: float, gamma: float = 0.0,
                   convention: str = "linear") -> "ThreeModeParams":
        """Abstract parameter set with U_d n0 = ``coupling`` and mismatch ``delta_e`` (both hbar/ms).

        Uses unit mass, k0 = 0 and ks = -ki = sqrt(delta_e).
        """
        if delta_e < 0:
            raise ValueError("mismatch must be nonnegative for a 1D quadratic dispersion")
        ks = math.sqrt(delta_e) / UNITS.hbar
        return cls(k0=0.0, ks=ks, ki=-ks, mass=1.0, U_d=coupling, n0=1.0, gamma=gamma,
                   convention=convention)

    def with_gamma(self, gamma: float) -> "ThreeModeParams":
        return ThreeModeParams(self.k0, self.ks, self.ki, self.mass, self.U_d, self.n0, gamma, self.convention)

    @property
    def DeltaE(self) -> float:
        return self.Es + self.Ei - 2.0 * self.E0

    @property
    def coupling(self) -> float:
        """U_d n0 / hbar in rad/ms."""
        return self.U_d * self.n0 / UNITS.hbar

    @property
    def kappa(self) -> float:
        shift = 2.0 if self.convention == "linear" else 1.0
        return (self.DeltaE - shift * self.U_d * self.n0) / UNITS.hbar


@dataclass
class ThreeModeState:
    phi0: complex
    phis: complex
    phii: complex
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.phi0, self.phis, self.phii], dtype=complex)

    def populations(self) -> tuple:
        return abs(self.phi0) ** 2, abs(self.phis) ** 2, abs(self.phii) ** 2


@dataclass
class Trajectory:
    t: np.ndarray
    phi0: np.ndarray
    phis: np.ndarray
    phii: np.ndarray

    @property
    def populations(self) -> np.ndarray:
        """Array (n_t, 3) of |phi0|^2, |phis|^2, |phii|^2."""
        return np.abs(np.stack([self.phi0, self.phis, self.phii], axis=1)) ** 2

    def final_state(self) -> ThreeModeState:
        return ThreeModeState(complex(self.phi0[-1]), complex(self.phis[-1]), complex(self.phii[-1]),
                              float(self.t[-1]))


# --- linear theory -------------------------------------------------------------

def coupling_matrix(params: ThreeModeParams) -> np.ndarray:
    """The 2x2 non-Hermitian generator M of the rotating-frame signal/idler pair."""
    A = params.coupling
    B = 2.0 * A + params.kappa / 2.0
    return np.array([[B, A], [-A, -B - 1j * params.gamma]], dtype=complex)


def eigenvalues_from(coupling: float, kappa: float, gamma: float) -> tuple:
    """Closed-form (lambda+, lambda-) for coupling A = U_d n0/hbar, detuning kappa, loss gamma.

    lambda+ is the branch with the larger imaginary part.
    """
    B = 2.0 * coupling + kappa / 2.0
    disc = complex(-gamma**2 + 4.0 * B**2 - 4.0 * coupling**2, 4.0 * gamma * B)
    root = 0.5 * cmath.sqrt(disc)
    centre = -0.5j * gamma
    a, b = centre + root, centre - root
    return (a, b) if a.imag >= b.imag else (b, a)


def eigenvalues(params: ThreeModeParams) -> tuple:
    return eigenvalues_from(params.coupling, params.kappa, params.gamma)


def eigenvectors(params: ThreeModeParams) -> tuple:
    """Unit eigenvectors (v+, v-) of :func:`coupling_matrix`, matching :func:`eigenvalues`."""
    M = coupling_matrix(params)
    vecs = []
    for lam in eigenvalues(params):
        # null vector of M - lam from whichever row is better conditioned
        r1 = np.array([-M[0, 1], M[0, 0] - lam])
        r2 = np.array([M[1, 1] - lam, -M[1, 0]])
        v = r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2
        nv = np.linalg.norm(v)
        if nv == 0.0:
            v = np.array([1.0, 0.0], dtype=complex) if not vecs else np.array([0.0, 1.0], dtype=complex)
            nv = 1.0
        vecs.append(v / nv)
    return vecs[0], vecs[1]


@dataclass(frozen=True)
class GainReport:
    approx: float
    exact: float

    @property
    def relative_deviation(self) -> float:
        return (self.exact - self.approx) / self.approx if self.approx != 0 else float("nan")


def gain_approx_from(coupling: float, delta_e: float, gamma: float) -> float:
    """(U rho/hbar)^2 gamma / (gamma^2 + (dE/hbar)^2)."""
    de = delta_e / UNITS.hbar
    denom = gamma**2 + de**2
    return coupling**2 * gamma / denom if denom > 0 else 0.0


def gain_approx(params: ThreeModeParams) -> GainReport:
    approx = gain_approx_from(params.coupling, params.DeltaE, params.gamma)
    return GainReport(approx=approx, exact=eigenvalues(params)[0].imag)


def analytic_solution(Phi_s0: complex, Phi_i0: complex, params: ThreeModeParams, t) -> tuple:
    """Rotating-frame (Phi_s(t), Phi_i(t)) from the eigen-decomposition of M."""
    vp, vm = eigenvectors(params)
    V = np.column_stack([vp, vm])
    if np.linalg.cond(V) > 1e12:
        raise DegenerateEigenbasisError("signal/idler eigenvectors are (nearly) parallel: exceptional point")
    lp, lm = eigenvalues(params)
    c = np.linalg.solve(V, np.array([Phi_s0, Phi_i0], dtype=complex))
    t = np.asarray(t, dtype=float)
    ep = c[0] * np.exp(-1j * lp * t)
    em = c[1] * np.exp(-1j * lm * t)
    Phi_s = vp[0] * ep + vm[0] * em
    Phi_i = vp[1] * ep + vm[1] * em
    if t.ndim == 0:
        # exact at t == 0 by construction
        if t == 0.0:
            return complex(Phi_s0), complex(Phi_i0)
        return complex(Phi_s), complex(Phi_i)
    return Phi_s, Phi_i


def analytic_modes(phis0: complex, phii0: complex, params: ThreeModeParams, t) -> tuple:
    """Interaction-picture (phi_s(t), phi_i(t)) of the linearised model."""
    Phi_s, Phi_i = analytic_solution(phis0, np.conj(phii0), params, t)
    rot = np.exp(0.5j * params.kappa * np.asarray(t, dtype=float))
    return Phi_s * rot, np.conj(Phi_i) * rot


# --- nonlinear three-mode ODEs ---------------------------------------------------

def _rhs(t, p0, ps, pi, ud, de, gamma):
    hb = UNITS.hbar
    n0 = p0.real * p0.real + p0.imag * p0.imag
    ns = ps.real * ps.real + ps.imag * ps.imag
    ni = pi.real * pi.real + pi.imag * pi.imag
    ph = cmath.exp(1j * de * t / hb)
    p0sq = p0 * p0
    d0 = -1j * ud / hb * (2.0 * p0.conjugate() * ps * pi * ph.conjugate() + (n0 + 2.0 * (ns + ni)) * p0)
    ds = -1j * ud / hb * (pi.conjugate() * p0sq * ph + (ns + 2.0 * (n0 + ni)) * ps)
    di = -1j * ud / hb * (ps.conjugate() * p0sq * ph + (ni + 2.0 * (n0 + ns)) * pi) - gamma * pi
    return d0, ds, di


def integrate_three_mode(state: ThreeModeState, params: ThreeModeParams, dt: float, t_end: float,
                         record_every: int = 1) -> Trajectory:
    """Fixed-step classical RK4 for the full nonlinear three-mode equations."""
    if not dt > 0:
        raise StepSizeError("dt must be positive")
    total = sum(state.populations())
    rates = (params.U_d * max(total, params.n0) / UNITS.hbar, params.DeltaE / UNITS.hbar, params.gamma)
    if dt * max(rates) >= 0.05:
        raise StepSizeError(f"dt={dt} under-resolves the fastest rate {max(rates):.4g} (need dt*rate < 0.05)")
    n_steps = int(round((t_end - state.t) / dt))
    if n_steps < 0:
        raise ValueError("t_end before the initial time")
    ud, de, gamma = params.U_d, params.DeltaE, params.gamma
    p0, ps, pi = complex(state.phi0), complex(state.phis), complex(state.phii)
    t0 = state.t
    ts, a0, as_, ai = [t0], [p0], [ps], [pi]
    h = dt
    for n in range(n_steps):
        t = t0 + n * h
        k1 = _rhs(t, p0, ps, pi, ud, de, gamma)
        k2 = _rhs(t + h / 2, p0 + h / 2 * k1[0], ps + h / 2 * k1[1], pi + h / 2 * k1[2], ud, de, gamma)
        k3 = _rhs(t + h / 2, p0 + h / 2 * k2[0], ps + h / 2 * k2[1], pi + h / 2 * k2[2], ud, de, gamma)
        k4 = _rhs(t + h, p0 + h * k3[0], ps + h * k3[1], pi + h * k3[2], ud, de, gamma)
        p0 += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        ps += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        pi += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if (n + 1) % record_every == 0 or n + 1 == n_steps:
            ts.append(t0 + (n + 1) * h)
            a0.append(p0)
            as_.append(ps)
            ai.append(pi)
    return Trajectory(np.array(ts), np.array(a0), np.array(as_), np.array(ai))


def integrate_linearized(Phi0, params: ThreeModeParams, dt: float, t_end: float) -> tuple:
    """RK4 on ``i dPhi/dt = M Phi``; returns (t, Phi) with Phi of shape (n_t, 2)."""
    M = -1j * coupling_matrix(params)
    n_steps = int(round(t_end / dt))
    y = np.asarray(Phi0, dtype=complex)
    out = [y.copy()]
    for _ in range(n_steps):
        k1 = M @ y
        k2 = M @ (y + dt / 2 * k1)
        k3 = M @ (y + dt / 2 * k2)
        k4 = M @ (y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y.copy())
    return dt * np.arange(n_steps + 1), np.array(out)
