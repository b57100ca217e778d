"""Velocity-selective loss from a three-level Lambda system.

Levels are ordered (g, r, h): the condensate ground state g, the decaying
excited state r, and a second ground state h.  The probe (Omega_p, Delta_p)
couples g-r and the coupling laser (Omega_c, Delta_c) couples h-r.  In the
rotating frame (hbar = 1, energies in rad/ms)

    H = -Omega_p/2 (|r><g| + h.c.) - Omega_c/2 (|r><h| + h.c.)
        + Delta_p |r><r| + (Delta_p - Delta_c) |h><h|

and r decays with total rate Gamma, half into g and half into h.  Atoms that
reach r are counted as lost, giving gamma(k) = Gamma * rho_rr and a light
shift dE(k) = Tr[rho H] in the steady state.  The atomic velocity enters
through Doppler-shifted detunings Delta_{p,c} = Delta0 - v |q| cos(theta_{p,c}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .units import UNITS

__all__ = [
    "LambdaParams",
    "LossSpectrumTable",
    "TimescaleReport",
    "AmbiguousSteadyStateError",
    "hamiltonian",
    "jump_operators",
    "liouvillian",
    "steady_state",
    "steady_state_batch",
    "excited_population",
    "gamma_closed_form",
    "excitation_closed_form",
    "light_shift",
    "light_shift_closed_form",
    "doppler_detunings",
    "loss_spectrum",
    "timescale_check",
    "LightShiftReport",
    "light_shift_report",
    "G",
    "R",
    "H",
]

G, R, H = 0, 1, 2


class AmbiguousSteadyStateError(ValueError):
    """The Liouvillian kernel is not one-dimensional."""


@dataclass(frozen=True)
class LambdaParams:
    """Laser and decay parameters; rates in rad/ms, q in 1/um, angles in rad."""

    Omega_p: float
    Omega_c: float
    Delta0: float
    Gamma: float
    q: float
    theta_p: float = 0.0
    theta_c: float = math.pi / 2

    def __post_init__(self):
        if not self.Gamma > 0:
            raise ValueError("Gamma must be positive")
        if self.Omega_p < 0 or self.Omega_c < 0:
            raise ValueError("Rabi frequencies must be nonnegative")
        if not self.q > 0:
            raise ValueError("laser wavenumber must be positive")

    @property
    def a_p(self) -> float:
        return math.cos(self.theta_p)

    @property
    def a_c(self) -> float:
        return math.cos(self.theta_c)

    @classmethod
    def from_degrees(cls, Omega_p, Omega_c, Delta0, Gamma, q, theta_p_deg=0.0, theta_c_deg=90.0):
        return cls(Omega_p, Omega_c, Delta0, Gamma, q, math.radians(theta_p_deg), math.radians(theta_c_deg))


def hamiltonian(Omega_p, Omega_c, Delta_p, Delta_c) -> np.ndarray:
    """H_EIT; broadcasts over array-valued detunings (result shape (..., 3, 3))."""
    Delta_p, Delta_c = np.broadcast_arrays(np.asarray(Delta_p, float), np.asarray(Delta_c, float))
    out = np.zeros(Delta_p.shape + (3, 3), dtype=complex)
    out[..., R, G] = out[..., G, R] = -0.5 * Omega_p
    out[..., R, H] = out[..., H, R] = -0.5 * Omega_c
    out[..., R, R] = Delta_p
    out[..., H, H] = Delta_p - Delta_c
    return out


def jump_operators(Gamma) -> list:
    a = math.sqrt(Gamma / 2.0)
    l1 = np.zeros((3, 3), dtype=complex)
    l2 = np.zeros((3, 3), dtype=complex)
    l1[G, R] = a
    l2[H, R] = a
    return [l1, l2]


def liouvillian(Hm: np.ndarray, jumps) -> np.ndarray:
    """Superoperator on row-major vec(rho): vec(A rho B) = kron(A, B^T) vec(rho)."""
    eye = np.eye(3)
    Lsup = -1j * (np.kron(Hm, eye) - np.kron(eye, np.swapaxes(Hm, -1, -2)))
    for Lj in jumps:
        LdL = Lj.conj().T @ Lj
        Lsup = Lsup + np.kron(Lj, Lj.conj()) - 0.5 * np.kron(LdL, eye) - 0.5 * np.kron(eye, LdL.T)
    return Lsup


def _kron_batch(A, B):
    # kron over the trailing 3x3 axes with broadcasting on leading axes
    return (A[..., :, None, :, None] * B[..., None, :, None, :]).reshape(A.shape[:-2] + (9, 9))


def _liouvillian_batch(Hb: np.ndarray, Gamma: float) -> np.ndarray:
    eye = np.broadcast_to(np.eye(3, dtype=complex), Hb.shape)
    Lsup = -1j * (_kron_batch(Hb, eye) - _kron_batch(eye, np.swapaxes(Hb, -1, -2)))
    diss = np.zeros((9, 9), dtype=complex)
    for Lj in jump_operators(Gamma):
        LdL = Lj.conj().T @ Lj
        diss += np.kron(Lj, Lj.conj()) - 0.5 * np.kron(LdL, np.eye(3)) - 0.5 * np.kron(np.eye(3), LdL.T)
    return Lsup + diss


_TRACE_ROW = np.eye(3).reshape(9)


def steady_state_batch(Omega_p, Omega_c, Delta_p, Delta_c, Gamma, check_kernel: bool = True) -> np.ndarray:
    """Steady-state density matrices for arrays of detunings, shape (..., 3, 3).

    One redundant row of L vec(rho) = 0 is replaced by the trace condition.
    """
    Hb = hamiltonian(Omega_p, Omega_c, Delta_p, Delta_c)
    L = _liouvillian_batch(Hb, Gamma)
    if check_kernel:
        sv = np.linalg.svd(L, compute_uv=False)
        scale = sv[..., :1]
        nullity = np.sum(sv <= 1e-11 * scale, axis=-1)
        if np.any(nullity > 1):
            raise AmbiguousSteadyStateError(
                "steady state is not unique (Liouvillian kernel dimension > 1); "
                "e.g. both Rabi frequencies vanish")
    A = L.copy()
    A[..., 0, :] = _TRACE_ROW
    b = np.zeros(A.shape[:-1], dtype=complex)
    b[..., 0] = 1.0
    rho = np.linalg.solve(A, b[..., None])[..., 0].reshape(A.shape[:-2] + (3, 3))
    # remove rounding-level anti-Hermitian part
    return 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))


def steady_state(Omega_p, Omega_c, Delta_p, Delta_c, Gamma) -> np.ndarray:
    """Unique stationary density matrix of the Lambda system (3x3, basis g, r, h)."""
    if not Gamma > 0:
        raise ValueError("Gamma must be positive")
    return steady_state_batch(Omega_p, Omega_c, float(Delta_p), float(Delta_c), Gamma)


def excited_population(rho: np.ndarray):
    return np.real(rho[..., R, R])


def excitation_closed_form(Omega_p, Omega_c, Delta_p, Delta_c, Gamma, delta_eff: str = "c-p"):
    """Published rational expression for the excitation, evaluated term by term.

    As printed it carries no overall Gamma, i.e. it is an excited-state
    population.  ``delta_eff`` chooses the undefined effective detuning:
    ``"p-c"`` is Delta_p - Delta_c, ``"c-p"`` is Delta_c - Delta_p.  Only the
    latter reproduces the Lindblad steady state exactly; the former flips the
    sign of the two terms odd in Delta_eff.
    """
    if delta_eff not in ("p-c", "c-p"):
        raise ValueError("delta_eff must be 'p-c' or 'c-p'")
    Op2, Oc2 = Omega_p**2, Omega_c**2
    De = Delta_p - Delta_c if delta_eff == "p-c" else Delta_c - Delta_p
    denom = ((16.0 * (Delta_c**2 + Oc2) * De**2 + 3.0 * Oc2**2) * Op2
             + (3.0 * Oc2 - 8.0 * Delta_c * De) * Op2**2
             + Op2**3
             + 4.0 * Gamma**2 * De**2 * (Op2 + Oc2)
             + (4.0 * De * Delta_p * Omega_c + Omega_c**3) ** 2)
    if np.any(np.abs(denom) < 1e-300):
        raise ZeroDivisionError("closed-form loss rate is singular for these parameters")
    return 8.0 * De**2 * Op2 * Oc2 / denom


def gamma_closed_form(Omega_p, Omega_c, Delta_p, Delta_c, Gamma, delta_eff: str = "c-p"):
    """Loss rate Gamma * (closed-form excitation), in 1/ms."""
    return Gamma * excitation_closed_form(Omega_p, Omega_c, Delta_p, Delta_c, Gamma, delta_eff)


def light_shift(Omega_p, Omega_c, Delta_p, Delta_c, Gamma):
    """Tr[rho_ss H] in hbar/ms."""
    rho = steady_state_batch(Omega_p, Omega_c, Delta_p, Delta_c, Gamma)
    Hm = hamiltonian(Omega_p, Omega_c, Delta_p, Delta_c)
    return np.real(np.einsum("...ij,...ji->...", rho, Hm)) * UNITS.hbar


def light_shift_closed_form(Omega_p, Omega_c, Delta_p, Delta_c, Gamma):
    """Published closed form for the light shift, taken term by term (delta = Delta_c - Delta_p).

    The cubic term in the numerator is read with the decay rate Gamma.  Kept
    only as a cross-check against :func:`light_shift`.
    """
    d = Delta_c - Delta_p
    Op2, Oc2, Gm = Omega_p**2, Omega_c**2, Gamma
    num = (1.5 * Gm**3 * d**2
           + 0.5 * Gm * Oc2 * (4.0 * Delta_p * d + Oc2 + Oc2)
           + 0.5 * Gm * (4.0 * d * (d * (4.0 * Delta_c**2 + Gm**2 / 2.0) + Oc2 * (3.0 * Delta_c - 2.0 * Delta_p))
                         + Op2 * (Oc2 - 8.0 * Delta_c * d) + Op2**2))
    den = (0.5 * Gm * Oc2 * (4.0 * (Gm**2 + 4.0 * Delta_p**2) * d**2 + 8.0 * Delta_p * d * Oc2 + Oc2**2)
           + Op2 * (2.0 * Gm * (Gm**2 + 4.0 * Delta_c**2) * d**2 + 8.0 * Gm * d**2 * Oc2 + 1.5 * Gm * Oc2**2)
           + Op2**2 * (1.5 * Gm * Oc2 - 4.0 * Gm * Delta_c * d)
           + 0.5 * Gm * Op2**3)
    return -d * Op2 * num / den


def doppler_detunings(lam: LambdaParams, v):
    """(Delta_p, Delta_c) seen by atoms moving with 1D velocity v (um/ms)."""
    v = np.asarray(v, dtype=float)
    return lam.Delta0 - v * lam.q * lam.a_p, lam.Delta0 - v * lam.q * lam.a_c


@dataclass
class LossSpectrumTable:
    k: np.ndarray
    gamma: np.ndarray
    delta_e: np.ndarray
    v: np.ndarray
    gamma_closed_form: np.ndarray | None = None
    delta_e_closed_form: np.ndarray | None = None

    def interpolate(self, k):
        return np.interp(k, self.k, self.gamma), np.interp(k, self.k, self.delta_e)


def _spectrum_at(lam: LambdaParams, k, mass):
    v = UNITS.hbar * np.asarray(k, dtype=float) / mass
    dp, dc = doppler_detunings(lam, v)
    rho = steady_state_batch(lam.Omega_p, lam.Omega_c, dp, dc, lam.Gamma, check_kernel=False)
    Hm = hamiltonian(lam.Omega_p, lam.Omega_c, dp, dc)
    gamma = np.clip(lam.Gamma * excited_population(rho), 0.0, None)
    de = np.real(np.einsum("...ij,...ji->...", rho, Hm)) * UNITS.hbar
    return v, dp, dc, gamma, de


def loss_spectrum(lam: LambdaParams, k_samples, mass: float, refine: bool = True,
                  rel_tol: float = 1e-3, max_points: int = 200_000,
                  closed_forms: bool = False) -> LossSpectrumTable:
    """Tabulate gamma(k) and dE(k) on (a refinement of) ``k_samples``.

    With ``refine`` midpoints are inserted wherever linear interpolation
    misses the true gamma by more than ``rel_tol`` times the table maximum.
    """
    if not mass > 0:
        raise ValueError("mass must be positive")
    if not lam.Omega_p > 0 and not lam.Omega_c > 0:
        raise AmbiguousSteadyStateError("both Rabi frequencies vanish")
    k = np.unique(np.asarray(k_samples, dtype=float))
    v, dp, dc, gamma, de = _spectrum_at(lam, k, mass)
    while refine and k.size < max_points:
        # probe each interval at its quarter points so a peak narrower than
        # the spacing cannot hide behind a single well-interpolated midpoint
        fr = np.array([0.25, 0.5, 0.75])
        kq = k[:-1, None] + fr * np.diff(k)[:, None]
        gq = _spectrum_at(lam, kq, mass)[3]
        lin = gamma[:-1, None] + fr * np.diff(gamma)[:, None]
        peak = max(float(gamma.max()), float(gq.max()), 1e-300)
        bad = np.any(np.abs(gq - lin) > rel_tol * peak, axis=1)
        if not np.any(bad):
            break
        k = np.concatenate([k, kq[bad].ravel()])
        order = np.argsort(k)
        k = k[order]
        v, dp, dc, gamma, de = _spectrum_at(lam, k, mass)
    table = LossSpectrumTable(k=k, gamma=gamma, delta_e=de, v=v)
    if closed_forms:
        with np.errstate(divide="ignore", invalid="ignore"):
            table.gamma_closed_form = gamma_closed_form(lam.Omega_p, lam.Omega_c, dp, dc, lam.Gamma)
            table.delta_e_closed_form = light_shift_closed_form(lam.Omega_p, lam.Omega_c, dp, dc, lam.Gamma)
    return table


@dataclass(frozen=True)
class TimescaleReport:
    tau: float
    T_rec: float
    T_BEC: float

    @property
    def ok(self) -> bool:
        return self.tau < self.T_rec / 10.0 and self.T_rec < self.T_BEC / 10.0


def timescale_check(lam: LambdaParams, omega_perp: float, mass: float, T_BEC: float) -> TimescaleReport:
    """Excited-state lifetime, recoil escape time a_perp / v_rec, and condensate time (all ms)."""
    if not (omega_perp > 0 and mass > 0 and T_BEC > 0):
        raise ValueError("omega_perp, mass and T_BEC must be positive")
    a_perp = math.sqrt(UNITS.hbar / (mass * omega_perp))
    v_rec = 2.0 * UNITS.hbar * lam.q / mass
    return TimescaleReport(tau=1.0 / lam.Gamma, T_rec=a_perp / v_rec, T_BEC=T_BEC)




@dataclass(frozen=True)
class LightShiftReport:
    max_ratio: float
    k_worst: float
    drift_velocity: float
    excluded: tuple


def light_shift_report(lam: LambdaParams, mass: float, k_max: float, n: int = 4001) -> LightShiftReport:
    """Size of the light shift against the kinetic energy on |k| <= k_max.

    The part of dE(k) linear in k is a uniform Galilean drift; it is removed
    and returned as ``drift_velocity`` (um/ms).  The remainder is compared
    with hbar^2 k^2 / 2m outside the loss resonance, taken as the interval
    around the gamma peak where gamma exceeds half its maximum.
    """
    if not (k_max > 0 and mass > 0):
        raise ValueError("k_max and mass must be positive")
    k = np.linspace(-k_max, k_max, n)
    _, _, _, gamma, de = _spectrum_at(lam, k, mass)
    h = 1e-4 * k_max
    de_pm = _spectrum_at(lam, np.array([-h, 0.0, h]), mass)[4]
    slope = (de_pm[2] - de_pm[0]) / (2.0 * h)
    resid = de - de_pm[1] - slope * k
    ipk = int(np.argmax(gamma))
    half = gamma >= 0.5 * gamma[ipk]
    lo = ipk
    while lo > 0 and half[lo - 1]:
        lo -= 1
    hi = ipk
    while hi < n - 1 and half[hi + 1]:
        hi += 1
    keep = np.ones(n, dtype=bool)
    keep[lo:hi + 1] = False
    keep &= k != 0.0
    ekin = UNITS.hbar**2 * k**2 / (2.0 * mass)
    ratio = np.where(keep, np.abs(resid) / np.where(keep, ekin, 1.0), 0.0)
    iw = int(np.argmax(ratio))
    return LightShiftReport(max_ratio=float(ratio[iw]), k_worst=float(k[iw]),
                            drift_velocity=float(slope / UNITS.hbar), excluded=(float(k[lo]), float(k[hi])))
