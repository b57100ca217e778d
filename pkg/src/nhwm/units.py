"""Internal unit system and atomic parameters.

Everything inside the package is expressed in micrometres, milliseconds and
units of hbar, so that hbar == 1.  Masses are then measured in
``hbar * ms / um**2`` and energies in ``hbar / ms`` (equivalently rad/ms).
SI values only appear at the configuration boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import constants

__all__ = [
    "UnitSystem",
    "UNITS",
    "PhysicalParams",
    "RB87_MASS_KG",
    "RB87_SCATTERING_LENGTH_M",
    "rubidium87_params",
    "physical_params",
    "reduced_interaction_2d",
    "hz_to_rad_per_ms",
]

RB87_MASS_KG = 86.909180527 * constants.atomic_mass
# Not quoted in the source material; the commonly used triplet value.
RB87_SCATTERING_LENGTH_M = 5.3e-9


@dataclass(frozen=True)
class UnitSystem:
    length_unit: float = 1e-6
    time_unit: float = 1e-3
    hbar: float = 1.0

    @property
    def mass_unit(self) -> float:
        """kg per internal mass unit."""
        return constants.hbar * self.time_unit / self.length_unit**2

    def mass_from_si(self, kg: float) -> float:
        return kg / self.mass_unit

    def mass_to_si(self, m: float) -> float:
        return m * self.mass_unit

    def length_from_si(self, metres: float) -> float:
        return metres / self.length_unit

    def length_to_si(self, x: float) -> float:
        return x * self.length_unit

    def time_from_si(self, seconds: float) -> float:
        return seconds / self.time_unit

    def time_to_si(self, t: float) -> float:
        return t * self.time_unit

    def rate_from_si(self, per_second: float) -> float:
        return per_second * self.time_unit

    def rate_to_si(self, rate: float) -> float:
        return rate / self.time_unit

    def velocity_from_si(self, metres_per_second: float) -> float:
        return metres_per_second * self.time_unit / self.length_unit

    def velocity_to_si(self, v: float) -> float:
        return v * self.length_unit / self.time_unit

    def energy_from_si(self, joules: float) -> float:
        return joules / constants.hbar * self.time_unit

    def energy_to_si(self, e: float) -> float:
        return e * constants.hbar / self.time_unit


UNITS = UnitSystem()


def hz_to_rad_per_ms(f_hz: float) -> float:
    """Cyclic frequency in Hz to angular frequency in rad/ms."""
    return 2.0 * math.pi * f_hz * UNITS.time_unit


@dataclass(frozen=True)
class PhysicalParams:
    """Atomic species and transverse confinement, in internal units.

    ``U3D``, ``sigma_perp`` and ``U1D`` are derived on construction.
    """

    mass: float
    a_s: float
    omega_perp: float
    U3D: float = field(init=False)
    sigma_perp: float = field(init=False)
    U1D: float = field(init=False)

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.a_s >= 0:
            raise ValueError(f"only repulsive interactions are supported, a_s={self.a_s}")
        if not self.omega_perp > 0:
            raise ValueError(f"omega_perp must be positive, got {self.omega_perp}")
        hbar = UNITS.hbar
        u3d = 4.0 * math.pi * hbar**2 * self.a_s / self.mass
        sigma = math.sqrt(hbar / (self.mass * self.omega_perp))
        object.__setattr__(self, "U3D", u3d)
        object.__setattr__(self, "sigma_perp", sigma)
        object.__setattr__(self, "U1D", u3d / (2.0 * math.pi * sigma**2))

    @property
    def U2D(self) -> float:
        return reduced_interaction_2d(self)

    def kinetic_energy(self, k):
        """hbar^2 k^2 / 2m for wavenumber(s) ``k`` in 1/um."""
        return UNITS.hbar**2 * k**2 / (2.0 * self.mass)


def physical_params(mass_kg: float = RB87_MASS_KG,
                    a_s_m: float = RB87_SCATTERING_LENGTH_M,
                    omega_perp_hz: float = 100.0) -> PhysicalParams:
    """Build parameters from SI inputs (trap frequency given as cyclic Hz)."""
    return PhysicalParams(
        mass=UNITS.mass_from_si(mass_kg),
        a_s=UNITS.length_from_si(a_s_m),
        omega_perp=hz_to_rad_per_ms(omega_perp_hz),
    )


def rubidium87_params(omega_perp: float) -> PhysicalParams:
    """87Rb with transverse angular trap frequency ``omega_perp`` in rad/ms."""
    return PhysicalParams(
        mass=UNITS.mass_from_si(RB87_MASS_KG),
        a_s=UNITS.length_from_si(RB87_SCATTERING_LENGTH_M),
        omega_perp=omega_perp,
    )


def reduced_interaction_2d(params: PhysicalParams) -> float:
    """Pancake-reduced coupling U3D / (sqrt(2 pi) sigma_perp), in hbar um^2/ms."""
    return params.U3D / (math.sqrt(2.0 * math.pi) * params.sigma_perp)
