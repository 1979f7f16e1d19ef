"""Physical estimates of the electron-mode coupling and mode populations.

Formulas are written in Gaussian units. Inputs cross a single conversion
boundary: energies in eV or keV, lengths in nm, frequencies in rad/fs and
transition dipoles in e*nm. With ``e^2 = alpha hbar c`` every dipole formula
reduces to dimensionless combinations of these.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy import constants as sc

from .errors import DomainError
from .mathkernel import bessel_k

ELECTRON_REST_KEV = 510.998950
ALPHA = sc.fine_structure
HBAR_EV_FS = sc.hbar / sc.e * 1e15
C_NM_PER_FS = sc.c * 1e-6
E2_EV_NM = ALPHA * HBAR_EV_FS * C_NM_PER_FS  # e^2 in eV*nm (Gaussian)

# Silver Drude parameters
SILVER_PLASMA_EV = 9.17
SILVER_DAMPING_EV = 0.021
SILVER_EPS_B = 4.0


@dataclass(frozen=True)
class ElectronKinematics:
    kinetic_energy: float  # keV
    velocity: float  # v/c
    gamma: float

    @classmethod
    def from_kinetic_energy(cls, kev: float) -> "ElectronKinematics":
        if not (kev > 0):
            raise DomainError("kinetic energy must be positive")
        gamma = 1.0 + kev / ELECTRON_REST_KEV
        return cls(kev, math.sqrt(1.0 - 1.0 / gamma**2), gamma)


@dataclass(frozen=True)
class DipoleMode:
    omega0: float  # rad/fs
    dipole_px: complex  # e*nm
    dipole_z: complex  # e*nm
    impact_parameter: float  # nm
    dipole_py: complex = 0.0

    def __post_init__(self):
        if self.omega0 <= 0:
            raise DomainError("omega0 must be positive")
        if self.impact_parameter <= 0:
            raise DomainError("impact parameter must be positive")


def zeta(omega0: float, b: float, kin: ElectronKinematics) -> float:
    return omega0 * b / (kin.velocity * C_NM_PER_FS * kin.gamma)


def _prefactor(omega0: float, kin: ElectronKinematics) -> float:
    # 2 e omega0 / (hbar v^2 gamma) per unit dipole (e*nm), in 1/nm * nm
    return 2.0 * ALPHA * omega0 / (C_NM_PER_FS * kin.velocity**2 * kin.gamma)


def dipolar_beta0(mode: DipoleMode, kin: ElectronKinematics) -> complex:
    """Coupling to a point dipole: ``-(2 e w0 / hbar v^2 gamma) [i p_x K1 + (p_z/gamma) K0]``."""
    z = zeta(mode.omega0, mode.impact_parameter, kin)
    k0, k1 = bessel_k(0, z), bessel_k(1, z)
    return -_prefactor(mode.omega0, kin) * (
        1j * complex(mode.dipole_px) * k1 + complex(mode.dipole_z) / kin.gamma * k0
    )


def isotropic_eels_probability(p: float, omega0: float, b: float, kin: ElectronKinematics) -> float:
    """Loss probability for a triply degenerate dipole mode in its ground state."""
    if b <= 0:
        raise DomainError("impact parameter must be positive")
    z = zeta(omega0, b, kin)
    f = bessel_k(1, z) ** 2 + bessel_k(0, z) ** 2 / kin.gamma**2
    return (_prefactor(omega0, kin) * abs(p)) ** 2 * f


def depolarization_factor(r: float) -> float:
    """In-plane depolarization ``L`` for aspect ratio ``r > 1``."""
    if not (r > 1.0):
        raise DomainError(f"aspect ratio must exceed 1, got {r!r}")
    d = math.sqrt(r * r - 1.0)
    return (r * r / 2.0) / d**3 * (math.pi / 2.0 - math.atan(1.0 / d) - d / (r * r))


def ellipsoid_mode(
    aspect_ratio: float,
    volume: float,
    plasma_energy: float = SILVER_PLASMA_EV,
    eps_b: float = SILVER_EPS_B,
) -> tuple[float, float]:
    """Resonance ``omega0`` (rad/fs) and effective dipole (e*nm) of a metal ellipsoid.

    ``volume`` in nm^3, ``plasma_energy`` in eV.
    """
    L = depolarization_factor(aspect_ratio)
    eps0 = 1.0 - 1.0 / L
    hw0 = plasma_energy / math.sqrt(eps_b - eps0)
    p = (1.0 - eps0) * math.sqrt(hw0 * volume / (8.0 * math.pi * (eps_b - eps0) * E2_EV_NM))
    return hw0 / HBAR_EV_FS, p


def shell_mode(
    thickness: float,
    radius: float,
    eps_core: float = 2.0,
    plasma_energy: float = SILVER_PLASMA_EV,
) -> tuple[float, float]:
    """Thin metal shell on a dielectric core: ``omega0`` (rad/fs) and dipole (e*nm)."""
    if thickness <= 0 or radius <= 0:
        raise DomainError("thickness and radius must be positive")
    ratio = thickness / radius
    if ratio > 0.5:
        raise DomainError(f"t/a = {ratio:.3g} is outside the thin-shell regime")
    if ratio > 0.3:
        warnings.warn(f"t/a = {ratio:.3g}: thin-shell estimate is rough", stacklevel=2)
    hw0 = plasma_energy / math.sqrt(eps_core + 2.0) * math.sqrt(2.0 * ratio)
    p = math.sqrt(3.0 * hw0 * radius**3 / (2.0 * (eps_core + 2.0) * E2_EV_NM))
    return hw0 / HBAR_EV_FS, p


def max_abs_beta0(omega0: float, dipole: float, b_min: float, kin: ElectronKinematics) -> float:
    """Largest ``|beta0|`` over dipole orientation for impact parameters ``b >= b_min``.

    ``|beta0|`` decreases monotonically with ``b``, so the maximum sits at ``b_min``.
    """
    z = zeta(omega0, b_min, kin)
    pref = _prefactor(omega0, kin) * abs(dipole)
    return pref * max(bessel_k(1, z), bessel_k(0, z) / kin.gamma)


def purcell_enhancement(Q: float, eps: float, rho0: float) -> float:
    """``EF = 9 Q / (2 eps rho0^3)`` for a high-Q Mie mode of size parameter ``rho0``."""
    if Q <= 0 or eps <= 0 or rho0 <= 0:
        raise DomainError("Q, eps and rho0 must be positive")
    return 9.0 * Q / (2.0 * eps * rho0**3)


def kappa_over_g(omega0: float, Q: float, enhancement: float, g0: float) -> float:
    """Cavity damping over Purcell-enhanced emitter rate, ``(omega0/Q) / (EF g0)``."""
    return (omega0 / Q) / (enhancement * g0)


def saturation_intensity(kappa: float, dipole: float) -> float:
    """Two-level saturation intensity ``c (hbar kappa)^2 / 16 pi p^2`` in W/m^2.

    ``kappa`` in rad/fs, ``dipole`` in e*nm.
    """
    if dipole == 0:
        raise DomainError("dipole must be non-zero")
    hk = HBAR_EV_FS * kappa
    val = C_NM_PER_FS * hk**2 / (16.0 * math.pi * E2_EV_NM * abs(dipole) ** 2)  # eV/(fs nm^2)
    return val * sc.e / 1e-15 / 1e-18


def intensity_from_field(e0: complex) -> float:
    """Intensity (W/m^2) of ``E(t) = E0 exp(-i w t) + c.c.`` with ``E0`` in V/m."""
    return 2.0 * sc.epsilon_0 * sc.c * abs(e0) ** 2


def fermion_steady_state(intensity_ratio: float) -> float:
    """Resonant two-level population ``(1/2) / (1 + I_s/I)``, bounded by 1/2."""
    if intensity_ratio < 0:
        raise DomainError("intensity ratio must be non-negative")
    if math.isinf(intensity_ratio):
        return 0.5
    return 0.5 * intensity_ratio / (1.0 + intensity_ratio)


def driven_boson_population(intensity_ratio: float) -> float:
    """Resonantly driven harmonic mode (coherent state): ``nbar = I / 2 I_s``."""
    if intensity_ratio < 0:
        raise DomainError("intensity ratio must be non-negative")
    return 0.5 * intensity_ratio
