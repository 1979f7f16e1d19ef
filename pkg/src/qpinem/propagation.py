"""Field profiles, numerical coupling coefficients and ladder-equation integration.

Units: ``z`` in nm, fields in V/m, ``omega0`` in rad/fs, electron velocity as a
fraction of ``c``. The coupling density is ``u(z) = (e / hbar omega0) E0z(z)
exp(-i omega0 z / v)``; ``E_OVER_HBAR_NM`` folds ``e/hbar`` together with the
nm and fs scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as sc
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import DomainError, IntegrationError, NumericalError, ValidationError
from .integrate import dopri5
from .interaction import ElectronSpectrum, default_loss_span
from .populations import PopulationDistribution

C_NM_PER_FS = sc.c * 1e-6
# (e/hbar) [1/(V s)] * 1 nm / (1 rad/fs)  ->  dimensionless per (V/m * nm)
E_OVER_HBAR_NM = sc.e / sc.hbar * 1e-9 / 1e15
ALPHA_FS = sc.fine_structure
# Gaussian-unit field e/nm^2 expressed in V/m
E_PER_NM2_IN_V_PER_M = sc.e / (4 * math.pi * sc.epsilon_0) / 1e-18

WINDOW_EPS = 1e-12


def wavenumber(omega0: float, velocity: float) -> float:
    """``omega0 / v`` in 1/nm."""
    if not (0.0 < velocity < 1.0):
        raise DomainError(f"velocity must be in (0, 1) units of c, got {velocity!r}")
    if omega0 <= 0:
        raise DomainError("omega0 must be positive")
    return omega0 / (velocity * C_NM_PER_FS)


@dataclass(frozen=True)
class GaussianProfile:
    """``E0z(z) = amplitude * exp(-(z - center)^2 / 2 sigma^2)``."""

    amplitude: complex
    sigma: float
    center: float = 0.0
    kind: str = field(default="GaussianEnvelope", init=False)

    def __post_init__(self):
        if self.sigma <= 0:
            raise DomainError("sigma must be positive")

    def field(self, z, omega0: float = 0.0):
        z = np.asarray(z, dtype=float)
        return complex(self.amplitude) * np.exp(-0.5 * ((z - self.center) / self.sigma) ** 2)

    def window(self, eps: float, omega0: float, velocity: float) -> tuple[float, float]:
        a = abs(complex(self.amplitude)) * E_OVER_HBAR_NM / omega0 * self.sigma
        # Gaussian tail mass beyond center +/- w*sigma is below a*sqrt(2pi)*exp(-w^2/2)
        w = math.sqrt(2.0 * max(math.log(max(a, 1e-300) * 2.6 / eps), 1.0)) + 1.0
        return self.center - w * self.sigma, self.center + w * self.sigma

    def beta0_closed_form(self, omega0: float, velocity: float) -> complex:
        q = wavenumber(omega0, velocity)
        return (
            E_OVER_HBAR_NM / omega0 * complex(self.amplitude) * math.sqrt(2 * math.pi) * self.sigma
            * math.exp(-0.5 * (self.sigma * q) ** 2) * complex(math.cos(q * self.center), -math.sin(q * self.center))
        )


@dataclass(frozen=True)
class DipoleProfile:
    """Longitudinal field of a transition dipole at the origin, beam at ``x = b``.

    Dipole components in e*nm. The field follows the single-mode dipole ansatz
    ``E0 = [k0^2 p + (p . grad) grad] exp(i k0 r) / r``.
    """

    px: complex
    pz: complex
    b: float
    py: complex = 0.0
    kind: str = field(default="DipoleAtImpactParameter", init=False)

    def __post_init__(self):
        if self.b <= 0:
            raise DomainError("impact parameter b must be positive")

    def _geometry(self, z, omega0: float):
        """Gaussian-unit field per unit charge, in 1/nm^2."""
        z = np.asarray(z, dtype=float)
        k0 = omega0 / C_NM_PER_FS
        r = np.sqrt(self.b**2 + z**2)
        ph = np.exp(1j * k0 * r)
        d1 = ph * (1j * k0 / r - 1.0 / r**2)
        d2 = ph * (-(k0**2) / r - 2j * k0 / r**2 + 2.0 / r**3)
        dxdz = self.b * z * (d2 / r**2 - d1 / r**3)
        dzdz = d2 * z**2 / r**2 + d1 * (1.0 / r - z**2 / r**3)
        # the y-derivative term vanishes on the y = 0 plane
        return k0**2 * complex(self.pz) * ph / r + complex(self.px) * dxdz + complex(self.pz) * dzdz

    def field(self, z, omega0: float):
        return E_PER_NM2_IN_V_PER_M * self._geometry(z, omega0)

    def window(self, eps: float, omega0: float, velocity: float) -> tuple[float, float]:
        q = wavenumber(omega0, velocity)
        k0 = omega0 / C_NM_PER_FS
        rate = q - k0
        scale = E_OVER_HBAR_NM / omega0
        z = 10.0 * self.b
        # beyond z the oscillatory tail integral is bounded by |u(z)| / rate
        while True:
            um = scale * max(abs(complex(self.field(z, omega0))), abs(complex(self.field(-z, omega0))))
            if um / rate < eps:
                return -z, z
            z *= 1.5
            if z > 1e9:
                raise NumericalError("dipole profile window did not converge")


@dataclass(frozen=True)
class TabulatedProfile:
    """Complex field sampled on a strictly increasing grid; zero outside it."""

    z: np.ndarray
    values: np.ndarray
    kind: str = field(default="Tabulated", init=False)

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if z.ndim != 1 or z.size < 4 or z.shape != v.shape:
            raise ValidationError("tabulated profile needs matching 1-D arrays with >= 4 samples")
        if np.any(np.diff(z) <= 0):
            raise ValidationError("tabulated z grid must be strictly increasing")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_re", CubicSpline(z, v.real))
        object.__setattr__(self, "_im", CubicSpline(z, v.imag))

    def field(self, z, omega0: float = 0.0):
        z = np.asarray(z, dtype=float)
        inside = (z >= self.z[0]) & (z <= self.z[-1])
        out = np.where(inside, self._re(z) + 1j * self._im(z), 0.0)
        return out

    def window(self, eps: float, omega0: float, velocity: float) -> tuple[float, float]:
        return float(self.z[0]), float(self.z[-1])


def load_tabulated(path) -> TabulatedProfile:
    """Read three columns ``z_nm  Re(E0z)  Im(E0z)`` (V/m)."""
    data = np.loadtxt(path, dtype=float, comments="#", ndmin=2)
    if data.shape[1] != 3:
        raise ValidationError(f"{path}: expected 3 columns (z, re, im), got {data.shape[1]}")
    return TabulatedProfile(data[:, 0], data[:, 0 + 1] + 1j * data[:, 2])


def coupling_density(profile, omega0: float, velocity: float):
    """Return ``u(z)`` in 1/nm."""
    q = wavenumber(omega0, velocity)
    scale = E_OVER_HBAR_NM / omega0

    def u(z):
        return scale * profile.field(z, omega0) * np.exp(-1j * q * np.asarray(z, dtype=float))

    return u


def _quad_complex(f, a, b, tol, **kw):
    re, e1 = integrate.quad(lambda z: f(z).real, a, b, epsabs=tol, epsrel=0.0, limit=400, **kw)
    im, e2 = integrate.quad(lambda z: f(z).imag, a, b, epsabs=tol, epsrel=0.0, limit=400, **kw)
    return complex(re, im), max(e1, e2)


def _fourier_tail(h, a: float, w: float, tol: float) -> tuple[complex, float]:
    """``int_a^inf h(s) exp(-i w s) ds`` for a smooth decaying complex ``h``."""
    sign = 1.0 if w >= 0 else -1.0
    w = abs(w)
    parts = []
    errs = []
    for fn, weight in (
        (lambda s: h(s).real, "cos"),
        (lambda s: h(s).imag, "sin"),
        (lambda s: h(s).imag, "cos"),
        (lambda s: h(s).real, "sin"),
    ):
        val, err = integrate.quad(fn, a, np.inf, weight=weight, wvar=w, epsabs=tol, limlst=200)
        parts.append(val)
        errs.append(err)
    rc, is_, ic, rs = parts
    is_, rs = sign * is_, sign * rs
    return complex(rc + is_, ic - rs), max(errs)


def beta0_numeric(profile, velocity: float, omega0: float, tol: float = 1e-10) -> complex:
    """``beta0 = (e / hbar omega0) int dz E0z(z) exp(-i omega0 z / v)`` by adaptive quadrature."""
    q = wavenumber(omega0, velocity)
    u = coupling_density(profile, omega0, velocity)
    if isinstance(profile, DipoleProfile):
        k0 = omega0 / C_NM_PER_FS
        z_core = max(20.0 * profile.b, 20.0 / (q - k0))
        lo, hi = -z_core, z_core
    else:
        lo, hi = profile.window(tol * 1e-2, omega0, velocity)
    # split the core into chunks of a few oscillation periods
    period = 2 * math.pi / q
    n_chunks = max(1, int(math.ceil((hi - lo) / (8 * period))))
    n_chunks = min(n_chunks, 20000)
    edges = np.linspace(lo, hi, n_chunks + 1)
    chunk_tol = tol * 1e-2 / n_chunks
    vals = []
    err_total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = _quad_complex(u, a, b, chunk_tol)
        vals.append(v)
        err_total += e
    total = complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))
    if isinstance(profile, DipoleProfile):
        scale = E_OVER_HBAR_NM / omega0
        # z > 0: carrier exp(i k0 z - i q z); z < 0 (s = -z): exp(i k0 s + i q s)
        right, e_r = _fourier_tail(
            lambda s: scale * profile.field(s, omega0) * np.exp(-1j * k0 * s), hi, q - k0, tol * 1e-2
        )
        left, e_l = _fourier_tail(
            lambda s: scale * profile.field(-s, omega0) * np.exp(-1j * k0 * s), hi, -(q + k0), tol * 1e-2
        )
        total += right + left
        err_total += e_r + e_l
    if not math.isfinite(err_total) or err_total > tol:
        raise NumericalError(f"beta0 quadrature error estimate {err_total:.3g} exceeds {tol:.3g}")
    return total


@dataclass
class AmplitudeLadder:
    """Amplitudes ``f_ell^n`` for every initial channel ``n0``.

    ``amplitudes[n, n0]`` is the amplitude of Fock state ``n`` on the conserved
    diagonal ``n + ell = n0``, so ``ell = n0 - n``.
    """

    amplitudes: np.ndarray
    z: float

    def channel_norms(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)

    def spectrum_probabilities(self) -> tuple[np.ndarray, int]:
        n_rows, n_cols = self.amplitudes.shape
        l_max = max(n_rows - 1, n_cols - 1)
        out = np.zeros(2 * l_max + 1)
        mag = np.abs(self.amplitudes) ** 2
        for ell in range(-(n_rows - 1), n_cols):
            out[l_max + ell] = math.fsum(np.diagonal(mag, offset=ell))
        return out, l_max


def _ladder_rhs(u, sqrt_n):
    # df/dz[n] = sqrt(n) u* f[n-1] - sqrt(n+1) u f[n+1]
    def rhs(z, a):
        uz = complex(u(z))
        out = np.empty_like(a)
        out[0] = 0.0
        out[1:] = (sqrt_n[1:, None] * np.conj(uz)) * a[:-1]
        out[:-1] -= (sqrt_n[1:, None] * uz) * a[1:]
        return out

    return rhs


def propagate_ladder(
    profile,
    dist: PopulationDistribution,
    omega0: float,
    velocity: float,
    tol: float = 1e-10,
    pad: int | None = None,
    fermion: bool = False,
) -> AmplitudeLadder:
    """Integrate the amplitude equations across the profile window."""
    if not (1e-12 <= tol <= 1e-6):
        raise DomainError("tol must lie in [1e-12, 1e-6]")
    u = coupling_density(profile, omega0, velocity)
    lo, hi = profile.window(WINDOW_EPS, omega0, velocity)
    p = dist.probabilities
    n_cols = len(p)
    if fermion:
        if n_cols > 2:
            raise DomainError("a two-level mode has at most two populations")
        n_rows = 2
        sqrt_n = np.array([0.0, 1.0])
    else:
        if pad is None:
            pad = default_loss_span(dist.n_max, beta0_numeric(profile, velocity, omega0, tol=1e-8))
        n_rows = n_cols + pad
        sqrt_n = np.sqrt(np.arange(n_rows, dtype=float))
    a0 = np.zeros((n_rows, n_cols), dtype=complex)
    a0[np.arange(n_cols), np.arange(n_cols)] = np.sqrt(p)
    rhs = _ladder_rhs(u, sqrt_n)
    drift_limit = 100.0 * tol

    def check(z, a):
        drift = np.max(np.abs(np.sum(np.abs(a) ** 2, axis=0) - p))
        if drift > drift_limit:
            raise IntegrationError(f"norm drift {drift:.3g} at z={z:g} nm exceeds {drift_limit:.3g}")

    q = wavenumber(omega0, velocity)
    h0 = min((hi - lo) / 100.0, 0.1 / q)
    _, a_end = dopri5(rhs, a0, [lo, hi], tol, h0=h0, check=check)
    return AmplitudeLadder(a_end, hi)


def solve_boson_ladder(
    profile,
    dist: PopulationDistribution,
    omega0: float,
    velocity: float,
    l_max: int | None = None,
    tol: float = 1e-10,
) -> ElectronSpectrum:
    """Spectrum from direct integration of the bosonic ladder equations."""
    beta0 = beta0_numeric(profile, velocity, omega0, tol=1e-9)
    pad = default_loss_span(dist.n_max, beta0)
    ladder = propagate_ladder(profile, dist, omega0, velocity, tol, pad=pad)
    probs, L = ladder.spectrum_probabilities()
    drift = float(np.max(np.abs(ladder.channel_norms() - dist.probabilities)))
    spec = ElectronSpectrum(
        probs, L, "ODE", beta0, dist.mean, dist.tail_bound,
        {"statistics": dist.kind, "channel_norm_drift": drift},
    )
    return spec.truncated(l_max) if l_max is not None else spec


def solve_fermion_ladder(
    profile,
    p1: float,
    omega0: float,
    velocity: float,
    tol: float = 1e-10,
) -> ElectronSpectrum:
    """Spectrum for a two-level mode with excited-state population ``p1``."""
    if not (0.0 <= p1 <= 1.0):
        raise DomainError("p1 must lie in [0, 1]")
    dist = PopulationDistribution(np.array([1.0 - p1, p1]), float(p1), 0.0, "custom")
    ladder = propagate_ladder(profile, dist, omega0, velocity, tol, fermion=True)
    probs, L = ladder.spectrum_probabilities()
    beta0 = beta0_numeric(profile, velocity, omega0, tol=1e-9)
    return ElectronSpectrum(probs, L, "Fermion", beta0, float(p1), 0.0, {"statistics": "fermion"})
