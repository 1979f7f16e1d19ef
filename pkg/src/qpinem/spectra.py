"""Broadened traces, gain/loss diagnostics and correlation retrieval.

Energy axis: ``x = dE / hbar omega0`` with *loss* positive, so the peak of
``P_ell`` sits at ``x = -ell`` (gains appear at negative ``x``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, UndefinedError, ValidationError
from .interaction import ElectronSpectrum

DEFAULT_FWHM = 0.1


@dataclass(frozen=True)
class BroadenedTrace:
    energy_axis: np.ndarray
    intensity: np.ndarray
    fwhm: float

    def integral(self) -> float:
        return float(np.trapezoid(self.intensity, self.energy_axis))


def lorentzian(x, fwhm: float):
    """Unit-area Lorentzian of full width ``fwhm`` centred at zero."""
    hw = 0.5 * fwhm
    return (hw / math.pi) / (np.asarray(x, dtype=float) ** 2 + hw * hw)


def default_axis(spec: ElectronSpectrum, fwhm: float = DEFAULT_FWHM, margin: float = 2.0) -> np.ndarray:
    step = fwhm / 20.0
    half = spec.l_max + margin
    n = int(round(2 * half / step)) + 1
    return np.linspace(-half, half, n)


def broaden(spec: ElectronSpectrum, fwhm: float = DEFAULT_FWHM, axis=None) -> BroadenedTrace:
    """Sum of Lorentzians of weight ``P_ell`` centred at ``x = -ell``."""
    if not (fwhm > 0):
        raise DomainError("fwhm must be positive")
    x = default_axis(spec, fwhm) if axis is None else np.asarray(axis, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("energy axis is empty")
    y = np.zeros_like(x)
    for ell, p in zip(spec.ells, spec.probabilities):
        if p > 0:
            y += p * lorentzian(x + ell, fwhm)
    return BroadenedTrace(x, y, float(fwhm))


def gains_losses_ratio(spec: ElectronSpectrum) -> float:
    """Integrated gains over integrated losses."""
    losses = spec.losses()
    if losses <= 0:
        raise UndefinedError("spectrum has no losses")
    return spec.gains() / losses


def retrieve_g(spec: ElectronSpectrum, ell: int) -> float:
    """Estimate ``g^(ell)`` as ``(ell!)^2 P_ell / P_1^ell``."""
    if ell < 2:
        raise DomainError("ell must be >= 2")
    p1 = spec[1]
    if p1 <= 0:
        raise UndefinedError("P_1 vanishes; g^(ell) cannot be retrieved")
    # log form avoids underflow of P_1^ell at weak coupling
    p = spec[ell]
    if p <= 0:
        return 0.0
    return math.exp(2 * math.lgamma(ell + 1) + math.log(p) - ell * math.log(p1))


def spectrum_rows(spec: ElectronSpectrum) -> list[tuple[int, float]]:
    return [(int(ell), float(p)) for ell, p in zip(spec.ells, spec.probabilities)]


def trace_rows(trace: BroadenedTrace) -> list[tuple[float, float]]:
    return [(float(x), float(y)) for x, y in zip(trace.energy_axis, trace.intensity)]


def write_spectrum(path, spec: ElectronSpectrum) -> None:
    """Two columns ``ell  P_ell`` with shortest round-trip floats."""
    lines = [f"{ell} {p!r}" for ell, p in spectrum_rows(spec)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trace(path, trace: BroadenedTrace) -> None:
    lines = [f"{x!r} {y!r}" for x, y in trace_rows(trace)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_spectrum(path) -> ElectronSpectrum:
    """Load ``(ell, P_ell)`` pairs into a symmetric spectrum; missing orders are zero."""
    data = np.loadtxt(Path(path), dtype=float, comments="#", delimiter=None, ndmin=2)
    if data.shape[1] != 2:
        raise ValidationError(f"{path}: expected two columns (ell, P)")
    ells = data[:, 0]
    if np.any(ells != np.round(ells)):
        raise ValidationError(f"{path}: ell column must hold integers")
    if np.any(data[:, 1] < 0):
        raise ValidationError(f"{path}: probabilities must be non-negative")
    ells = ells.astype(int)
    if len(set(ells.tolist())) != ells.size:
        raise ValidationError(f"{path}: repeated ell values")
    l_max = int(np.max(np.abs(ells)))
    probs = np.zeros(2 * l_max + 1)
    probs[ells + l_max] = data[:, 1]
    return ElectronSpectrum(probs, l_max, "Imported", complex("nan"), float("nan"), 0.0, {"path": str(path)})
