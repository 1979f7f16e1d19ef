"""Electron energy-gain/loss spectra after interaction with a single mode.

Sign convention: ``ell > 0`` is a net energy *gain* of ``ell`` quanta by the
electron (the mode loses ``ell`` quanta); ``ell < 0`` is a loss.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .mathkernel import (
    bessel_i_scaled_table,
    bessel_j_table,
    displacement_probability_table,
)
from .populations import PopulationDistribution, g_ell

SOURCES = (
    "Exact",
    "ODE",
    "WeakCoupling",
    "PinemLimit",
    "LargeNFock",
    "LargeNCoherent",
    "LargeNThermal",
    "Fermion",
    "Imported",
)

# beyond the default l_max only this much probability may be discarded
TRIM_EPS = 1e-14
MAX_VALIDATED_BETA = 2.0


@dataclass(frozen=True)
class ElectronSpectrum:
    """Probabilities ``P_ell`` for ``ell = -l_max..l_max``."""

    probabilities: np.ndarray
    l_max: int
    source: str
    beta0: complex
    nbar: float
    deficit: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (2 * self.l_max + 1,):
            raise ValueError("probability vector length must be 2*l_max + 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def ells(self) -> np.ndarray:
        return np.arange(-self.l_max, self.l_max + 1)

    def __getitem__(self, ell: int) -> float:
        if abs(ell) > self.l_max:
            return 0.0
        return float(self.probabilities[ell + self.l_max])

    def total(self) -> float:
        return math.fsum(self.probabilities)

    def gains(self) -> float:
        return math.fsum(self.probabilities[self.l_max + 1 :])

    def losses(self) -> float:
        return math.fsum(self.probabilities[: self.l_max])

    def as_dict(self) -> dict[int, float]:
        return {int(ell): float(p) for ell, p in zip(self.ells, self.probabilities)}

    def truncated(self, l_max: int) -> "ElectronSpectrum":
        """Same spectrum restricted (or zero-padded) to ``|ell| <= l_max``."""
        out = np.zeros(2 * l_max + 1)
        m = min(l_max, self.l_max)
        out[l_max - m : l_max + m + 1] = self.probabilities[self.l_max - m : self.l_max + m + 1]
        dropped = self.total() - math.fsum(out)
        return ElectronSpectrum(
            out, l_max, self.source, self.beta0, self.nbar, self.deficit + max(dropped, 0.0), dict(self.meta)
        )


def _from_signed(gain: np.ndarray, loss: np.ndarray) -> np.ndarray:
    """Assemble a symmetric-index vector from gain[0..] (ell >= 0) and loss[1..]."""
    l_max = max(len(gain) - 1, len(loss) - 1)
    out = np.zeros(2 * l_max + 1)
    out[l_max : l_max + len(gain)] = gain
    if len(loss) > 1:
        out[l_max - len(loss) + 1 : l_max] = loss[1:][::-1]
    return out


def _trim_l_max(probs: np.ndarray, eps: float = TRIM_EPS) -> int:
    """Smallest ``L`` such that the mass outside ``|ell| <= L`` is below eps."""
    l_max = (len(probs) - 1) // 2
    outside = 0.0
    for ell in range(l_max, 0, -1):
        outside += probs[l_max + ell] + probs[l_max - ell]
        if outside >= eps:
            return ell
    return 0


def default_loss_span(n_max: int, beta0: complex) -> int:
    """Generous bound on the number of losses needed for a converged spectrum."""
    x = abs(beta0) ** 2
    spread = x + 2.0 * math.sqrt(x * (n_max + 1))
    return int(math.ceil(spread + 10.0 * math.sqrt(spread + 1.0) + 20.0))


def _check_beta(beta0: complex) -> complex:
    beta0 = complex(beta0)
    if not (math.isfinite(beta0.real) and math.isfinite(beta0.imag)):
        raise DomainError("beta0 must be finite")
    if abs(beta0) > MAX_VALIDATED_BETA:
        warnings.warn(
            f"|beta0| = {abs(beta0):.3g} exceeds the validated range {MAX_VALIDATED_BETA}",
            stacklevel=3,
        )
    return beta0


def exact_spectrum(
    dist: PopulationDistribution, beta0: complex, l_max: int | None = None
) -> ElectronSpectrum:
    """Exact spectrum as an incoherent sum over initial Fock channels.

    ``P_ell = sum_n p_{n+ell} |<n|S|n+ell>|^2`` with ``S`` the displacement
    operator of amplitude ``beta0``. With ``l_max=None`` the range is trimmed
    to the smallest ``L`` that discards less than 1e-14.
    """
    beta0 = _check_beta(beta0)
    p = dist.probabilities
    n_max = dist.n_max
    if l_max is not None and l_max < 0:
        raise DomainError("l_max must be non-negative")
    span = default_loss_span(n_max, beta0)
    if l_max is not None:
        span = max(span, int(l_max))
    q = displacement_probability_table(n_max, span, beta0)  # (k, j)
    loss = q @ p  # loss[k] = sum_j p_j Q[k, j]
    gain = np.array([q[k, : n_max - k + 1] @ p[k:] for k in range(min(span, n_max) + 1)])
    probs = _from_signed(gain, loss)
    full_total = math.fsum(probs)
    L = _trim_l_max(probs) if l_max is None else int(l_max)
    c = (len(probs) - 1) // 2
    probs = probs[c - L : c + L + 1]
    trimmed = max(full_total - math.fsum(probs), 0.0)
    deficit = dist.tail_bound + max(1.0 - dist.total - dist.tail_bound, 0.0) + trimmed
    return ElectronSpectrum(
        probs, L, "Exact", beta0, dist.mean, deficit, {"statistics": dist.kind, "n_max": n_max}
    )


def weak_coupling_probs(nbar: float, beta0: complex) -> tuple[float, float]:
    """First-order ``(P_-1, P_+1) = ((1 + nbar)|beta0|^2, nbar |beta0|^2)``."""
    if nbar < 0:
        raise DomainError("nbar must be non-negative")
    x = abs(complex(beta0)) ** 2
    if math.sqrt(nbar * x) > 0.1:
        warnings.warn("sqrt(nbar)|beta0| > 0.1: outside the weak-coupling regime", stacklevel=2)
    return (1.0 + nbar) * x, nbar * x


def gain_ratio_prediction(dist: PopulationDistribution, ell: int) -> float:
    """Weak-coupling ratio ``P_ell / P_1^ell = g^(ell) / (ell!)^2``."""
    if ell < 2:
        raise DomainError("ell must be >= 2")
    return g_ell(dist, ell) / math.factorial(ell) ** 2


def pinem_limit_spectrum(
    dist: PopulationDistribution, beta0: complex, l_max: int | None = None
) -> ElectronSpectrum:
    """Large-population approximation ``P_ell = sum_n p_n J_ell^2(2 sqrt(n) |beta0|)``."""
    beta0 = complex(beta0)
    b = abs(beta0)
    n = np.arange(dist.n_max + 1)
    weights = dist.probabilities
    keep = weights > 0
    x = 2.0 * np.sqrt(n[keep]) * b
    if l_max is None:
        xm = float(x.max()) if x.size else 0.0
        l_max = int(math.ceil(xm + 6.0 * xm ** (1 / 3) + 12))
    table = bessel_j_table(l_max, x) if x.size else np.zeros((0, l_max + 1))
    pos = weights[keep] @ (table * table)
    probs = np.concatenate([pos[:0:-1], pos])
    return ElectronSpectrum(
        probs, l_max, "PinemLimit", beta0, dist.mean, dist.tail_bound, {"statistics": dist.kind}
    )


def _closed_form_kind(kind: str) -> str:
    kind = kind.lower()
    if kind in ("fock", "coherent", "fockorcoherent"):
        return "fock_or_coherent"
    if kind == "thermal":
        return "thermal"
    raise DomainError(f"unknown large-n statistics kind {kind!r}")


def large_n_closed_form(kind: str, beta: complex, ell: int) -> float:
    """``J_ell^2(2|beta|)`` (Fock, coherent) or ``exp(-2|beta|^2) I_ell(2|beta|^2)`` (thermal).

    ``beta = sqrt(nbar) * beta0``.
    """
    b = abs(complex(beta))
    a = abs(int(ell))
    if _closed_form_kind(kind) == "thermal":
        return float(bessel_i_scaled_table(a, 2.0 * b * b)[0, a])
    j = bessel_j_table(a, 2.0 * b)[0, a]
    return float(j * j)


def large_n_spectrum(kind: str, beta: complex, l_max: int | None = None) -> ElectronSpectrum:
    """Full closed-form spectrum for ``|ell| <= l_max``."""
    b = abs(complex(beta))
    family = _closed_form_kind(kind)
    if family == "thermal":
        z = 2.0 * b * b
        if l_max is None:
            l_max = int(math.ceil(z + 12.0 * math.sqrt(z) + 12))
        pos = bessel_i_scaled_table(l_max, z)[0]
        source = "LargeNThermal"
    else:
        x = 2.0 * b
        if l_max is None:
            l_max = int(math.ceil(x + 6.0 * x ** (1 / 3) + 12))
        pos = bessel_j_table(l_max, x)[0] ** 2
        source = "LargeNFock" if kind.lower() == "fock" else "LargeNCoherent"
    probs = np.concatenate([pos[:0:-1], pos])
    return ElectronSpectrum(probs, l_max, source, complex(beta), float("nan"), 0.0, {"beta": complex(beta)})


def fermion_weak_probs(nbar: float, beta0: complex) -> tuple[float, float]:
    """Two-level mode: ``(P_-1, P_+1) = ((1 - nbar)|beta0|^2, nbar |beta0|^2)``."""
    if not (0.0 <= nbar <= 1.0):
        raise DomainError(f"fermion population must lie in [0, 1], got {nbar!r}")
    x = abs(complex(beta0)) ** 2
    return (1.0 - nbar) * x, nbar * x
