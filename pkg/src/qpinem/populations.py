"""Mode-population distributions over Fock states and their correlations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError, UndefinedError, ValidationError
from .mathkernel import LOG_FACTORIAL

KINDS = ("fock", "coherent", "thermal", "custom")
DEFAULT_TAIL = 1e-12
CUSTOM_RENORM_LIMIT = 1e-6


@dataclass(frozen=True)
class PopulationDistribution:
    """Truncated occupation probabilities ``p_n`` for ``n = 0..n_max``.

    ``tail_bound`` bounds the probability discarded beyond ``n_max``.
    ``mean`` is the nominal average population (exact for Fock and custom
    distributions, the defining parameter for coherent and thermal ones).
    """

    probabilities: np.ndarray
    mean: float
    tail_bound: float
    kind: str

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1

    @property
    def total(self) -> float:
        return math.fsum(self.probabilities)

    def moment(self, power: int = 1) -> float:
        n = np.arange(self.n_max + 1, dtype=float)
        return math.fsum(n**power * self.probabilities)

    def factorial_moment(self, ell: int) -> float:
        r"""``<n (n-1) ... (n-ell+1)>`` accumulated in log space."""
        if ell == 0:
            return self.total
        n = np.arange(ell, self.n_max + 1)
        if n.size == 0:
            return 0.0
        lf = LOG_FACTORIAL.values
        LOG_FACTORIAL.check(self.n_max)
        p = self.probabilities[ell:]
        w = np.zeros_like(p)
        nz = p > 0
        w[nz] = np.exp(lf[n[nz]] - lf[n[nz] - ell] + np.log(p[nz]))
        return math.fsum(w)


def fock(n: int) -> PopulationDistribution:
    if n < 0 or int(n) != n:
        raise DomainError(f"Fock index must be a non-negative integer, got {n!r}")
    n = int(n)
    LOG_FACTORIAL.check(n)
    p = np.zeros(n + 1)
    p[n] = 1.0
    return PopulationDistribution(p, float(n), 0.0, "fock")


def _check_tail(tail_eps: float) -> None:
    if not (0.0 < tail_eps <= 1e-6):
        raise DomainError(f"tail_eps must lie in (0, 1e-6], got {tail_eps!r}")


def coherent(nbar: float, tail_eps: float = DEFAULT_TAIL) -> PopulationDistribution:
    """Poissonian populations ``exp(-nbar) nbar^n / n!``, built in log space."""
    _check_tail(tail_eps)
    if not (nbar >= 0.0) or not math.isfinite(nbar):
        raise DomainError(f"nbar must be finite and >= 0, got {nbar!r}")
    if nbar == 0.0:
        return PopulationDistribution(np.ones(1), 0.0, 0.0, "coherent")
    lf = LOG_FACTORIAL.values
    log_nbar = math.log(nbar)
    # past the mode the ratio p_{n+1}/p_n = nbar/(n+1) < 1 gives a geometric bound
    n = max(int(math.floor(nbar)), 0)
    while True:
        if n + 1 > LOG_FACTORIAL.capacity:
            raise CapacityError(f"coherent(nbar={nbar}) needs more than {LOG_FACTORIAL.capacity} states")
        ratio = nbar / (n + 2)
        log_next = -nbar + (n + 1) * log_nbar - lf[n + 1]
        if ratio < 1.0 and math.exp(log_next) / (1.0 - ratio) < tail_eps:
            tail = math.exp(log_next) / (1.0 - ratio)
            break
        n += 1
    k = np.arange(n + 1)
    p = np.exp(-nbar + k * log_nbar - lf[k])
    return PopulationDistribution(p, float(nbar), tail, "coherent")


def thermal(nbar: float, tail_eps: float = DEFAULT_TAIL) -> PopulationDistribution:
    """Bose-Einstein populations ``(1 - r) r^n`` with ``r = nbar / (1 + nbar)``."""
    _check_tail(tail_eps)
    if not (nbar > 0.0) or not math.isfinite(nbar):
        raise DomainError(f"thermal nbar must be finite and > 0, got {nbar!r}")
    log_r = math.log(nbar) - math.log1p(nbar)
    # tail beyond n_max is r^(n_max + 1)
    n_max = max(int(math.ceil(math.log(tail_eps) / log_r)) - 1, 0)
    if n_max > LOG_FACTORIAL.capacity:
        raise CapacityError(f"thermal(nbar={nbar}) needs {n_max + 1} states")
    k = np.arange(n_max + 1)
    p = np.exp(k * log_r) / (1.0 + nbar)
    tail = math.exp((n_max + 1) * log_r)
    return PopulationDistribution(p, float(nbar), tail, "thermal")


def custom(probabilities) -> PopulationDistribution:
    """Wrap a raw probability vector.

    Vectors whose sum is within 1e-6 of one are renormalised; anything further
    off, or containing negative or non-finite entries, is rejected.
    """
    p = np.asarray(probabilities, dtype=float).ravel()
    if p.size == 0:
        raise ValidationError("empty population vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError("population entries must be finite and non-negative")
    LOG_FACTORIAL.check(p.size - 1)
    s = math.fsum(p)
    if abs(s - 1.0) >= CUSTOM_RENORM_LIMIT:
        raise ValidationError(f"population vector sums to {s!r}, not 1")
    p = p / s
    n = np.arange(p.size)
    return PopulationDistribution(p, math.fsum(n * p), 0.0, "custom")


def load_custom(path) -> PopulationDistribution:
    """Read a single-column text file with one ``p_n`` per line."""
    data = np.loadtxt(Path(path), dtype=float, comments="#", ndmin=1)
    if data.ndim != 1:
        raise ValidationError(f"{path}: expected a single column of probabilities")
    return custom(data)


def g_ell(dist: PopulationDistribution, ell: int) -> float:
    """Zero-delay correlation ``<n(n-1)...(n-ell+1)> / nbar^ell``."""
    if ell < 1 or ell > 8:
        raise DomainError(f"ell must be in [1, 8], got {ell}")
    mean = dist.moment(1) / dist.total
    if mean <= 0.0:
        raise UndefinedError("g_ell is undefined for an empty mode (nbar = 0)")
    fm = dist.factorial_moment(ell) / dist.total
    return fm / mean**ell
