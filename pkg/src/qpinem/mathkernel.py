r"""Special functions and combinatoric kernels.

Cylindrical Bessel functions :math:`J_\ell`, :math:`I_\ell` (integer order) use
the power series for small argument and Miller's backward recurrence
otherwise. :math:`K_0`, :math:`K_1` use the logarithmic series below
``x = 2`` and Steed's continued fraction above.

Displacement-operator matrix elements are evaluated through a normalized
associated-Laguerre recurrence with log-space prefactors, which stays
accurate for Fock indices in the thousands.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError

EULER_GAMMA = 0.57721566490153286061
MAX_ORDER = 512
SERIES_SWITCH = 2.0

_RESCALE = 1e200


@dataclass(frozen=True)
class LogFactorialTable:
    """``values[n] = ln(n!)`` for ``n`` in ``[0, capacity]``."""

    values: np.ndarray

    @classmethod
    def build(cls, capacity: int) -> "LogFactorialTable":
        vals = np.array([math.lgamma(n + 1.0) for n in range(capacity + 1)])
        vals.setflags(write=False)
        return cls(vals)

    @property
    def capacity(self) -> int:
        return len(self.values) - 1

    def check(self, n_max: int) -> None:
        if n_max > self.capacity:
            raise CapacityError(
                f"Fock index {n_max} exceeds log-factorial capacity {self.capacity}"
            )

    def __getitem__(self, n):
        return self.values[n]


LOG_FACTORIAL = LogFactorialTable.build(4096)


def _check_order_arg(order: int, x: float) -> None:
    if not math.isfinite(x):
        raise DomainError(f"non-finite argument {x!r}")
    if abs(order) > MAX_ORDER:
        raise DomainError(f"|order| must not exceed {MAX_ORDER}, got {order}")


# ---------------------------------------------------------------------------
# Order tables: all orders 0..l_max for an array of arguments
# ---------------------------------------------------------------------------

def _series_table(l_max: int, x: np.ndarray, sign: float) -> np.ndarray:
    """Power series for J (sign=-1) or I (sign=+1), valid for x <= 2."""
    out = np.zeros((x.size, l_max + 1))
    pos = x > 0
    out[~pos, 0] = 1.0
    if not pos.any():
        return out
    xp = x[pos]
    half = 0.5 * xp
    q = sign * half * half
    with np.errstate(divide="ignore"):
        log_half = np.log(half)  # -inf for subnormal x
    for ell in range(l_max + 1):
        lead = np.ones_like(xp) if ell == 0 else np.exp(ell * log_half - math.lgamma(ell + 1.0))
        term = np.ones_like(xp)
        total = np.ones_like(xp)
        k = 0
        while True:
            k += 1
            term = term * q / (k * (k + ell))
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        out[pos, ell] = lead * total
    return out


def _miller_table(l_max: int, x: np.ndarray, modified: bool) -> np.ndarray:
    """Backward recurrence normalised by the generating-function sum.

    For J: ``1 = J_0 + 2 sum_k J_{2k}``.
    For I the scaled values ``exp(-x) I_l`` are returned, normalised by
    ``exp(x) = I_0 + 2 sum_k I_k``.
    """
    xmax = float(x.max())
    if modified:
        top = max(l_max, int(9.0 * math.sqrt(xmax) + 1)) + 40
    else:
        top = max(l_max, int(xmax)) + 40 + int(math.sqrt(60.0 * max(l_max, xmax)))
    top += top % 2
    out = np.zeros((x.size, l_max + 1))
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    two_over_x = 2.0 / x
    for k in range(top, 0, -1):
        # cur holds order k; produce order k-1
        if modified:
            prev = k * two_over_x * cur + nxt
            norm += 2.0 * cur
        else:
            prev = k * two_over_x * cur - nxt
            if k % 2 == 0:
                norm += 2.0 * cur
        nxt, cur = cur, prev
        if k - 1 <= l_max:
            out[:, k - 1] = cur
        big = np.abs(cur) > _RESCALE
        if big.any():
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            cur = cur * scale
            nxt = nxt * scale
            norm = norm * scale
            out *= scale[:, None]
    norm += cur
    return out / norm[:, None]


def _order_table(l_max: int, x, modified: bool) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite Bessel argument")
    if np.any(x < 0):
        raise DomainError("Bessel argument must be non-negative")
    out = np.empty((x.size, l_max + 1))
    small = x <= SERIES_SWITCH
    if small.any():
        out[small] = _series_table(l_max, x[small], 1.0 if modified else -1.0)
        if modified:
            out[small] *= np.exp(-x[small])[:, None]
    if (~small).any():
        out[~small] = _miller_table(l_max, x[~small], modified)
    return out


def bessel_j_table(l_max: int, x) -> np.ndarray:
    """``J_l(x)`` for ``l = 0..l_max``; shape ``(len(x), l_max + 1)``."""
    return _order_table(l_max, x, modified=False)


def bessel_i_scaled_table(l_max: int, x) -> np.ndarray:
    """``exp(-x) I_l(x)`` for ``l = 0..l_max``; shape ``(len(x), l_max + 1)``."""
    return _order_table(l_max, x, modified=True)


# ---------------------------------------------------------------------------
# Scalar API
# ---------------------------------------------------------------------------

def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind, integer order, real ``x >= 0``."""
    _check_order_arg(order, x)
    if x < 0:
        raise DomainError("x must be non-negative")
    ell = abs(order)
    val = float(bessel_j_table(ell, x)[0, ell])
    if order < 0 and ell % 2:
        val = -val
    return val


def bessel_i(order: int, x: float, scaled: bool = False) -> float:
    """Modified Bessel function of the first kind.

    With ``scaled=True`` returns ``exp(-x) I_l(x)``, which never overflows.
    """
    _check_order_arg(order, x)
    if x < 0:
        raise DomainError("x must be non-negative")
    ell = abs(order)
    val = float(bessel_i_scaled_table(ell, x)[0, ell])
    if scaled:
        return val
    if x > 700.0:
        raise OverflowError(f"I_{order}({x}) overflows; use scaled=True")
    return val * math.exp(x)


def _k01_series(x: float) -> tuple[float, float]:
    half = 0.5 * x
    q = half * half
    log_half = math.log(half)
    i0 = i1 = 0.0
    s0 = s1 = 0.0
    t0 = 1.0  # q^k / (k!)^2
    t1 = 1.0  # q^k / (k! (k+1)!)
    psi = -EULER_GAMMA  # psi(k + 1)
    k = 0
    while True:
        psi_next = psi + 1.0 / (k + 1)
        i0 += t0
        i1 += t1
        s0 += psi * t0
        s1 += (psi + psi_next) * t1
        if t0 < 1e-18 * i0 and k > 2:
            break
        k += 1
        t0 *= q / (k * k)
        t1 *= q / (k * (k + 1))
        psi = psi_next
    i1 *= half
    k0 = -log_half * i0 + s0
    k1 = 1.0 / x + log_half * i1 - 0.5 * half * s1
    return k0, k1


def _k01_steed(x: float) -> tuple[float, float]:
    # Steed's CF2 (Temme's method) at zero fractional order
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 100000):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < 1e-17:
            break
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def bessel_k(order: int, x: float) -> float:
    """Modified Bessel function of the second kind, orders 0 and 1."""
    if order not in (0, 1):
        raise DomainError("only orders 0 and 1 are supported")
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"K_{order} requires finite x > 0, got {x!r}")
    k0, k1 = _k01_series(x) if x <= SERIES_SWITCH else _k01_steed(x)
    return k0 if order == 0 else k1


# ---------------------------------------------------------------------------
# Displacement-operator matrix elements
# ---------------------------------------------------------------------------

def _laguerre_normalized(j_max: int, k, x: float) -> np.ndarray:
    r"""Rows ``j = 0..j_max`` of :math:`L_j^{(k)}(x) / \binom{j+k}{j}`.

    ``k`` may be an array of non-negative integers; output has shape
    ``(j_max + 1, len(k))``. The normalised recurrence
    ``(j+k+1) y_{j+1} = (2j+k+1-x) y_j - j y_{j-1}`` keeps ``|y| <= exp(x/2)``.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.empty((j_max + 1, k.size))
    prev = np.zeros_like(k)
    cur = np.ones_like(k)
    out[0] = cur
    for j in range(j_max):
        nxt = ((2 * j + k + 1 - x) * cur - j * prev) / (j + k + 1)
        prev, cur = cur, nxt
        out[j + 1] = cur
    return out


def displacement_amplitude(n: int, n0: int, beta0: complex) -> complex:
    """``<n| exp(beta0* a^dag - beta0 a) |n0>`` with the global phase dropped."""
    if n < 0 or n0 < 0:
        raise DomainError("Fock indices must be non-negative")
    LOG_FACTORIAL.check(max(n, n0))
    beta0 = complex(beta0)
    x = abs(beta0) ** 2
    j = min(n, n0)
    k = abs(n0 - n)
    if k > 0 and x == 0.0:
        return 0j
    lag = _laguerre_normalized(j, [k], x)[j, 0]
    lf = LOG_FACTORIAL
    log_mag = 0.5 * (lf[j + k] - lf[j]) - lf[k] - 0.5 * x
    if k:
        log_mag += k * math.log(abs(beta0))
    if n0 >= n:
        phase = cmath.exp(1j * k * cmath.phase(-beta0)) if k else 1.0
    else:
        phase = cmath.exp(1j * k * cmath.phase(beta0.conjugate()))
    return complex(math.exp(log_mag) * lag * phase)


def displacement_probability_table(j_max: int, k_max: int, beta0: complex) -> np.ndarray:
    """``Q[k, j] = |<j|S|j+k>|^2 = |<j+k|S|j>|^2`` for ``k <= k_max, j <= j_max``."""
    LOG_FACTORIAL.check(j_max + k_max)
    x = abs(complex(beta0)) ** 2
    ks = np.arange(k_max + 1)
    js = np.arange(j_max + 1)
    if x == 0.0:
        out = np.zeros((k_max + 1, j_max + 1))
        out[0] = 1.0
        return out
    lag = _laguerre_normalized(j_max, ks, x).T  # (k, j)
    lf = LOG_FACTORIAL.values
    log_pref = (
        lf[js[None, :] + ks[:, None]]
        - lf[js][None, :]
        - 2.0 * lf[ks][:, None]
        + ks[:, None] * math.log(x)
        - x
    )
    return np.exp(log_pref) * lag * lag
