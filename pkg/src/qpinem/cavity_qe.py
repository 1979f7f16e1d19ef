"""Cavity mode fed by ``N`` pumped three-level emitters.

``p[n, m]`` is the joint probability of ``n`` cavity quanta and ``m`` emitters
still excited. Time is dimensionless (``g t``), so damping enters only as
``kappa / g``. Every emitter starts excited and the cavity empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrationError, UndefinedError
from .integrate import dopri5
from .interaction import ElectronSpectrum, exact_spectrum
from .populations import custom

MAX_EMITTERS = 256
INNER_TOL_FACTOR = 0.05


@dataclass(frozen=True)
class CavityQEState:
    joint: np.ndarray  # (N+1, N+1), rows n, columns m
    time: float
    n_emitters: int
    kappa_over_g: float

    @property
    def marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def total(self) -> float:
        return math.fsum(self.joint.ravel())

    def mean(self) -> float:
        p = self.marginal
        return math.fsum(np.arange(p.size) * p)


def g2_of(state: CavityQEState) -> float:
    """``(<n^2> - <n>) / <n>^2`` from the cavity marginal."""
    p = state.marginal
    n = np.arange(p.size, dtype=float)
    m1 = math.fsum(n * p)
    if m1 <= 0.0:
        raise UndefinedError("g2 is undefined for an empty cavity")
    return math.fsum(n * (n - 1.0) * p) / m1**2


@dataclass(frozen=True)
class CavityQETrajectory:
    times: np.ndarray
    states: tuple

    def nbar(self) -> np.ndarray:
        return np.array([s.mean() for s in self.states])

    def g2(self) -> np.ndarray:
        """``g2`` per sample, NaN where the cavity is empty."""
        out = []
        for s in self.states:
            try:
                out.append(g2_of(s))
            except UndefinedError:
                out.append(float("nan"))
        return np.array(out)

    def marginals(self) -> np.ndarray:
        return np.array([s.marginal for s in self.states])

    def rows(self) -> list[list[float]]:
        """Export rows ``gt, nbar, g2, p_0 .. p_N``."""
        nb, g2, marg = self.nbar(), self.g2(), self.marginals()
        return [
            [float(t), float(a), float(b), *map(float, p)]
            for t, a, b, p in zip(self.times, nb, g2, marg)
        ]


def default_time_grid(n_emitters: int, kappa_over_g: float = 0.0, n_log: int = 40, n_lin: int = 60) -> np.ndarray:
    """Zero, log-spaced samples up to ``1/N`` and a linear tail.

    The tail ends at ``5/N`` without damping and at ``max(5/N, 5/kappa)``
    otherwise, so the decay of a damped cavity is captured.
    """
    N = int(n_emitters)
    t1 = 1.0 / N
    t_end = 5.0 / N if kappa_over_g <= 0 else max(5.0 / N, 5.0 / kappa_over_g)
    early = np.geomspace(1e-4 * t1, t1, n_log)
    tail = np.linspace(t1, t_end, n_lin + 1)[1:]
    return np.concatenate([[0.0], early, tail])


def _check_args(N, kappa_over_g, t_grid, tol):
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    if N > MAX_EMITTERS:
        raise DomainError(f"N = {N} exceeds the supported {MAX_EMITTERS}")
    if not (kappa_over_g >= 0.0) or not math.isfinite(kappa_over_g):
        raise DomainError("kappa_over_g must be finite and >= 0")
    if not (1e-13 <= tol <= 1e-6):
        raise DomainError("tol must lie in [1e-13, 1e-6]")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be strictly increasing from 0")
    return int(N), t


def _dense_rhs(N: int, kappa: float):
    n = np.arange(N + 1, dtype=float)[:, None]
    m = np.arange(N + 1, dtype=float)[None, :]
    feed = (n[1:] * (m[:, :-1] + 1.0))  # n (m+1) for n >= 1, m <= N-1
    drain = (n + 1.0) * m
    leak_in = kappa * (n[:-1] + 1.0)
    leak_out = kappa * n

    def rhs(t, p):
        out = -drain * p
        out[1:, :-1] += feed * p[:-1, 1:]
        if kappa:
            out -= leak_out * p
            out[:-1, :] += leak_in * p[1:, :]
        return out

    return rhs


def _diagonal_rhs(N: int):
    # q_n = p[n, N-n]: dq_n = n (N-n+1) q_{n-1} - (n+1)(N-n) q_n
    n = np.arange(N + 1, dtype=float)
    feed = n[1:] * (N - n[1:] + 1.0)
    drain = (n + 1.0) * (N - n)

    def rhs(t, q):
        out = -drain * q
        out[1:] += feed * q[:-1]
        return out

    return rhs


def evolve(
    N: int, kappa_over_g: float, t_grid=None, tol: float = 1e-10, dense: bool = False
) -> CavityQETrajectory:
    """Integrate the joint populations and sample them on ``t_grid`` (units of ``1/g``).

    Without damping only the anti-diagonal ``n + m = N`` is populated and is
    integrated on its own; ``dense=True`` forces the full generator.
    """
    if t_grid is None:
        t_grid = default_time_grid(N, kappa_over_g)
    N, t = _check_args(N, kappa_over_g, t_grid, tol)
    floor = -10.0 * tol

    def check(time, y):
        lo = float(np.min(y))
        if lo < floor:
            raise IntegrationError(f"probability {lo:.3g} below {floor:.3g} at gt={time:g}")

    h0 = min(1e-3 / N**2, t[1] if t.size > 1 else 1.0)
    # local error target kept well inside the 10*tol acceptance band
    inner = tol * INNER_TOL_FACTOR
    if kappa_over_g == 0.0 and not dense:
        q0 = np.zeros(N + 1)
        q0[0] = 1.0
        sol = dopri5(_diagonal_rhs(N), q0, t, inner, h0=h0, check=check)
        joint = []
        for q in sol:
            p = np.zeros((N + 1, N + 1))
            p[np.arange(N + 1), N - np.arange(N + 1)] = q
            joint.append(p)
    else:
        p0 = np.zeros((N + 1, N + 1))
        p0[0, N] = 1.0
        joint = dopri5(_dense_rhs(N, float(kappa_over_g)), p0, t, inner, h0=h0, check=check)
    states = []
    for time, p in zip(t, joint):
        s = math.fsum(p.ravel())
        if abs(s - 1.0) > 10.0 * tol:
            raise IntegrationError(f"probability sum drifted to {s!r} at gt={time:g}")
        states.append(CavityQEState(p, float(time), N, float(kappa_over_g)))
    return CavityQETrajectory(t, tuple(states))


def spectra_over_time(traj: CavityQETrajectory, beta0: complex, l_max: int | None = None) -> list[ElectronSpectrum]:
    """Exact electron spectrum for the instantaneous cavity marginal at every sample."""
    if abs(complex(beta0)) > 2.0:
        raise DomainError("|beta0| must not exceed 2")
    out = []
    for s in traj.states:
        # solver noise below the integration floor is clipped before wrapping
        p = np.clip(s.marginal, 0.0, None)
        spec = exact_spectrum(custom(p), beta0, l_max)
        out.append(spec)
    return out
