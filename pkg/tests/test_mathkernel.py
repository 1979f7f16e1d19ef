import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpinem.errors import CapacityError, DomainError
from qpinem.mathkernel import (
    LOG_FACTORIAL,
    bessel_i,
    bessel_i_scaled_table,
    bessel_j,
    bessel_j_table,
    bessel_k,
    displacement_amplitude,
    displacement_probability_table,
)

mp.mp.dps = 40


def direct_sum_amplitude(n, n0, beta0):
    """<n|D(alpha)|n0> with alpha = conj(beta0), normal-ordered sum in extended precision."""
    a = mp.mpc(beta0.real, -beta0.imag)
    total = mp.mpc(0)
    for k in range(min(n, n0) + 1):
        total += (
            a ** (n - k) / mp.factorial(n - k)
            * (-mp.conj(a)) ** (n0 - k) / mp.factorial(n0 - k)
            * mp.sqrt(mp.factorial(n) * mp.factorial(n0)) / mp.factorial(k)
        )
    return complex(total * mp.exp(-abs(a) ** 2 / 2))


def miller_oracle(order, x, start=None):
    """Downward three-term recurrence in extended precision, normalised by 1 = J0 + 2 sum J_2k."""
    x = mp.mpf(x)
    top = start or int(max(order, x) + 60)
    nxt, cur = mp.mpf(0), mp.mpf("1e-30")
    vals = {}
    for k in range(top, 0, -1):
        prev = 2 * k / x * cur - nxt
        nxt, cur = cur, prev
        vals[k - 1] = cur
    norm = vals[0] + 2 * sum(vals[k] for k in vals if k > 0 and k % 2 == 0)
    return float(vals[order] / norm)


# ----------------------------------------------------------------- log factorials


def test_log_factorial_table_basics():
    v = LOG_FACTORIAL.values
    assert v[0] == 0.0
    assert LOG_FACTORIAL.capacity == 4096
    assert np.all(np.diff(v[1:]) > 0)


def test_log_factorial_increments_match_log_n():
    v = LOG_FACTORIAL.values
    n = np.arange(1, v.size)
    # relative to ln(n!): absolute ulp of values near 3e4 is ~4e-12
    err = np.abs(np.diff(v) - np.log(n))
    assert np.all(err <= 1e-12 * np.maximum(1.0, v[1:]))
    assert np.all(err[:170] <= 1e-12)


def test_log_factorial_capacity_error():
    with pytest.raises(CapacityError):
        LOG_FACTORIAL.check(4097)


# ----------------------------------------------------------------- Bessel J


def test_bessel_j_examples():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 1.0) == pytest.approx(float(mp.besselj(1, 1)), rel=1e-12)
    assert bessel_j(1, 1.0) == pytest.approx(0.4400505857, abs=1e-10)


def test_bessel_j0_first_zero():
    z0 = float(mp.findroot(lambda x: mp.besselj(0, x), 2.4))
    assert abs(bessel_j(0, 2.4048255577)) < 1e-9
    assert abs(bessel_j(0, z0)) < 1e-15


def test_bessel_j_negative_order():
    assert bessel_j(-3, 2.2) == pytest.approx(-bessel_j(3, 2.2), rel=1e-15)
    assert bessel_j(-4, 2.2) == bessel_j(4, 2.2)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 120), st.floats(0.0, 100.0))
def test_bessel_j_against_mpmath(order, x):
    ref = float(mp.besselj(order, x))
    assert abs(bessel_j(order, x) - ref) <= 1e-10 * max(abs(ref), 1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 40), st.floats(0.1, 60.0))
def test_bessel_j_matches_downward_recurrence(order, x):
    ref = miller_oracle(order, x)
    assert abs(bessel_j(order, x) - ref) <= 1e-10 * max(abs(ref), 1e-10)


def test_bessel_j_table_normalisation():
    x = np.array([0.5, 3.0, 17.0, 80.0])
    t = bessel_j_table(200, x)
    assert t.shape == (4, 201)
    np.testing.assert_allclose(t[:, 0] ** 2 + 2 * np.sum(t[:, 1:] ** 2, axis=1), 1.0, atol=1e-13)


def test_bessel_j_domain():
    with pytest.raises(DomainError):
        bessel_j(0, float("nan"))
    with pytest.raises(DomainError):
        bessel_j(513, 1.0)


# ----------------------------------------------------------------- Bessel I


def test_bessel_i_examples():
    assert bessel_i(0, 0.0) == 1.0
    assert bessel_i(1, 1.0) == pytest.approx(0.5651591040, abs=1e-10)
    row = bessel_i_scaled_table(200, 2.0)[0]
    assert row[0] + 2 * math.fsum(row[1:]) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 100), st.floats(0.0, 100.0))
def test_bessel_i_against_mpmath(order, x):
    ref = float(mp.besseli(order, x) * mp.exp(-x))
    assert bessel_i(order, x, scaled=True) == pytest.approx(ref, rel=1e-10, abs=1e-300)


def test_bessel_i_overflow_guard():
    with pytest.raises(OverflowError):
        bessel_i(0, 701.0)
    assert 0 < bessel_i(0, 701.0, scaled=True) < 1


# ----------------------------------------------------------------- Bessel K


def k_integral(order, x):
    # the integrand is below exp(-x cosh 10) beyond t = 10
    return float(mp.quad(lambda t: mp.exp(-x * mp.cosh(t)) * mp.cosh(order * t), [0, 1, 3, 10]))


def test_bessel_k_examples():
    assert bessel_k(0, 1.0) == pytest.approx(k_integral(0, 1.0), rel=1e-12)
    assert bessel_k(1, 1.0) == pytest.approx(k_integral(1, 1.0), rel=1e-12)
    assert bessel_k(0, 1.0) == pytest.approx(0.4210244382, abs=1e-10)
    assert bessel_k(1, 1.0) == pytest.approx(0.6019072302, abs=1e-10)
    assert bessel_k(0, 2.0) < bessel_k(0, 1.0)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 1), st.floats(1e-4, 600.0))
def test_bessel_k_against_mpmath(order, x):
    assert bessel_k(order, x) == pytest.approx(float(mp.besselk(order, x)), rel=1e-10)


@pytest.mark.parametrize("x", [0.0, -1.0, float("inf")])
def test_bessel_k_domain(x):
    with pytest.raises(DomainError):
        bessel_k(0, x)


def test_bessel_k_order_restriction():
    with pytest.raises(DomainError):
        bessel_k(2, 1.0)


# ----------------------------------------------------------------- displacement


def test_displacement_vacuum_element():
    assert abs(displacement_amplitude(0, 0, cmath.exp(0.3j))) == pytest.approx(0.6065306597, abs=1e-10)


def test_displacement_unitarity_example():
    total = math.fsum(abs(displacement_amplitude(n, 7, 0.9)) ** 2 for n in range(80))
    assert total == pytest.approx(1.0, abs=1e-10)


def test_displacement_against_direct_sum():
    b = 0.6 + 0.2j
    ref = direct_sum_amplitude(3, 5, b)
    assert abs(displacement_amplitude(3, 5, b) - ref) <= 1e-12 * abs(ref)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 40), st.integers(0, 40), st.floats(0.01, 2.0), st.floats(-math.pi, math.pi))
def test_displacement_matches_direct_sum(n, n0, mag, phase):
    b = mag * cmath.exp(1j * phase)
    ref = direct_sum_amplitude(n, n0, b)
    got = displacement_amplitude(n, n0, b)
    assert abs(got - ref) <= 1e-11 * max(abs(ref), 1e-200)


def test_displacement_large_index_stays_accurate():
    b = 0.3 - 0.5j
    ref = direct_sum_amplitude(200, 203, b)
    assert abs(displacement_amplitude(200, 203, b) - ref) <= 1e-10 * abs(ref)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 64), st.floats(0.0, 2.0), st.floats(-math.pi, math.pi))
def test_displacement_unitarity(n0, mag, phase):
    b = mag * cmath.exp(1j * phase)
    total = math.fsum(abs(displacement_amplitude(n, n0, b)) ** 2 for n in range(n0 + 80))
    assert total == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 60), st.integers(0, 60), st.floats(0.0, 2.0), st.floats(-math.pi, math.pi))
def test_displacement_magnitude_symmetry(n, n0, mag, phase):
    b = mag * cmath.exp(1j * phase)
    a, c = abs(displacement_amplitude(n, n0, b)), abs(displacement_amplitude(n0, n, b))
    assert a == pytest.approx(c, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("b", [1e-3, 1e-2 * cmath.exp(1.1j), 5e-3 * cmath.exp(-2.5j)])
@pytest.mark.parametrize("n", [0, 3, 10])
def test_displacement_phase_convention(n, b):
    amp = displacement_amplitude(n, n + 1, b)
    assert amp / abs(amp) == pytest.approx(-b / abs(b), abs=1e-12)


def test_probability_table_matches_amplitudes():
    b = 0.8 * cmath.exp(0.4j)
    q = displacement_probability_table(12, 9, b)
    for k in range(10):
        for j in range(13):
            assert q[k, j] == pytest.approx(abs(displacement_amplitude(j, j + k, b)) ** 2, rel=1e-12, abs=1e-300)


def test_probability_table_zero_coupling():
    q = displacement_probability_table(4, 3, 0.0)
    assert np.all(q[0] == 1.0) and np.all(q[1:] == 0.0)


def test_displacement_capacity():
    with pytest.raises(CapacityError):
        displacement_amplitude(5000, 0, 0.1)
    with pytest.raises(DomainError):
        displacement_amplitude(-1, 0, 0.1)


def test_bessel_subnormal_argument():
    assert bessel_j(0, 5e-324) == 1.0
    assert bessel_i(0, 5e-324) == 1.0
    assert bessel_j(1, 5e-324) == 0.0
