import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import fine_structure as ALPHA

from qpinem.coupling_models import (
    C_NM_PER_FS,
    HBAR_EV_FS,
    DipoleMode,
    ElectronKinematics,
    depolarization_factor,
    dipolar_beta0,
    driven_boson_population,
    ellipsoid_mode,
    fermion_steady_state,
    intensity_from_field,
    isotropic_eels_probability,
    kappa_over_g,
    max_abs_beta0,
    purcell_enhancement,
    saturation_intensity,
    shell_mode,
    zeta,
)
from qpinem.errors import DomainError

KIN10 = ElectronKinematics.from_kinetic_energy(10.0)
KIN100 = ElectronKinematics.from_kinetic_energy(100.0)


# ----------------------------------------------------------------- kinematics


def test_kinematics_100kev():
    # independent route: momentum from E^2 = (pc)^2 + (mc^2)^2
    rest, kev = 510.99895, 100.0
    e_tot = kev + rest
    pc = math.sqrt(e_tot**2 - rest**2)
    assert KIN100.velocity == pytest.approx(pc / e_tot, rel=1e-12)
    assert KIN100.gamma == pytest.approx(e_tot / rest, rel=1e-12)


@pytest.mark.parametrize("kev", [0.0, -1.0])
def test_kinematics_domain(kev):
    with pytest.raises(DomainError):
        ElectronKinematics.from_kinetic_energy(kev)


# ----------------------------------------------------------------- dipolar coupling


def test_zero_dipole_zero_coupling():
    assert dipolar_beta0(DipoleMode(2.0, 0.0, 0.0, 5.0), KIN100) == 0


@pytest.mark.parametrize("field", ["omega0", "b"])
def test_dipole_mode_validation(field):
    args = {"omega0": 2.0, "b": 5.0}
    args[field] = 0.0
    with pytest.raises(DomainError):
        DipoleMode(args["omega0"], 1.0, 0.0, args["b"])


def test_dipolar_beta0_against_mpmath_bessel():
    w0, px, pz, b = 3.0, 0.7 - 0.2j, 1.3j, 12.0
    z = w0 * b / (KIN100.velocity * C_NM_PER_FS * KIN100.gamma)
    pref = 2 * ALPHA * w0 / (C_NM_PER_FS * KIN100.velocity**2 * KIN100.gamma)
    ref = -pref * (1j * px * float(mp.besselk(1, z)) + pz / KIN100.gamma * float(mp.besselk(0, z)))
    got = dipolar_beta0(DipoleMode(w0, px, pz, b), KIN100)
    assert abs(got - ref) <= 1e-11 * abs(ref)


def test_dipolar_phase_convention():
    # a purely transverse real dipole gives a purely imaginary, negative-imaginary coupling
    got = dipolar_beta0(DipoleMode(2.0, 1.0, 0.0, 5.0), KIN100)
    assert got.real == 0 and got.imag < 0
    got = dipolar_beta0(DipoleMode(2.0, 0.0, 1.0, 5.0), KIN100)
    assert got.imag == 0 and got.real < 0


@pytest.mark.parametrize("target", [5.0, 10.0])
def test_large_b_decay_matches_k_asymptotics(target):
    w0 = 2.0
    scale = KIN100.velocity * C_NM_PER_FS * KIN100.gamma / w0
    b1, b2 = target * scale, 2 * target * scale
    r = abs(dipolar_beta0(DipoleMode(w0, 1.0, 0, b2), KIN100)) / abs(dipolar_beta0(DipoleMode(w0, 1.0, 0, b1), KIN100))
    z1, z2 = zeta(w0, b1, KIN100), zeta(w0, b2, KIN100)
    asym = math.exp(-(z2 - z1)) * math.sqrt(z1 / z2)
    # leading asymptotics; the next term is O(1/zeta)
    assert r == pytest.approx(asym, rel=0.5 / target)


# ----------------------------------------------------------------- EELS


def test_eels_zero_dipole():
    assert isotropic_eels_probability(0.0, 2.0, 5.0, KIN100) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.3, 5.0), st.floats(1.0, 50.0), st.floats(1.0, 300.0))
def test_eels_equals_three_dipole_sum(p, w0, b, kev):
    kin = ElectronKinematics.from_kinetic_energy(kev)
    total = sum(
        abs(dipolar_beta0(DipoleMode(w0, px, pz, b, py), kin)) ** 2
        for px, py, pz in [(p, 0, 0), (0, p, 0), (0, 0, p)]
    )
    assert isotropic_eels_probability(p, w0, b, kin) == pytest.approx(total, rel=1e-13)


def test_eels_nonrelativistic_limit():
    kin = ElectronKinematics.from_kinetic_energy(1e-6)
    z = zeta(2.0, 5.0, kin)
    got = isotropic_eels_probability(1.0, 2.0, 5.0, kin)
    pref = 2 * ALPHA * 2.0 / (C_NM_PER_FS * kin.velocity**2 * kin.gamma)
    ref = pref**2 * (float(mp.besselk(1, z)) ** 2 + float(mp.besselk(0, z)) ** 2)
    assert got == pytest.approx(ref, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(1.0, 60.0), st.floats(1.01, 3.0))
def test_eels_decreasing_in_b(w0, b, factor):
    assert isotropic_eels_probability(1.0, w0, b * factor, KIN10) < isotropic_eels_probability(1.0, w0, b, KIN10)


def test_eels_domain():
    with pytest.raises(DomainError):
        isotropic_eels_probability(1.0, 2.0, 0.0, KIN10)


# ----------------------------------------------------------------- ellipsoid and shell


def test_depolarization_sphere_limit():
    assert depolarization_factor(1.0 + 1e-6) == pytest.approx(1 / 3, abs=1e-5)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.001, 100.0), st.floats(1.001, 1.5))
def test_depolarization_bounded_and_decreasing(r, factor):
    L = depolarization_factor(r)
    assert 0 < L < 1 / 3
    assert depolarization_factor(r * factor) < L


def test_depolarization_against_quadrature():
    # in-plane factor of an oblate spheroid with semi-axes (a, a, a/r)
    r = 3.0
    c2 = 1.0 / r**2
    ref = 0.5 * c2**0.5 * float(mp.quad(lambda s: 1 / ((s + 1) ** 2 * mp.sqrt(s + c2)), [0, mp.inf]))
    assert depolarization_factor(r) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("r", [1.0, 0.5])
def test_depolarization_domain(r):
    with pytest.raises(DomainError):
        depolarization_factor(r)


def test_silver_ellipsoid_preset():
    a = 10.0
    volume = 4 * math.pi / 3 * a * a * (a / 5.0)
    w0, p = ellipsoid_mode(5.0, volume)
    hw0 = HBAR_EV_FS * w0
    assert 1.0 <= hw0 <= 3.0
    assert p > 0
    top = max_abs_beta0(w0, p, a, KIN10)
    assert 0.03 <= top <= 0.3


def test_max_abs_beta0_is_orientation_maximum():
    w0, p, b = 4.0, 5.0, 10.0
    top = max_abs_beta0(w0, p, b, KIN10)
    for th in np.linspace(0, math.pi, 37):
        val = abs(dipolar_beta0(DipoleMode(w0, p * math.sin(th), p * math.cos(th), b), KIN10))
        assert val <= top * (1 + 1e-12)
    assert max_abs_beta0(w0, p, 2 * b, KIN10) < top


def test_shell_sqrt2_scaling():
    w1, p1 = shell_mode(2.0, 20.0)
    w2, p2 = shell_mode(4.0, 20.0)
    assert w2 / w1 == pytest.approx(math.sqrt(2), rel=1e-14)
    assert p1 > 0 and p2 > 0


def test_shell_silica_regime():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        w0, p = shell_mode(4.0, 20.0, eps_core=2.0)
    assert 1.0 <= HBAR_EV_FS * w0 <= 4.0
    assert p > 0


def test_shell_thickness_limits():
    with pytest.warns(UserWarning):
        shell_mode(8.0, 20.0)
    with pytest.raises(DomainError):
        shell_mode(11.0, 20.0)
    with pytest.raises(DomainError):
        shell_mode(0.0, 20.0)


# ----------------------------------------------------------------- Purcell


def test_purcell_example():
    assert purcell_enhancement(1e4, 12.0, 2.6775) == pytest.approx(195.4, abs=0.05)


@settings(max_examples=30)
@given(st.floats(1.0, 1e6))
def test_purcell_linear_in_q(q):
    assert purcell_enhancement(2 * q, 12.0, 2.6775) == pytest.approx(2 * purcell_enhancement(q, 12.0, 2.6775), rel=1e-14)


def test_kappa_over_g_band():
    ef = purcell_enhancement(1e4, 12.0, 2.6775)
    assert 0.05 <= kappa_over_g(1e14, 1e4, ef, 1e9) <= 0.1


def test_purcell_domain():
    with pytest.raises(DomainError):
        purcell_enhancement(0.0, 12.0, 2.0)


# ----------------------------------------------------------------- driven populations


def test_saturation_intensity_against_si_form():
    kappa, p = 0.01, 0.5  # rad/fs, e*nm
    hbar = 6.62607015e-34 / (2 * math.pi)
    e, c, eps0 = 1.602176634e-19, 299792458.0, 8.8541878128e-12
    p_si = p * e * 1e-9
    ref = c * eps0 * (hbar * kappa * 1e15) ** 2 / (4 * p_si**2)
    assert saturation_intensity(kappa, p) == pytest.approx(ref, rel=1e-8)
    with pytest.raises(DomainError):
        saturation_intensity(kappa, 0.0)


def test_intensity_from_field():
    assert intensity_from_field(1e6) == pytest.approx(2 * 8.8541878128e-12 * 299792458.0 * 1e12, rel=1e-9)


def test_fermion_steady_state_examples():
    assert fermion_steady_state(0.0) == 0.0
    assert fermion_steady_state(1.0) == 0.25
    assert fermion_steady_state(math.inf) == 0.5
    assert fermion_steady_state(1e12) == pytest.approx(0.5, abs=1e-12)


def test_driven_boson_examples():
    assert driven_boson_population(2.0) == 1.0
    assert driven_boson_population(0.0) == 0.0


@pytest.mark.parametrize("fn", [fermion_steady_state, driven_boson_population])
def test_population_domain(fn):
    with pytest.raises(DomainError):
        fn(-0.1)


@settings(max_examples=60)
@given(st.floats(0.0, 1e6), st.floats(0.0, 1e6))
def test_fermion_concave_increasing_bounded(a, b):
    lo, hi = sorted((a, b))
    f = fermion_steady_state
    assert 0 <= f(lo) <= f(hi) <= 0.5
    assert f(0.5 * (lo + hi)) >= 0.5 * (f(lo) + f(hi)) - 1e-15


@settings(max_examples=60)
@given(st.floats(0.0, 1e6), st.floats(0.0, 1e6))
def test_boson_population_linear(a, b):
    assert driven_boson_population(a + b) == pytest.approx(driven_boson_population(a) + driven_boson_population(b), rel=1e-14, abs=1e-300)


def test_boson_exceeds_fermion_bound():
    assert driven_boson_population(10.0) > 0.5 >= fermion_steady_state(10.0)
