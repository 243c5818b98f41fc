import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from schrodingerization.profiles import (
    CRAMER_CONSTANT, CutoffProfile, ErfProfile, ExpAbsProfile, HermiteProfile, ProfileError,
    _exact_polyval, deriv_l2_norm, erf_derivative, hermite_functions, hermite_poly,
    make_erf, make_quartic, mollifier, mollifier_bound, mollifier_cdf, mollifier_constant,
    mollifier_poly, parse_profile, quartic_chi, quartic_tail)

# 30-digit quadrature values
MOLLIFIER_C = 0.443993816168079438
ETA_0 = 0.828568839869105152
ERF_NORM_1E6 = 0.674276570607961405


def test_mollifier_constant_and_peak():
    assert mollifier_constant() == pytest.approx(MOLLIFIER_C, rel=1e-14)
    assert mollifier(0.0)[()] == pytest.approx(ETA_0, rel=1e-14)
    assert mollifier(np.array([-1.0, 1.0, 2.0, -5.0])).tolist() == [0.0] * 4


def test_mollifier_cdf_endpoints_and_monotone():
    y = np.linspace(-1, 1, 201)
    m = mollifier_cdf(y)
    assert m[0] == 0.0 and m[-1] == pytest.approx(1.0, abs=1e-15)
    assert m[100] == pytest.approx(0.5, abs=1e-15)
    assert np.all(np.diff(m) >= 0)


def test_mollifier_cdf_matches_quad():
    from scipy.integrate import quad
    for y in (-0.7, -0.2, 0.3, 0.9):
        ref, _ = quad(lambda p: mollifier(p)[()], -1, y, epsabs=1e-15, epsrel=1e-14)
        assert mollifier_cdf(y)[()] == pytest.approx(ref, abs=1e-14)


def test_mollifier_poly_first_terms():
    assert mollifier_poly(0) == (1,)
    # d/dp exp(1/(p^2-1)) = -2p/(1-p^2)^2 exp(...)
    assert mollifier_poly(1) == (0, -2)
    # Q_2 = 6p^4 - 2 (from direct differentiation)
    assert mollifier_poly(2) == (-2, 0, 0, 0, 6)


@given(st.floats(-0.98, 0.98), st.integers(1, 24))
def test_mollifier_matches_exact_polynomial(p, k):
    q = _exact_polyval(mollifier_poly(k), p)
    exact = q * (1 - p * p) ** (-2 * k) * math.exp(1 / (p * p - 1)) / MOLLIFIER_C
    got = mollifier(p, k)[()]
    # near p = 0 odd orders cancel; round-off is relative to the envelope
    assert got == pytest.approx(exact, rel=1e-9, abs=1e-13 * mollifier_bound(k))


@given(st.floats(-0.9, 0.9), st.integers(1, 12))
def test_mollifier_symmetry(p, k):
    a, b = mollifier(p, k)[()], mollifier(-p, k)[()]
    assert a == pytest.approx((-1) ** k * b, rel=1e-12, abs=1e-280)


@pytest.mark.parametrize("k", [1, 3, 6, 10])
def test_mollifier_finite_difference(k):
    # Richardson-extrapolated central difference of the (k-1)-th derivative
    p = np.array([-0.6, -0.1, 0.35, 0.7])
    def cd(h):
        return (mollifier(p + h, k - 1) - mollifier(p - h, k - 1)) / (2 * h)
    h = 1e-3
    rich = (4 * cd(h / 2) - cd(h)) / 3
    exact = mollifier(p, k)
    assert np.allclose(rich, exact, rtol=1e-6, atol=1e-9 * np.max(np.abs(exact)))


@pytest.mark.parametrize("k", range(0, 11))
def test_mollifier_growth_bound(k):
    p = np.linspace(-0.999, 0.999, 4001)
    assert np.max(np.abs(mollifier(p, k))) <= mollifier_bound(k)


def test_mollifier_order_limit():
    with pytest.raises(ProfileError):
        mollifier(0.0, 41)


def test_hermite_poly_values():
    x = np.array([-1.3, 0.0, 0.4, 2.0])
    assert np.allclose(hermite_poly(3, x), 8 * x**3 - 12 * x)
    assert np.allclose(hermite_poly(4, x), 16 * x**4 - 48 * x**2 + 12)


@given(st.integers(0, 60), st.floats(-30, 30))
def test_hermite_function_cramer_bound(n, x):
    hf = hermite_functions(n, np.array([x]))[n, 0]
    assert abs(hf) <= CRAMER_CONSTANT * math.pi**-0.25 * (1 + 1e-12)


def test_erf_derivative_low_orders():
    x = np.linspace(-2, 2, 9)
    g = 2 / math.sqrt(math.pi) * np.exp(-x * x)
    assert np.allclose(erf_derivative(1, x), g, rtol=1e-14)
    assert np.allclose(erf_derivative(2, x), -2 * x * g, rtol=1e-13, atol=1e-15)
    assert np.allclose(erf_derivative(3, x), (4 * x * x - 2) * g, rtol=1e-13, atol=1e-15)


def test_erf_profile_shape_and_threshold():
    eps = 1e-6
    prof = make_erf(eps)
    assert prof.a == pytest.approx(2 * math.sqrt(math.log(1e6)))
    p = np.linspace(0.5, 20, 50)
    assert np.all(np.abs(prof(p) * np.exp(p) - 1) <= eps)
    assert prof(np.array([0.0]))[0] == pytest.approx(0.5)
    assert prof(np.array([-40.0]))[0] == 0.0
    assert math.exp(deriv_l2_norm(prof, 0)) == pytest.approx(ERF_NORM_1E6, rel=1e-10)


def _spectral_derivative(f, lo, hi, n, k):
    x = lo + (hi - lo) * np.arange(n) / n
    xi = 2 * np.pi * np.fft.fftfreq(n, d=(hi - lo) / n)
    return x, np.real(np.fft.ifft((1j * xi) ** k * np.fft.fft(f(x))))


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_erf_leibniz_matches_spectral(k):
    prof = ErfProfile(3.0)
    x, d = _spectral_derivative(prof, -8.0, 40.0, 1024, k)
    exact = prof.derivative(x, k)
    assert np.max(np.abs(d - exact)) <= 1e-8 * np.max(np.abs(exact))


@pytest.mark.parametrize("k", [1, 2, 4])
def test_cutoff_leibniz_matches_spectral(k):
    prof = CutoffProfile(R=5.0, d=1.0)
    x, d = _spectral_derivative(prof, -4.0, 9.0, 4096, k)
    exact = prof.derivative(x, k)
    assert np.max(np.abs(d - exact)) <= 1e-7 * np.max(np.abs(exact))


def test_cutoff_plateau_and_support():
    prof = CutoffProfile(R=5.0, d=1.0)
    assert prof.support_left == -3.0
    p = np.linspace(-1, 5, 61)
    assert np.allclose(prof.zeta(p), 1.0, atol=1e-15)
    assert np.all(prof(np.array([-3.0, -3.5, 7.0, 8.0])) == 0.0)
    with pytest.raises(ProfileError):
        CutoffProfile(R=5.0, d=0.5)


@pytest.mark.parametrize("r", [1, 2, 3, 4, 6])
def test_hermite_interpolation_conditions(r):
    prof = HermiteProfile(r)
    for k in range(r):
        assert prof.interpolant(np.array([-1.0]), k)[0] == pytest.approx(math.exp(-1), rel=1e-13)
        assert prof.interpolant(np.array([0.0]), k)[0] == pytest.approx((-1) ** k, rel=1e-13)
    # continuity of psi^(k) across both junctions
    for k in range(r):
        for p0 in (-1.0, 0.0):
            lo, hi = prof.derivative(np.array([p0 - 1e-12, p0 + 1e-12]), k)
            assert lo == pytest.approx(hi, abs=1e-6)


def test_hermite_r1_is_linear():
    prof = HermiteProfile(1)
    p = np.linspace(-1, 0, 11)
    assert np.allclose(prof(p), 1 + (1 - math.exp(-1)) * p, rtol=1e-14)


def test_quartic_chi_and_steepness():
    assert quartic_chi(np.array([50.0]))[0] == pytest.approx(0.5)
    assert quartic_chi(np.array([0.0]))[0] == 0.0
    # d chi / dx at 0 is 1 / (2 Gamma(5/4))
    h = 1e-6
    slope = (quartic_chi(np.array([h]))[0] - quartic_chi(np.array([-h]))[0]) / (2 * h)
    assert slope == pytest.approx(1 / 1.81280495411095416, rel=1e-9)
    prof = make_quartic(1e-6)
    assert quartic_tail(prof.a * 0.5) == pytest.approx(1e-6, rel=1e-10)


def test_exp_abs_norms():
    assert deriv_l2_norm(ExpAbsProfile(), 0) == pytest.approx(0.0, abs=1e-12)


def test_parse_profile():
    assert isinstance(parse_profile("exp_abs"), ExpAbsProfile)
    assert parse_profile("hermite:r=3").r == 3
    assert parse_profile("erf:eps=1e-8").epsilon == 1e-8
    assert parse_profile("erf:a=4").a == 4.0
    assert parse_profile("cutoff:d=2", R=10).R == 10
    assert parse_profile("erf:eps=1e-6").spec() == "erf:eps=1e-06"
    for bad in ("nope", "erf:eps", "hermite:r=40", "erf:eps=0.9"):
        with pytest.raises(ProfileError):
            parse_profile(bad)


@given(st.floats(1e-14, 0.3))
def test_erf_nonnegative_and_bounded(eps):
    prof = make_erf(eps)
    p = np.linspace(-20, 20, 401)
    v = prof(p)
    assert np.all(v >= 0)
    assert np.all(v <= np.exp(-p) * (1 + 1e-15))
