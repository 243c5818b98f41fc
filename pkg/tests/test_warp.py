import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from schrodingerization import warp
from schrodingerization.oracle import solve_reference
from schrodingerization.pipeline import relative_error, solve
from schrodingerization.profiles import make_erf, make_exp_abs, parse_profile
from schrodingerization.system import (
    DynamicalSystem, SpectralBounds, builtin_system, hermitian_split, homogenize,
    spectral_bounds, split_system)

from conftest import random_dissipative


def bounds(lp, lm):
    return SpectralBounds(lp, lm)


# ---------------------------------------------------------------------------
# domain and grid


def test_criterion_width_values():
    assert warp.criterion_width(bounds(0.5, 0.0), 1.0, 1e-6) == pytest.approx(14.3155105579642741, rel=1e-15)
    assert warp.criterion_width(bounds(0.0, 0.5), 1.0, 1e-3) == pytest.approx(7.40775527898213705, rel=1e-15)
    assert warp.choose_domain(bounds(0.0, 0.0), 1.0, math.exp(-10)) == (10.0, 10.0)
    assert warp.choose_domain(bounds(0.5, 0.0), 1.0, 1e-6) == (14.5, 14.5)
    with pytest.raises(warp.ConfigurationError):
        warp.criterion_width(bounds(0, 0), 1.0, 1.5)


def test_domain_validation():
    with pytest.raises(warp.ConfigurationError):
        warp.WarpedDomain(10.0, 10.0, 100)
    with pytest.raises(warp.ConfigurationError):
        warp.WarpedDomain(-1.0, 10.0, 64)
    with pytest.raises(warp.ConfigurationError):
        warp.WarpedDomain(1.0, 2.0, 64)  # p = 0 falls between nodes


@given(st.integers(1, 40), st.integers(1, 40), st.integers(3, 14))
def test_grid_identity(li, ri, log_n):
    L, R = li * 0.5, ri * 0.5
    n = 1 << log_n
    if (L * n / (L + R)) % 1:
        return
    d = warp.WarpedDomain(L, R, n)
    assert d.dp * d.mu_max == pytest.approx(math.pi, rel=1e-14)
    assert d.modes[n // 2] == 0.0
    assert d.grid[d.k_zero] == 0.0
    assert d.grid[0] == pytest.approx(-L, rel=1e-14)
    assert np.max(np.abs(d.modes)) == pytest.approx(d.mu_max)


def test_choose_resolution_rules():
    prof = make_exp_abs()
    n1 = warp.choose_resolution(prof, 1e-3, 20.0)
    n2 = warp.choose_resolution(prof, 5e-4, 20.0)
    assert n2 == 2 * n1
    assert warp.choose_resolution(make_erf(1e-6), 1.0, 20.0) == warp.NP_FLOOR
    ns = [warp.choose_resolution(make_erf(e), e, 40.0) for e in (1e-2, 1e-4, 1e-6)]
    assert all(n & (n - 1) == 0 for n in ns)
    # on a fixed width, n_p / log(1/eps) stays within a factor of two
    ratio = [n / math.log(1 / e) for n, e in zip(ns, (1e-2, 1e-4, 1e-6))]
    assert max(ratio) / min(ratio) <= 2.0 + 1e-12


def test_choose_resolution_needs_enough_derivatives():
    with pytest.raises(Exception):
        warp.choose_resolution(parse_profile("hermite:r=2"), 1e-6, 20.0)


# ---------------------------------------------------------------------------
# initialization and transforms


def test_initialize_examples():
    d = warp.WarpedDomain(8.0, 8.0, 128)
    st_ = warp.initialize(make_exp_abs(), d, np.array([1.0, 0.0]))
    assert np.allclose(st_.values[:, 0], np.exp(-np.abs(d.grid)))
    assert not np.any(st_.values[:, 1])
    u = np.array([0.3, -2.0 + 1j])
    st_ = warp.initialize(make_exp_abs(), d, u)
    assert np.array_equal(st_.values[d.k_zero], u)
    eps = 1e-4
    st_ = warp.initialize(make_erf(eps), d, u)
    k1 = d.k_zero + int(round(1.0 / d.dp))
    assert np.linalg.norm(st_.values[k1] - math.exp(-1) * u) <= eps * np.linalg.norm(u)


def test_fourier_conventions():
    d = warp.WarpedDomain(4.0, 4.0, 32)
    const = warp.WarpedState(np.ones((32, 2), complex), warp.Representation.PHYSICAL, 0.0, d)
    f = warp.to_fourier(const)
    nz = np.flatnonzero(np.abs(f.values[:, 0]) > 1e-14)
    assert nz.tolist() == [16]
    mode = np.exp(1j * d.modes[3] * (d.grid + d.L))[:, None]
    f = warp.to_fourier(warp.WarpedState(mode, warp.Representation.PHYSICAL, 0.0, d))
    expect = np.zeros(32)
    expect[3] = 1.0
    assert np.allclose(f.values[:, 0], expect, atol=1e-14)
    with pytest.raises(ValueError):
        warp.from_fourier(const)


@given(st.integers(0, 2**32 - 1), st.integers(2, 9), st.integers(1, 4))
def test_fourier_round_trip(seed, log_n, m):
    rng = np.random.default_rng(seed)
    n = 1 << log_n
    d = warp.WarpedDomain(2.0, 2.0, n)
    vals = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    s = warp.WarpedState(vals, warp.Representation.PHYSICAL, 0.0, d)
    back = warp.from_fourier(warp.to_fourier(s))
    assert np.max(np.abs(back.values - vals)) <= 1e-13
    # the interpolant reproduces the nodes
    f = warp.to_fourier(s)
    assert np.allclose(warp.evaluate_at(f, d.grid[:5]), vals[:5], atol=1e-12)


# ---------------------------------------------------------------------------
# evolution


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_per_mode_unitarity(n, seed):
    rng = np.random.default_rng(seed)
    a = random_dissipative(rng, n)
    sp = hermitian_split(a)
    d = warp.WarpedDomain(10.0, 10.0, 128)
    v = warp.mode_propagators(sp, d.modes, float(rng.uniform(0.1, 2.0)))
    assert warp.unitarity_defect(v) <= 1e-12
    x = rng.standard_normal((128, n)) + 1j * rng.standard_normal((128, n))
    y = np.einsum("kij,kj->ki", v, x)
    assert np.allclose(np.linalg.norm(y, axis=1), np.linalg.norm(x, axis=1), rtol=1e-12)


def test_zero_mode_ignores_h1():
    a = np.array([[-1.0, 0.5], [-0.5, -2.0]])
    sp = hermitian_split(a)
    v = warp.mode_propagators(sp, np.array([0.0]), 1.0)[0]
    assert np.allclose(v, warp.expm(1j * sp.h2), atol=1e-14)


def test_threads_give_identical_result():
    sp = hermitian_split(np.array([[-1.0, 0.5], [-0.5, -2.0]]))
    d = warp.WarpedDomain(16.0, 16.0, 512)
    a = warp.mode_propagators(sp, d.modes, 1.0, threads=1)
    b = warp.mode_propagators(sp, d.modes, 1.0, threads=4)
    assert np.array_equal(a, b)


def test_evolve_preconditions():
    d = warp.WarpedDomain(4.0, 4.0, 16)
    s = warp.initialize(make_exp_abs(), d, np.ones(1))
    sp = hermitian_split(np.array([[-1.0]]))
    with pytest.raises(ValueError):
        warp.evolve_time_independent(s, sp, 1.0)


def test_scalar_decay_recovery():
    # e^{-p} decay only needs room on the right; the Gaussian left tail is gone by p = -2
    r = solve(builtin_system("scalar-decay"), "erf:eps=1e-6", epsilon=1e-6, L=2.0, R=14.0, n_p=256)
    assert abs(r.u[0] - math.exp(-1)) <= 1e-6


@pytest.mark.parametrize("name", ["zero", "rotation"])
def test_unitary_systems_recover_exactly(name):
    sys = builtin_system(name)
    r = solve(sys, "exp_abs", epsilon=1e-6, n_p=256)
    assert relative_error(r.u, solve_reference(sys).u_T) <= 1e-12
    assert r.fourier_norm_drift <= 1e-12


def test_standard_system_recovery(std2, std2_ref):
    r = solve(std2, "erf:eps=1e-6", epsilon=1e-6, n_p=512)
    assert relative_error(r.u, std2_ref) <= 1e-5
    p = r.domain.grid[r.window.k_set]
    prof = r.profile
    assert np.all(np.abs(np.exp(p) * prof(p) - 1) <= 1e-6 * np.exp(p))


@given(st.integers(0, 2**32 - 1))
def test_oracle_equivalence_small_systems(seed):
    # domain sized at the 1e-6 target, profile at 1e-8
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    a = random_dissipative(rng, n)
    a *= float(rng.uniform(0.1, 1.0)) / np.linalg.norm(a, 2)
    u0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    sys = DynamicalSystem.constant(a, None, u0, 1.0)
    r = solve(sys, "erf:eps=1e-8", epsilon=1e-6, n_p=512)
    assert relative_error(r.u, solve_reference(sys).u_T) <= 1e-6


# ---------------------------------------------------------------------------
# window, recovery and probabilities


def test_measurement_window_rules():
    d = warp.WarpedDomain(16.0, 16.0, 512)
    b = bounds(0.2, 2.0)
    w = warp.measurement_window(d, b, 1.0, p_star=0.5)
    p = d.grid
    assert w.p_diamond == 0.2 and w.p_ub == pytest.approx(1.2)
    assert np.all(p[w.k_set] > 0.7) and np.all(p[w.k_set] <= 1.2 + 1e-12)
    assert p[w.k_star] >= max(0.5, 0.2) + 2 * d.dp - 1e-12
    assert p[w.k_star] >= w.p_diamond
    assert w.k_star in w.k_set
    assert np.all(p[w.diamond_set] >= 0.2 - 1e-12)


def test_measurement_window_coarse_fallback_and_empty():
    d = warp.WarpedDomain(4.0, 4.0, 16)  # dp = 0.5, window {0.5, 1.0}, target 1.4
    w = warp.measurement_window(d, bounds(0.0, 0.0), 1.0, p_star=0.4)
    assert w.k_star == w.k_set[0]
    with pytest.raises(warp.ConfigurationError):
        warp.measurement_window(warp.WarpedDomain(4.0, 4.0, 4), bounds(0.0, 0.0), 1.0, p_star=0.5)


def test_recover_average_matches_single_for_exact_rows():
    sys = builtin_system("rotation")
    a = solve(sys, "exp_abs", epsilon=1e-6, n_p=256)
    b = solve(sys, "exp_abs", epsilon=1e-6, n_p=256, average=True)
    assert np.allclose(a.u, b.u, atol=1e-12)


def test_probabilities_unitary_limit():
    # H1 = 0 and ExpAbs: pr_w -> 1/2 as the grid is refined
    sys = builtin_system("rotation")
    r = solve(sys, "exp_abs", epsilon=1e-10, n_p=4096)
    dp = r.domain.dp
    # discrete sums over p >= 0: 1 / (1 + e^{-2 dp}) = 1/2 + dp/2 + O(dp^3)
    assert r.probabilities.pr_w == pytest.approx(1 / (1 + math.exp(-2 * dp)), rel=1e-12)
    assert abs(r.probabilities.pr_w - 0.5) <= dp
    # b = 0 means u_f = [u; 0] so pr_u = pr_w
    assert r.probabilities.pr_u == pytest.approx(r.probabilities.pr_w, rel=1e-14)
    assert r.probabilities.g == math.ceil(1 / math.sqrt(r.probabilities.pr_u))


def test_probabilities_with_source(std2):
    r = solve(std2, "erf:eps=1e-6", epsilon=1e-6, n_p=512)
    pr = r.probabilities
    assert 0 < pr.pr_u <= pr.pr_w <= 1
    assert pr.g == math.ceil(1 / math.sqrt(pr.pr_u))
    with pytest.raises(warp.ConfigurationError):
        warp.success_probability(r.final_state, r.window, np.zeros(512), np.ones(4), r.u_f, 2)


def test_stream_row_matches_full_state(std2):
    r = solve(std2, "erf:eps=1e-6", epsilon=1e-6, n_p=512)
    hs = homogenize(std2)
    row = warp.stream_recover_row(r.profile, r.domain, split_system(hs), 1.0, hs.u_i,
                                  r.window.k_star, chunk=100)
    assert np.allclose(row, r.u_f, rtol=1e-12, atol=1e-13)


def test_window_factorization_cutoff():
    # psi = e^{-p} exactly on the window, so e^{p_k} row(k) is flat up to the spectral error
    sys = builtin_system("std2-homog")
    r = solve(sys, "cutoff:d=1", epsilon=1e-8, n_p=2048)
    rows = warp.rescaled_rows(r.final_state, r.window.k_set)
    spread = np.max(np.linalg.norm(rows - rows[0], axis=1))
    err = relative_error(r.u, solve_reference(sys).u_T) * np.linalg.norm(r.u)
    assert spread <= 5 * max(err, 1e-12)
