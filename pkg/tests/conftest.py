import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from schrodingerization.oracle import solve_reference
from schrodingerization.system import builtin_system

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# u(T) of the two-dimensional test problem, 30-digit matrix exponential
STD2_U_T = np.array([1.06243456900433431139255147726, -0.0982610221397612061481775162422])
STD2_HOMOG_U_T = np.array([0.446260320296859657866560941528, 0.0])


@pytest.fixture(scope="session")
def std2():
    return builtin_system("std2")


@pytest.fixture(scope="session")
def std2_homog():
    return builtin_system("std2-homog")


@pytest.fixture(scope="session")
def std2_ref(std2):
    return solve_reference(std2).u_T


@pytest.fixture(scope="session")
def std2_homog_ref(std2_homog):
    return solve_reference(std2_homog).u_T


def random_dissipative(rng, n, shift=0.0):
    """Random complex A with (A + A^H)/2 <= -shift."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    skew = (g - g.conj().T) / 2
    h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    neg = -(h @ h.conj().T) / n - shift * np.eye(n)
    return neg + skew
