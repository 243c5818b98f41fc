"""Reference solutions of du/dt = A(t) u + b(t), independent of the warped-phase pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .system import DynamicalSystem

DEFAULT_TOL = 1e-10

# Higham (2005), Table 10.2: theta_m for m = 3, 5, 7, 9, 13
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1, 7: 9.504178996162932e-1,
          9: 2.097847961257068e0, 13: 5.371920351148152e0}

_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}


def _pade_uv(a: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE[m]
    ident = np.eye(a.shape[0], dtype=a.dtype)
    a2 = a @ a
    if m < 13:
        powers = [ident, a2]
        while len(powers) < (m + 1) // 2:
            powers.append(powers[-1] @ a2)
        u = a @ sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
        v = sum(b[2 * k] * powers[k] for k in range(len(powers)))
        return u, v
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    return u, v


def expm(m: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade approximant (order <= 13)."""
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm needs a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise OverflowError("expm: non-finite entries")
    a = a.astype(complex if np.iscomplexobj(a) else float)
    if a.shape[0] == 0:
        return a.copy()
    norm1 = np.linalg.norm(a, 1)
    for order in (3, 5, 7, 9):
        if norm1 <= _THETA[order]:
            u, v = _pade_uv(a, order)
            return np.linalg.solve(v - u, v + u)
    s = max(0, int(np.ceil(np.log2(norm1 / _THETA[13])))) if norm1 > 0 else 0
    u, v = _pade_uv(a / 2.0**s, 13)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    if not np.all(np.isfinite(r)):
        raise OverflowError("expm overflowed")
    return r


class Method(str, Enum):
    EXPM = "expm"
    DUHAMEL = "duhamel"
    ADAPTIVE_RK = "adaptive-rk"


@dataclass(frozen=True)
class ReferenceSolution:
    u_T: np.ndarray
    method: Method
    est_error: float


def _gauss_duhamel(a: np.ndarray, b: np.ndarray, T: float, n_nodes: int = 64) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    s = 0.5 * T * (x + 1.0)
    return sum(0.5 * T * wi * (expm(a * (T - si)) @ b) for si, wi in zip(s, w))


def solve_reference(sys: DynamicalSystem, tol: float = DEFAULT_TOL) -> ReferenceSolution:
    """u(T) by the matrix exponential (constant data) or an adaptive RK 5(4) pair."""
    T = sys.horizon
    if not sys.time_dependent:
        a = sys.a(0.0)
        b = sys.b(0.0)
        u = expm(a * T) @ sys.u0
        if not np.any(b):
            return ReferenceSolution(u, Method.EXPM, 0.0)
        if abs(np.linalg.det(a)) > 1e-12 and np.linalg.cond(a) < 1e12:
            u = u + np.linalg.solve(a, (expm(a * T) - np.eye(sys.dim)) @ b)
        else:
            u = u + _gauss_duhamel(a, b, T)
        return ReferenceSolution(u, Method.DUHAMEL, 0.0)
    return _adaptive(sys, tol)


def _adaptive(sys: DynamicalSystem, tol: float) -> ReferenceSolution:
    def rhs(t, y):
        return sys.a(t) @ y + sys.b(t)

    def run(rtol):
        sol = solve_ivp(rhs, (0.0, sys.horizon), sys.u0, method="RK45",
                        rtol=rtol, atol=rtol * 1e-2)
        if not sol.success:
            raise ArithmeticError(f"adaptive integrator failed: {sol.message}")
        return sol.y[:, -1]

    rtol = tol
    coarse = run(rtol)
    for _ in range(8):
        fine = run(rtol / 2)
        est = float(np.linalg.norm(fine - coarse))
        if est <= tol:
            return ReferenceSolution(fine, Method.ADAPTIVE_RK, est)
        rtol /= 2
        coarse = fine
    raise ArithmeticError(f"adaptive integrator could not certify tol={tol:g} (est {est:.2e})")
