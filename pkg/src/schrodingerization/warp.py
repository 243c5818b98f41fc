"""Warped-phase grid, Fourier-mode evolution, recovery and measurement probabilities.

State layout: ``values[k, i]`` is component i of w_h at p_k (Physical) or of
the coefficient of mode mu_k (Fourier), with

    w(p) = sum_k  w_hat[k] exp(i mu_k (p + L)),   mu_k = 2 pi (k - n_p/2) / (L + R).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.linalg import expm

from .profiles import ExpAbsProfile, InitProfile, ProfileError, deriv_l2_norm
from .system import HermitianSplit, SpectralBounds

UNITARY_TOL = 1e-12
NP_FLOOR = 16
NP_CAP = 1 << 16
BASE_CELL = 0.5
# ExpAbs first-order rule: n_p = EXPABS_NP_PER_WIDTH * (L + R) / eps, before rounding
EXPABS_NP_PER_WIDTH = 0.05


class ConfigurationError(ValueError):
    pass


class Representation(str, Enum):
    PHYSICAL = "physical"
    FOURIER = "fourier"


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(x: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(x, 1.0))))


@dataclass(frozen=True)
class WarpedDomain:
    """Truncated p-interval [-L, R) with n_p uniform nodes, p = 0 on the grid."""

    L: float
    R: float
    n_p: int

    def __post_init__(self):
        if not (self.L > 0 and self.R > 0):
            raise ConfigurationError(f"L and R must be positive, got L={self.L}, R={self.R}")
        if not _is_pow2(self.n_p) or self.n_p < 2:
            raise ConfigurationError(f"n_p must be a power of two >= 2, got {self.n_p}")
        k0 = self.L * self.n_p / (self.L + self.R)
        if abs(k0 - round(k0)) > 1e-9 * self.n_p:
            raise ConfigurationError(
                f"p = 0 is not a grid node for L={self.L}, R={self.R}, n_p={self.n_p}")

    @property
    def width(self) -> float:
        return self.L + self.R

    @property
    def dp(self) -> float:
        return self.width / self.n_p

    @property
    def k_zero(self) -> int:
        return int(round(self.L * self.n_p / self.width))

    @property
    def grid(self) -> np.ndarray:
        return (np.arange(self.n_p) - self.k_zero) * self.dp

    @property
    def modes(self) -> np.ndarray:
        return 2.0 * np.pi / self.width * (np.arange(self.n_p) - self.n_p // 2)

    @property
    def mu_max(self) -> float:
        return self.n_p * np.pi / self.width

    def with_n_p(self, n_p: int) -> "WarpedDomain":
        return replace(self, n_p=n_p)


@dataclass(frozen=True)
class WarpedState:
    values: np.ndarray
    representation: Representation
    time: float
    domain: WarpedDomain

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class RecoveryWindow:
    p_diamond: float
    p_star: float
    p_ub: float
    k_set: np.ndarray
    k_star: int
    # I_diamond: all nodes with p_k >= p_diamond, used for probabilities
    diamond_set: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# domain and resolution


def criterion_width(bounds: SpectralBounds, T: float, epsilon: float) -> float:
    """lambda_abs T + log(1/eps): the half-width at which e^{-L + lambda T} = eps."""
    if not 0 < epsilon < 1:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {epsilon}")
    return bounds.lambda_abs * T + math.log(1.0 / epsilon)


def choose_domain(bounds: SpectralBounds, T: float, epsilon: float,
                  cell: float = BASE_CELL) -> tuple[float, float]:
    """Symmetric truncation L = R, rounded up to a multiple of ``cell``."""
    w = criterion_width(bounds, T, epsilon)
    w = math.ceil(w / cell - 1e-12) * cell
    return w, w


def choose_resolution(profile: InitProfile, epsilon: float, width: float,
                      r: int | None = None) -> int:
    """Power-of-two n_p with mu_max = n_p pi / width >= the target for ``profile``.

    Smooth profiles: mu_target = pi eps^{-1/r} ||psi^{(r)}||^{1/r} with
    r = ceil(log(1/eps)).  ExpAbs: n_p proportional to width / eps.
    """
    if not 0 < epsilon <= 1:
        raise ConfigurationError(f"epsilon must lie in (0, 1], got {epsilon}")
    if epsilon == 1:
        return NP_FLOOR
    log_inv = math.log(1.0 / epsilon)
    if isinstance(profile, ExpAbsProfile):
        n = EXPABS_NP_PER_WIDTH * width / epsilon
    else:
        if r is None:
            r = max(1, math.ceil(log_inv))
        if r > profile.deriv_order_max:
            raise ProfileError(
                f"{profile.spec()}: resolution rule needs order {r} > {profile.deriv_order_max}")
        log_norm = deriv_l2_norm(profile, r)
        mu_target = math.pi * math.exp((log_inv + log_norm) / r)
        n = mu_target * width / math.pi
    return int(min(max(next_pow2(n), NP_FLOOR), NP_CAP))


# ---------------------------------------------------------------------------
# state construction and transforms


def initialize(profile: InitProfile, domain: WarpedDomain, u_i: np.ndarray) -> WarpedState:
    """W_h(0) = psi sampled on the grid, tensored with u_I."""
    psi = profile(domain.grid)
    vals = np.outer(psi, np.asarray(u_i, dtype=complex))
    return WarpedState(vals, Representation.PHYSICAL, 0.0, domain)


def to_fourier(state: WarpedState) -> WarpedState:
    if state.representation is not Representation.PHYSICAL:
        raise ValueError("to_fourier expects a Physical state")
    n = state.domain.n_p
    coef = np.fft.fftshift(np.fft.fft(state.values, axis=0), axes=0) / n
    return replace(state, values=coef, representation=Representation.FOURIER)


def from_fourier(state: WarpedState) -> WarpedState:
    if state.representation is not Representation.FOURIER:
        raise ValueError("from_fourier expects a Fourier state")
    n = state.domain.n_p
    vals = np.fft.ifft(np.fft.ifftshift(state.values, axes=0), axis=0) * n
    return replace(state, values=vals, representation=Representation.PHYSICAL)


def evaluate_at(state: WarpedState, p) -> np.ndarray:
    """Trigonometric interpolant of a Fourier state at arbitrary p (rows follow p)."""
    if state.representation is not Representation.FOURIER:
        raise ValueError("evaluate_at expects a Fourier state")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    phase = np.exp(1j * np.outer(p + state.domain.L, state.domain.modes))
    return phase @ state.values


# ---------------------------------------------------------------------------
# evolution


def mode_propagators(split: HermitianSplit, modes: np.ndarray, T: float,
                     threads: int = 1, chunk: int = 64) -> np.ndarray:
    """V_k = exp(-i (mu_k H1 - H2) T) for every mode, shape (n_p, M, M)."""
    h1 = np.asarray(split.h1_at(0.0), dtype=complex)
    h2 = np.asarray(split.h2_at(0.0), dtype=complex)
    gens = -1j * T * (modes[:, None, None] * h1[None] - h2[None])
    blocks = [gens[i:i + chunk] for i in range(0, len(gens), chunk)]
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(expm, blocks))
    else:
        parts = [expm(b) for b in blocks]
    return np.concatenate(parts, axis=0)


def unitarity_defect(v: np.ndarray) -> float:
    """max_k ||V_k^H V_k - I||_max."""
    eye = np.eye(v.shape[-1])
    return float(np.max(np.abs(np.conj(np.swapaxes(v, -1, -2)) @ v - eye)))


def evolve_time_independent(state: WarpedState, split: HermitianSplit, T: float,
                            threads: int = 1, check: bool = True) -> WarpedState:
    """Apply V_k(T) to each Fourier row."""
    if split.time_dependent:
        raise ValueError("evolve_time_independent needs a time-independent split")
    if state.representation is not Representation.FOURIER:
        raise ValueError("evolve_time_independent expects a Fourier state")
    v = mode_propagators(split, state.domain.modes, T, threads=threads)
    if not np.all(np.isfinite(v)):
        raise ArithmeticError("mode propagator is not finite")
    if check:
        defect = unitarity_defect(v)
        if defect > UNITARY_TOL:
            raise ArithmeticError(f"mode propagators not unitary (defect {defect:.2e})")
    out = np.einsum("kij,kj->ki", v, state.values)
    return replace(state, values=out, time=state.time + T)


# ---------------------------------------------------------------------------
# recovery and probabilities


def measurement_window(domain: WarpedDomain, bounds: SpectralBounds, T: float,
                       p_star: float = 0.0) -> RecoveryWindow:
    """Recovery index set and the chosen index k*.

    k_set: p_star + lambda^+ T < p_k < R - lambda^- T and p_k <= p_ub,
    p_ub = max(1, p_diamond + 1).  k* is the first node at or beyond
    max(p_star, p_diamond) + 2 dp; when the grid is too coarse for that, the
    first node of k_set.
    """
    p = domain.grid
    p_dia = bounds.lambda_plus * T
    p_ub = max(1.0, p_dia + 1.0)
    tol = 1e-12 * domain.width
    lo = p_star + p_dia
    hi = domain.R - bounds.lambda_minus * T
    k_set = np.flatnonzero((p > lo + tol) & (p < hi - tol) & (p <= p_ub + tol))
    if k_set.size == 0:
        raise ConfigurationError(
            f"empty recovery window: ({lo:.4g}, min({hi:.4g}, {p_ub:.4g})] holds no grid node "
            f"(dp={domain.dp:.4g})")
    target = max(p_star, p_dia) + 2.0 * domain.dp
    pick = k_set[p[k_set] >= target - tol]
    k_star = int(pick[0]) if pick.size else int(k_set[0])
    diamond = np.flatnonzero(p >= p_dia - tol)
    return RecoveryWindow(p_dia, p_star, p_ub, k_set, k_star, diamond)


@dataclass(frozen=True)
class Recovery:
    u_f: np.ndarray
    u: np.ndarray
    k_star: int
    p_star_node: float


def recover(state: WarpedState, window: RecoveryWindow, dim: int,
            average: bool = False) -> Recovery:
    """u_f = e^{p_k*} w(T, p_k*) (or the mean over k_set) and its first ``dim`` entries."""
    if state.representation is not Representation.PHYSICAL:
        raise ValueError("recover expects a Physical state")
    p = state.domain.grid
    if window.k_set.size == 0:
        raise ConfigurationError("empty recovery window")
    if average:
        ks = window.k_set
        u_f = np.mean(np.exp(p[ks])[:, None] * state.values[ks], axis=0)
    else:
        ks = window.k_star
        u_f = math.exp(p[ks]) * state.values[ks]
    return Recovery(u_f, u_f[:dim].copy(), window.k_star, float(p[window.k_star]))


def rescaled_rows(state: WarpedState, ks: np.ndarray) -> np.ndarray:
    """e^{p_k} w(T, p_k) for k in ks."""
    p = state.domain.grid
    return np.exp(p[ks])[:, None] * state.values[ks]


@dataclass(frozen=True)
class Probabilities:
    pr_w: float
    pr_u: float
    g: int
    ce0_sq_over_ce_sq: float


def success_probability(state: WarpedState, window: RecoveryWindow, psi_samples: np.ndarray,
                        u_i: np.ndarray, u_f: np.ndarray, dim: int) -> Probabilities:
    """pr_w = sum_{I_diamond} ||row_k||^2 / ||W_h(0)||^2, pr_u = pr_w ||u||^2 / ||u_f||^2."""
    psi = np.asarray(psi_samples, dtype=float)
    w0_sq = float(np.sum(psi ** 2)) * float(np.linalg.norm(u_i) ** 2)
    if w0_sq == 0:
        raise ConfigurationError("initial state has zero norm")
    rows = state.values[window.diamond_set]
    pr_w = float(np.sum(np.abs(rows) ** 2)) / w0_sq
    uf_sq = float(np.linalg.norm(u_f) ** 2)
    u_sq = float(np.linalg.norm(u_f[:dim]) ** 2)
    pr_u = pr_w * (u_sq / uf_sq) if uf_sq > 0 else 0.0
    g = math.ceil(1.0 / math.sqrt(pr_u)) if pr_u > 0 else math.inf
    ratio = float(np.sum(psi[window.diamond_set] ** 2) / np.sum(psi ** 2))
    return Probabilities(pr_w, pr_u, g, ratio)


def stream_recover_row(profile: InitProfile, domain: WarpedDomain, split: HermitianSplit,
                       T: float, u_i: np.ndarray, k: int, chunk: int = 1 << 16) -> np.ndarray:
    """e^{p_k} w_h(T, p_k) without materializing the n_p x M state.

    Mode by mode, V(mu) u_I is formed from the eigendecomposition of the
    Hermitian generator mu H1 - H2 and accumulated into the single row k.
    Memory is O(n_p) for the scalar transform of psi plus O(chunk M^2).
    """
    if split.time_dependent:
        raise ValueError("stream_recover_row needs a time-independent split")
    n = domain.n_p
    psi_hat = np.fft.fftshift(np.fft.fft(profile(domain.grid))) / n
    h1 = np.asarray(split.h1_at(0.0), dtype=complex)
    h2 = np.asarray(split.h2_at(0.0), dtype=complex)
    u = np.asarray(u_i, dtype=complex)
    shift = domain.grid[k] + domain.L
    modes = domain.modes
    acc = np.zeros(u.shape, dtype=complex)
    for s in range(0, n, chunk):
        mu = modes[s:s + chunk]
        lam, q = np.linalg.eigh(mu[:, None, None] * h1 - h2)
        coef = np.einsum("cji,j->ci", q.conj(), u) * np.exp(-1j * T * lam)
        y = np.einsum("cij,cj->ci", q, coef)
        acc += (psi_hat[s:s + chunk] * np.exp(1j * mu * shift)) @ y
    return math.exp(domain.grid[k]) * acc
