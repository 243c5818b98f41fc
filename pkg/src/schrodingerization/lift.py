"""Dimension lifting: a time-dependent H(t) becomes an autonomous system in (t, s).

Each Fourier mode mu_k is lifted on its own:

    v_t = -v_s - i (mu_k H1(s) - H2(s)) v,    v(0, s) = delta_w(s) w_hat_k(0),

and W_hat_k(T) = sum_j v(T, s_j) ds.  Time stepping is Strang splitting:
half transport (exact phase in s-Fourier space), local rotation at every s
node, half transport.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .system import HermitianSplit
from .warp import ConfigurationError, Representation, WarpedState, _is_pow2

KERNELS = ("conventional", "printed")


@dataclass(frozen=True)
class LiftConfig:
    """s-grid on [-pi S, pi S) with n_s nodes; delta kernel half-width omega = m ds."""

    S: float
    n_s: int = 256
    m: int = 4
    kernel: str = "conventional"

    def __post_init__(self):
        if not _is_pow2(self.n_s):
            raise ConfigurationError(f"n_s must be a power of two, got {self.n_s}")
        if self.m < 2:
            raise ConfigurationError(f"m must be >= 2, got {self.m}")
        if not self.S > 0:
            raise ConfigurationError(f"S must be positive, got {self.S}")
        if self.kernel not in KERNELS:
            raise ConfigurationError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")

    @property
    def ds(self) -> float:
        return 2.0 * math.pi * self.S / self.n_s

    @property
    def omega(self) -> float:
        return self.m * self.ds

    @property
    def s_grid(self) -> np.ndarray:
        return -math.pi * self.S + np.arange(self.n_s) * self.ds

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers in numpy FFT order (spacing 1/S)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_s, d=self.ds)

    def check(self, T: float) -> None:
        if not math.pi * self.S > 4.0 * self.omega + T:
            raise ConfigurationError(
                f"lift domain too small: pi S = {math.pi * self.S:.4g} must exceed "
                f"4 omega + T = {4 * self.omega + T:.4g}")

    @classmethod
    def default(cls, T: float, n_s: int = 256, m: int = 4, kernel: str = "conventional") -> "LiftConfig":
        """Smallest integer S with pi S >= 4 omega + T + 1 (omega scales with S)."""
        shrink = 1.0 - 8.0 * m / n_s
        if shrink <= 0:
            raise ConfigurationError(f"m={m} too large for n_s={n_s}")
        S = math.ceil((T + 1.0) / (math.pi * shrink))
        return cls(float(S), n_s, m, kernel)


@dataclass(frozen=True)
class DeltaKernel:
    samples: np.ndarray
    ds: float

    @property
    def mass(self) -> float:
        return float(np.sum(self.samples) * self.ds)


def delta_profile(x, omega: float, kernel: str = "conventional") -> np.ndarray:
    """Unnormalized delta_omega(x): raised cosine, or the printed bimodal variant."""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= omega
    c = np.cos(np.pi * x / omega)
    if kernel == "conventional":
        val = (1.0 + c) / (2.0 * omega)
    elif kernel == "printed":
        val = (1.0 - 0.5 * np.abs(1.0 + c)) / omega
    else:
        raise ConfigurationError(f"unknown kernel {kernel!r}")
    return np.where(inside, val, 0.0)


def delta_kernel(cfg: LiftConfig, normalize: bool = True) -> DeltaKernel:
    samples = delta_profile(cfg.s_grid, cfg.omega, cfg.kernel)
    if normalize:
        samples = samples / (np.sum(samples) * cfg.ds)
    return DeltaKernel(samples, cfg.ds)


def _local_rotations(mu: np.ndarray, h1s: np.ndarray, h2s: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i (mu H1(s_j) - H2(s_j)) dt), shape (modes, n_s, M, M)."""
    gen = mu[:, None, None, None] * h1s[None] - h2s[None]
    lam, q = np.linalg.eigh(gen)
    return (q * np.exp(-1j * dt * lam)[..., None, :]) @ np.conj(np.swapaxes(q, -1, -2))


def lift_and_evolve(split: HermitianSplit, state0: WarpedState, cfg: LiftConfig, T: float,
                    dt: float | None = None, threads: int = 1, chunk: int = 64,
                    info: dict | None = None) -> WarpedState:
    """Evolve a Fourier state to time T through the lifted autonomous system.

    ``dt`` defaults to the largest step T/n with T/n <= ds/2.  When ``info`` is
    given it receives the lifted-norm drift and the step count.
    """
    if state0.representation is not Representation.FOURIER:
        raise ValueError("lift_and_evolve expects a Fourier state")
    cfg.check(T)
    n_steps = max(1, math.ceil(T / (0.5 * cfg.ds) - 1e-12)) if dt is None else max(1, round(T / dt))
    dt = T / n_steps
    s = cfg.s_grid
    h1s = np.array([split.h1_at(float(x)) for x in s], dtype=complex)
    h2s = np.array([split.h2_at(float(x)) for x in s], dtype=complex)
    delta = delta_kernel(cfg).samples
    half = np.exp(-0.5j * dt * cfg.wavenumbers)[None, :, None]
    full = half * half
    modes = state0.domain.modes
    w0 = state0.values
    out = np.empty_like(w0)
    drift = np.zeros(len(range(0, len(modes), chunk)))

    def run(idx: int) -> None:
        sl = slice(idx * chunk, (idx + 1) * chunk)
        rot = _local_rotations(modes[sl], h1s, h2s, dt)
        v = delta[None, :, None] * w0[sl][:, None, :]
        n0 = np.sum(np.abs(v) ** 2)
        vh = np.fft.fft(v, axis=1) * half
        for step in range(n_steps):
            v = np.fft.ifft(vh, axis=1)
            v = np.einsum("csij,csj->csi", rot, v)
            vh = np.fft.fft(v, axis=1) * (full if step < n_steps - 1 else half)
        v = np.fft.ifft(vh, axis=1)
        n1 = np.sum(np.abs(v) ** 2)
        drift[idx] = abs(n1 - n0) / n0 if n0 > 0 else 0.0
        out[sl] = np.sum(v, axis=1) * cfg.ds

    n_chunks = len(drift)
    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(n_chunks)))
    else:
        for i in range(n_chunks):
            run(i)
    if not np.all(np.isfinite(out)):
        raise ArithmeticError("lifted evolution produced non-finite values")
    if info is not None:
        info["norm_drift"] = float(np.max(drift)) if n_chunks else 0.0
        info["n_steps"] = n_steps
        info["dt"] = dt
    return replace(state0, values=out, time=state0.time + T)
