"""End-to-end solve: homogenize, split, warp, evolve, recover."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import warp
from .profiles import InitProfile, parse_profile
from .system import (DynamicalSystem, HermitianSplit, HomogenizedSystem, SpectralBounds,
                     homogenize, spectral_bounds, split_system)


@dataclass
class SolveResult:
    u: np.ndarray
    u_f: np.ndarray
    domain: warp.WarpedDomain
    window: warp.RecoveryWindow
    probabilities: warp.Probabilities
    bounds: SpectralBounds
    profile: InitProfile
    final_state: warp.WarpedState = field(repr=False)
    fourier_norm_drift: float = 0.0
    lifted: bool = False
    runtime: float = 0.0

    @property
    def mu_max(self) -> float:
        return self.domain.mu_max


def _resolve_profile(profile: InitProfile | str, R: float) -> InitProfile:
    if isinstance(profile, str):
        return parse_profile(profile, R=R)
    return profile


def build_domain(bounds: SpectralBounds, T: float, epsilon: float, profile_spec,
                 L: float | None = None, R: float | None = None,
                 n_p: int | None = None) -> tuple[warp.WarpedDomain, InitProfile]:
    """Criterion-sized domain (overridable), the profile built on it, and n_p."""
    L0, R0 = warp.choose_domain(bounds, T, epsilon)
    if L is None and R is None and isinstance(profile_spec, str) and profile_spec.startswith("cutoff"):
        # compactly supported profile: the support and its leftward drift must fit in [-L, R]
        probe = parse_profile(profile_spec, R=R0)
        need = -probe.support_left + bounds.lambda_abs * T + 1.0
        L0 = R0 = max(L0, math.ceil(need / warp.BASE_CELL) * warp.BASE_CELL)
    L = L0 if L is None else float(L)
    R = R0 if R is None else float(R)
    profile = _resolve_profile(profile_spec, R)
    if n_p is None:
        n_p = warp.choose_resolution(profile, epsilon, L + R)
    return warp.WarpedDomain(float(L), float(R), int(n_p)), profile


def solve(sys: DynamicalSystem, profile: InitProfile | str, epsilon: float = 1e-6,
          L: float | None = None, R: float | None = None, n_p: int | None = None,
          average: bool = False, lift: bool | None = None, lift_cfg=None,
          threads: int = 1) -> SolveResult:
    t0 = time.perf_counter()
    hs: HomogenizedSystem = homogenize(sys)
    split: HermitianSplit = split_system(hs)
    T = sys.horizon
    bounds = spectral_bounds(split, np.linspace(0.0, T, 33))
    domain, prof = build_domain(bounds, T, epsilon, profile, L, R, n_p)
    state0 = warp.initialize(prof, domain, hs.u_i)
    fourier0 = warp.to_fourier(state0)
    use_lift = split.time_dependent if lift is None else (lift or split.time_dependent)
    if use_lift:
        from .lift import LiftConfig, lift_and_evolve
        cfg = lift_cfg if lift_cfg is not None else LiftConfig.default(T)
        fourierT = lift_and_evolve(split, fourier0, cfg, T, threads=threads)
    else:
        fourierT = warp.evolve_time_independent(fourier0, split, T, threads=threads)
    drift = abs(fourierT.norm - fourier0.norm) / fourier0.norm
    stateT = warp.from_fourier(fourierT)
    window = warp.measurement_window(domain, bounds, T, prof.p_star)
    rec = warp.recover(stateT, window, sys.dim, average=average)
    probs = warp.success_probability(stateT, window, prof(domain.grid),
                                     hs.u_i, rec.u_f, sys.dim)
    return SolveResult(rec.u, rec.u_f, domain, window, probs, bounds, prof, stateT,
                       drift, bool(use_lift), time.perf_counter() - t0)


def relative_error(u: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(u - ref) / np.linalg.norm(ref))
