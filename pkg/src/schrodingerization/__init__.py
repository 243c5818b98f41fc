"""Classical simulator for Schrodingerization of linear ODEs via the warped phase transformation."""

__version__ = "0.1.0"

from .system import (DynamicalSystem, HermitianSplit, HomogenizedSystem, InvalidSystemError,
                     SpectralBounds, builtin_system, hermitian_split, homogenize,
                     spectral_bounds, split_system, system_from_config)
from .profiles import (InitProfile, ProfileError, deriv_l2_norm, make_cutoff, make_erf,
                       make_exp_abs, make_hermite, make_quartic, mollifier, parse_profile)
from .oracle import ReferenceSolution, expm, solve_reference
from .warp import (ConfigurationError, RecoveryWindow, WarpedDomain, WarpedState,
                   choose_domain, choose_resolution, from_fourier, initialize,
                   evolve_time_independent, measurement_window, recover,
                   success_probability, to_fourier)
from .lift import DeltaKernel, LiftConfig, delta_kernel, lift_and_evolve
from .pipeline import SolveResult, relative_error, solve

__all__ = [name for name in dir() if not name.startswith("_")]
