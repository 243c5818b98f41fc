"""Linear dynamical systems du/dt = A(t) u + b(t) and their Hermitian splitting.

The inhomogeneous term is folded into an enlarged homogeneous system

    d/dt [u; r] = [[A, B], [0, 0]] [u; r],   r(0) = gamma,

with ``B = diag(b_i / gamma_i)`` and ``gamma_i = T * sup_t |b_i(t)|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

TOL_PSD = 1e-10
N_CHECK_SAMPLES = 33
N_SUP_SAMPLES = 1024

MatrixFn = Callable[[float], np.ndarray]


class InvalidSystemError(ValueError):
    """Invalid problem definition (shape mismatch, positive real part, ...)."""


def _const(value: np.ndarray) -> MatrixFn:
    value = np.array(value, dtype=complex)
    value.setflags(write=False)
    return lambda t: value


def _as_fn(x, shape: tuple[int, ...]) -> MatrixFn:
    if callable(x):
        return lambda t: np.asarray(x(t), dtype=complex).reshape(shape)
    return _const(np.asarray(x, dtype=complex).reshape(shape))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def anti_hermitian_part(a: np.ndarray) -> np.ndarray:
    """Return H2 with a = H1 + i H2."""
    return (a - a.conj().T) / 2j


@dataclass(frozen=True)
class DynamicalSystem:
    """The problem du/dt = A(t) u + b(t), u(0) = u0 on [0, T].

    ``a_of_t`` and ``b_of_t`` may be given as constant arrays; they are stored
    as callables.  The Hermitian part of A must be negative semi-definite at
    every sampled time.
    """

    dim: int
    a_of_t: MatrixFn
    b_of_t: MatrixFn
    u0: np.ndarray
    horizon: float
    time_dependent: bool = False
    b_sup: np.ndarray | None = None
    tol_psd: float = TOL_PSD
    name: str = ""

    def __post_init__(self):
        n = int(self.dim)
        if n < 1:
            raise InvalidSystemError(f"dim must be >= 1, got {self.dim}")
        if not self.horizon > 0:
            raise InvalidSystemError(f"horizon T must be > 0, got {self.horizon}")
        object.__setattr__(self, "a_of_t", _as_fn(self.a_of_t, (n, n)))
        object.__setattr__(self, "b_of_t", _as_fn(self.b_of_t, (n,)))
        u0 = np.asarray(self.u0, dtype=complex).reshape(-1)
        if u0.shape != (n,):
            raise InvalidSystemError(f"u0 has length {u0.size}, expected {n}")
        object.__setattr__(self, "u0", u0)
        if self.b_sup is not None:
            b_sup = np.asarray(self.b_sup, dtype=float).reshape(n)
            object.__setattr__(self, "b_sup", b_sup)

        for t in self.check_times():
            lam = np.linalg.eigvalsh(hermitian_part(self.a_of_t(t)))[-1]
            if lam > self.tol_psd:
                raise InvalidSystemError(
                    f"Hermitian part of A({t:.6g}) has eigenvalue {lam:.3e} > {self.tol_psd:g}"
                )

    @classmethod
    def constant(cls, a, b=None, u0=None, horizon=1.0, **kw) -> "DynamicalSystem":
        a = np.atleast_2d(np.asarray(a, dtype=complex))
        n = a.shape[0]
        b = np.zeros(n) if b is None else np.asarray(b, dtype=complex)
        u0 = np.ones(n) if u0 is None else u0
        return cls(n, a, b, u0, horizon, time_dependent=False, **kw)

    def check_times(self) -> np.ndarray:
        if not self.time_dependent:
            return np.array([0.0])
        return np.linspace(0.0, self.horizon, N_CHECK_SAMPLES)

    def a(self, t: float) -> np.ndarray:
        return self.a_of_t(t)

    def b(self, t: float) -> np.ndarray:
        return self.b_of_t(t)

    def with_source(self, b) -> "DynamicalSystem":
        """Same system with a different (constant or callable) source term."""
        return DynamicalSystem(
            self.dim, self.a_of_t, b, self.u0, self.horizon,
            time_dependent=self.time_dependent, tol_psd=self.tol_psd,
            name=self.name,
        )


@dataclass(frozen=True)
class HomogenizedSystem:
    a_f: MatrixFn
    u_i: np.ndarray
    gamma: np.ndarray
    b_norm_smax: float
    dim: int
    horizon: float
    time_dependent: bool

    @property
    def dim_f(self) -> int:
        return 2 * self.dim


def sup_abs_source(sys: DynamicalSystem, n_samples: int = N_SUP_SAMPLES) -> np.ndarray:
    """Componentwise sup_t |b_i(t)| on [0, T], by dense uniform sampling."""
    if sys.b_sup is not None:
        return sys.b_sup
    if not sys.time_dependent:
        return np.abs(sys.b(0.0))
    ts = np.linspace(0.0, sys.horizon, n_samples)
    return np.max(np.abs(np.array([sys.b(t) for t in ts])), axis=0)


def homogenize(sys: DynamicalSystem, n_samples: int = N_SUP_SAMPLES) -> HomogenizedSystem:
    n, T = sys.dim, sys.horizon
    gamma = T * sup_abs_source(sys, n_samples)
    # b_i / gamma_i := 0 where b_i vanishes identically
    inv_gamma = np.divide(1.0, gamma, out=np.zeros_like(gamma), where=gamma > 0)

    def a_f(t: float) -> np.ndarray:
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, :n] = sys.a(t)
        out[:n, n:] = np.diag(sys.b(t) * inv_gamma)
        return out

    if not sys.time_dependent:
        a_f = _const(a_f(0.0))

    u_i = np.concatenate([sys.u0, gamma.astype(complex)])
    b_norm_smax = float(np.linalg.norm(gamma / T))
    return HomogenizedSystem(a_f, u_i, gamma, b_norm_smax, n, T, sys.time_dependent)


@dataclass(frozen=True)
class HermitianSplit:
    """A_f = H1 + i H2 with H1, H2 Hermitian.

    For time-independent problems ``h1``/``h2`` are arrays, otherwise
    callables of t.
    """

    h1: np.ndarray | MatrixFn
    h2: np.ndarray | MatrixFn
    alpha1: float
    alpha2: float

    @property
    def time_dependent(self) -> bool:
        return callable(self.h1)

    @property
    def dim(self) -> int:
        return self.h1_at(0.0).shape[0]

    def h1_at(self, t: float) -> np.ndarray:
        return self.h1(t) if callable(self.h1) else self.h1

    def h2_at(self, t: float) -> np.ndarray:
        return self.h2(t) if callable(self.h2) else self.h2


def hermitian_split(a_f, t_grid: Sequence[float] | None = None,
                    alpha1: float | None = None,
                    alpha2: float | None = None) -> HermitianSplit:
    """Split a matrix (or matrix function of t) into H1 + i H2.

    alpha1/alpha2 default to the spectral norms, maximized over ``t_grid``
    when ``a_f`` is callable.
    """
    if callable(a_f):
        ts = np.linspace(0.0, 1.0, N_CHECK_SAMPLES) if t_grid is None else np.asarray(t_grid)
        h1 = lambda t: hermitian_part(a_f(t))
        h2 = lambda t: anti_hermitian_part(a_f(t))
        if alpha1 is None:
            alpha1 = max(np.linalg.norm(h1(t), 2) for t in ts)
        if alpha2 is None:
            alpha2 = max(np.linalg.norm(h2(t), 2) for t in ts)
        return HermitianSplit(h1, h2, float(alpha1), float(alpha2))

    a_f = np.asarray(a_f, dtype=complex)
    if a_f.ndim != 2 or a_f.shape[0] != a_f.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a_f.shape}")
    h1 = hermitian_part(a_f)
    h2 = anti_hermitian_part(a_f)
    if alpha1 is None:
        alpha1 = np.linalg.norm(h1, 2)
    if alpha2 is None:
        alpha2 = np.linalg.norm(h2, 2)
    return HermitianSplit(h1, h2, float(alpha1), float(alpha2))


def split_system(hs: HomogenizedSystem, n_times: int = N_CHECK_SAMPLES) -> HermitianSplit:
    if hs.time_dependent:
        return hermitian_split(hs.a_f, np.linspace(0.0, hs.horizon, n_times))
    return hermitian_split(hs.a_f(0.0))


@dataclass(frozen=True)
class SpectralBounds:
    lambda_plus: float
    lambda_minus: float
    lambda_abs: float = field(init=False)

    def __post_init__(self):
        if self.lambda_plus < 0 or self.lambda_minus < 0:
            raise ValueError("spectral bounds must be non-negative")
        object.__setattr__(self, "lambda_abs", max(self.lambda_plus, self.lambda_minus))


def spectral_bounds(split: HermitianSplit, t_grid: Sequence[float] | None = None) -> SpectralBounds:
    """lambda^+_max and lambda^-_max of H1 over the sampled times."""
    if split.time_dependent:
        ts = np.linspace(0.0, 1.0, N_CHECK_SAMPLES) if t_grid is None else np.asarray(t_grid)
    else:
        ts = [0.0]
    lam_plus = lam_minus = 0.0
    for t in ts:
        try:
            ev = np.linalg.eigvalsh(split.h1_at(t))
        except np.linalg.LinAlgError as exc:
            raise ArithmeticError(f"eigendecomposition of H1({t}) failed: {exc}") from exc
        lam_plus = max(lam_plus, float(ev[-1]))
        lam_minus = max(lam_minus, float(-ev[0]))
    return SpectralBounds(max(lam_plus, 0.0), max(lam_minus, 0.0))


# ---------------------------------------------------------------------------
# builtin problems and config loading

STD2_A = np.array([[-1.0, 0.5], [-0.5, -2.0]])


def convection_diffusion_1d(n: int = 16, nu: float = 0.05, c: float = 1.0) -> np.ndarray:
    """Centered finite differences for u_t = nu u_xx - c u_x on (0, 1), zero Dirichlet data."""
    h = 1.0 / (n + 1)
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    d2 = (np.diag(main) + np.diag(off, 1) + np.diag(off, -1)) / h**2
    d1 = (np.diag(off, 1) - np.diag(off, -1)) / (2 * h)
    return nu * d2 - c * d1


def builtin_system(name: str) -> DynamicalSystem:
    """Named test problems used by the CLI and the acceptance suite."""
    if name == "std2":
        return DynamicalSystem.constant(STD2_A, [1.0, 0.0], [1.0, 1.0], 1.0, name=name)
    if name == "std2-homog":
        return DynamicalSystem.constant(STD2_A, [0.0, 0.0], [1.0, 1.0], 1.0, name=name)
    if name == "zero":
        return DynamicalSystem.constant(np.zeros((2, 2)), [0.0, 0.0], [1.0, -0.5], 1.0, name=name)
    if name == "scalar-decay":
        return DynamicalSystem.constant([[-1.0]], [0.0], [1.0], 1.0, name=name)
    if name == "scalar-td":
        return DynamicalSystem(
            1, lambda t: np.array([[-(1.0 + 0.5 * np.sin(t))]]), [0.0], [1.0], 1.0,
            time_dependent=True, name=name,
        )
    if name == "rotation":
        return DynamicalSystem.constant([[0.0, 1.0], [-1.0, 0.0]], [0.0, 0.0], [1.0, 0.0], 1.0,
                                        name=name)
    raise KeyError(f"unknown builtin system {name!r}")


BUILTIN_SYSTEMS = ("std2", "std2-homog", "zero", "scalar-decay", "scalar-td", "rotation")


def _parse_complex_array(x) -> np.ndarray:
    def conv(v):
        if isinstance(v, str):
            return complex(v.replace(" ", "").replace("i", "j"))
        if isinstance(v, (list, tuple)):
            return [conv(e) for e in v]
        return v
    return np.asarray(conv(x), dtype=complex)


def system_from_config(cfg: Mapping) -> DynamicalSystem:
    """Build a system from a parsed key-value tree.

    ``A`` is either a dense matrix literal (nested lists, complex entries as
    strings like ``"1+2j"``) or a mapping ``{builtin: diag, entries: [...]}``
    / ``{builtin: convection-diffusion-1d, n: .., nu: .., c: ..}``.
    """
    if "builtin" in cfg:
        return builtin_system(cfg["builtin"])
    try:
        spec_a = cfg["A"]
    except KeyError as exc:
        raise InvalidSystemError("system config needs an 'A' entry") from exc

    if isinstance(spec_a, Mapping):
        kind = spec_a.get("builtin")
        if kind == "diag":
            a = np.diag(_parse_complex_array(spec_a["entries"]))
        elif kind == "convection-diffusion-1d":
            a = convection_diffusion_1d(int(spec_a.get("n", cfg.get("dim", 16))), float(spec_a.get("nu", 0.05)),
                                        float(spec_a.get("c", 1.0)))
        else:
            raise InvalidSystemError(f"unknown matrix generator {kind!r}")
    else:
        a = np.atleast_2d(_parse_complex_array(spec_a))

    n = a.shape[0]
    dim = int(cfg.get("dim", n))
    if a.shape != (dim, dim):
        raise InvalidSystemError(f"A has shape {a.shape}, expected ({dim}, {dim})")
    b = _parse_complex_array(cfg.get("b", [0.0] * dim))
    if "u0" in cfg:
        u0 = _parse_complex_array(cfg["u0"])
    elif isinstance(spec_a, Mapping) and spec_a.get("builtin") == "convection-diffusion-1d":
        x = np.arange(1, n + 1) / (n + 1)
        u0 = np.sin(np.pi * x)
    else:
        u0 = np.ones(dim)
    if bool(cfg.get("time_dependent", False)):
        raise InvalidSystemError("time-dependent systems cannot be given as literals; use a builtin")
    return DynamicalSystem.constant(a, b, u0, float(cfg.get("T", 1.0)), name=str(cfg.get("name", "")))
