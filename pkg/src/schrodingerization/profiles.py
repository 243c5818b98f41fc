"""Initial profiles psi(p) for the auxiliary variable and the special functions behind them.

Five families are available:

* ``exp_abs``  -- e^{-|p|}, the original (kinked, first-order) choice
* ``cutoff``   -- zeta(p) e^{-p} with zeta a mollified indicator of (-1-d, R+d)
* ``hermite``  -- e^{-p} for p > 0, e^{p} for p < -1, Hermite interpolant between
* ``erf``      -- (erf(a p) + 1)/2 * e^{-p}
* ``quartic``  -- (chi(a p) + 1/2) e^{-p}, chi the normalized primitive of e^{-t^4}

Every profile evaluates psi and its analytic derivatives up to
``deriv_order_max``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

K_MAX = 40
HERMITE_R_MAX = 16
ERF_ORDER_MAX = 64
QUARTIC_ORDER_MAX = 32
CRAMER_CONSTANT = 1.086435


class ProfileError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Hermite polynomials


def hermite_poly(k: int, x) -> np.ndarray:
    """Physicists' Hermite polynomial H_k(x) by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), 2.0 * x
    if k == 0:
        return h_prev
    for n in range(1, k):
        h_prev, h = h, 2.0 * x * h - 2.0 * n * h_prev
    return h


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Orthonormal Hermite functions H_n(x) e^{-x^2/2} / sqrt(2^n n! sqrt(pi)), n = 0..n_max.

    Returns an array of shape (n_max + 1, *x.shape).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _log_hermite_scale(n: int) -> float:
    # log sqrt(2^n n! sqrt(pi))
    return 0.5 * (n * math.log(2.0) + math.lgamma(n + 1) + 0.5 * math.log(math.pi))


def erf_derivative(k: int, x) -> np.ndarray:
    """k-th derivative of erf at x (k >= 0)."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return special.erf(x)
    hf = hermite_functions(k - 1, x)[k - 1]
    scale = math.exp(_log_hermite_scale(k - 1)) * 2.0 / math.sqrt(math.pi)
    return (-1) ** (k - 1) * scale * hf * np.exp(-0.5 * x * x)


# ---------------------------------------------------------------------------
# mollifier eta(p) = exp(1/(p^2-1)) / C on (-1, 1)


@lru_cache(maxsize=None)
def mollifier_constant() -> float:
    val, err = integrate.quad(lambda p: math.exp(1.0 / (p * p - 1.0)), -1.0, 1.0,
                              epsabs=1e-14, epsrel=1e-14, limit=200)
    if not err < 1e-12:
        raise ArithmeticError(f"mollifier normalization did not converge (err {err:g})")
    return val


@lru_cache(maxsize=None)
def mollifier_poly(k: int) -> tuple[int, ...]:
    """Integer coefficients (ascending powers) of Q_k, where
    d^k/dp^k exp(1/(p^2-1)) = Q_k(p) (1-p^2)^{-2k} exp(1/(p^2-1)).

    Q_0 = 1,  Q_{k+1} = (1-p^2)^2 Q_k' + 2p(2k-1-2kp^2) Q_k.
    """
    if k < 0:
        raise ValueError("order must be non-negative")
    if k == 0:
        return (1,)
    q = mollifier_poly(k - 1)
    j = k - 1
    dq = [i * c for i, c in enumerate(q)][1:] or [0]
    out = [0] * (len(q) + 4)
    for i, c in enumerate(dq):  # (1 - 2p^2 + p^4) Q'
        out[i] += c
        out[i + 2] -= 2 * c
        out[i + 4] += c
    for i, c in enumerate(q):  # (2(2j-1) p - 4j p^3) Q
        out[i + 1] += 2 * (2 * j - 1) * c
        out[i + 3] -= 4 * j * c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _exact_polyval(coeffs: tuple[int, ...], x: float) -> float:
    """Evaluate an integer polynomial at a float exactly, rounding once at the end."""
    if x == 0.0:
        return float(coeffs[0])
    frac = Fraction(x)
    m, den = frac.numerator, frac.denominator
    n = len(coeffs) - 1
    acc = coeffs[n]
    dpow = 1
    for j in range(n - 1, -1, -1):
        dpow *= den
        acc = acc * m + coeffs[j] * dpow
    return float(Fraction(acc, dpow))


def _exact_rational_polyval(coeffs: tuple[Fraction, ...], x: float) -> Fraction:
    acc = Fraction(0)
    fx = Fraction(x)
    for c in reversed(coeffs):
        acc = acc * fx + c
    return acc


def _exp_taylor_logderiv(p0: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Scaled k-th Taylor coefficient F_k of exp(g(p0 + rho t) - g(p0)), g = 1/(p^2-1).

    rho = (1-|p0|)^2 keeps the coefficients of g bounded, and the recurrence
    n F_n = sum_j j G_j F_{n-j} is free of the cancellation that plagues the
    monomial form of Q_k.  Returns (F_k, log rho).
    """
    s = 1.0 - np.abs(p0)
    rho = s * s
    j = np.arange(1, k + 1)[:, None]
    g = 0.5 * (-rho) ** j * ((p0 - 1.0) ** -(j + 1.0) - (p0 + 1.0) ** -(j + 1.0))
    f = [np.ones_like(p0)]
    for n in range(1, k + 1):
        acc = np.zeros_like(p0)
        for jj in range(1, n + 1):
            acc += jj * g[jj - 1] * f[n - jj]
        f.append(acc / n)
    return f[k], np.log(rho)


def mollifier(p, k: int = 0) -> np.ndarray:
    """k-th derivative of the normalized mollifier eta at p (zero for |p| >= 1)."""
    if not 0 <= k <= K_MAX:
        raise ProfileError(f"derivative order {k} outside [0, {K_MAX}]")
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape)
    inside = np.abs(p) < 1.0
    if not inside.any():
        return out
    pi = p[inside]
    log_base = 1.0 / (pi * pi - 1.0) - math.log(mollifier_constant())
    if k == 0:
        out[inside] = np.exp(log_base)
        return out
    # evaluate at |p| and restore parity so that eta^(k)(-p) = (-1)^k eta^(k)(p) exactly
    fk, log_rho = _exp_taylor_logderiv(np.abs(pi), k)
    if k % 2:
        fk = np.where(pi < 0, -fk, fk)
    with np.errstate(divide="ignore"):
        log_mag = math.lgamma(k + 1) + np.log(np.abs(fk)) - k * log_rho + log_base
    out[inside] = np.sign(fk) * np.exp(log_mag)
    return out


def mollifier_bound(k: int) -> float:
    """20^k k! e^{-2k} (2k)^{2k}, the growth envelope for sup |eta^(k)|."""
    if k == 0:
        return 1.0
    return math.exp(k * math.log(20.0) + math.lgamma(k + 1) - 2 * k + 2 * k * math.log(2 * k))


_CDF_NODES = np.polynomial.legendre.leggauss(40)


def mollifier_cdf(y, panels: int = 6) -> np.ndarray:
    """M(y) = integral of eta over (-1, y), by composite Gauss-Legendre on (-1, -|y|)."""
    x, w = _CDF_NODES
    y = np.clip(np.asarray(y, dtype=float), -1.0, 1.0)
    ym = -np.abs(y)
    e = np.linspace(0.0, 1.0, panels + 1)
    a = -1.0 + (ym[..., None] + 1.0) * e[:-1]
    b = -1.0 + (ym[..., None] + 1.0) * e[1:]
    half = 0.5 * (b - a)[..., None]
    pts = half * x + 0.5 * (a + b)[..., None]
    left = np.sum(half * w * mollifier(pts, 0), axis=(-1, -2))
    return np.where(y > 0, 1.0 - left, left)


# ---------------------------------------------------------------------------
# profiles


class InitProfile:
    """Base class: psi(p) >= 0 with analytic derivatives up to ``deriv_order_max``."""

    kind = "abstract"
    deriv_order_max = 0
    beta_claim: float | None = None
    p_star = 0.0
    # leftmost point of supp(psi); -inf for profiles with full support
    support_left = -math.inf

    def __call__(self, p) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, p, k: int) -> np.ndarray:
        if k == 0:
            return self(p)
        raise ProfileError(f"{self.kind}: derivative of order {k} not available")

    def check_order(self, k: int) -> None:
        if not 0 <= k <= self.deriv_order_max:
            raise ProfileError(
                f"{self.kind}: order {k} exceeds deriv_order_max={self.deriv_order_max}")

    def spec(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.spec()}>"


class ExpAbsProfile(InitProfile):
    kind = "exp_abs"

    def __call__(self, p):
        return np.exp(-np.abs(np.asarray(p, dtype=float)))

    def derivative(self, p, k):
        self.check_order(k)
        return self(p)


def _leibniz_exp(p, k_derivs, r: int) -> np.ndarray:
    """(f e^{-p})^{(r)} given k_derivs[k] = f^{(k)}(p) for k = 0..r."""
    total = np.zeros_like(np.asarray(p, dtype=float))
    for k in range(r + 1):
        total = total + math.comb(r, k) * (-1) ** (r - k) * k_derivs[k]
    return total * np.exp(-np.asarray(p, dtype=float))


class CutoffProfile(InitProfile):
    """psi = zeta e^{-p}, zeta = J_d(indicator of (-1-d, R+d)); zeta = 1 on (-1, R)."""

    kind = "cutoff"
    beta_claim = 0.5
    deriv_order_max = K_MAX + 1

    def __init__(self, R: float, d: float = 1.0):
        if not d >= 1.0:
            raise ProfileError(f"cutoff width d must be >= 1, got {d}")
        if not R > 0:
            raise ProfileError(f"cutoff R must be > 0, got {R}")
        self.R = float(R)
        self.d = float(d)
        self.a1 = -1.0 - self.d
        self.b1 = self.R + self.d
        self.support_left = -1.0 - 2.0 * self.d

    def zeta(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return mollifier_cdf((p - self.a1) / self.d) - mollifier_cdf((p - self.b1) / self.d)

    def zeta_derivative(self, p, k: int) -> np.ndarray:
        if k == 0:
            return self.zeta(p)
        p = np.asarray(p, dtype=float)
        d = self.d
        scale = d ** -k
        return scale * (mollifier((p - self.a1) / d, k - 1) - mollifier((p - self.b1) / d, k - 1))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return self.zeta(p) * np.exp(-p)

    def derivative(self, p, k):
        self.check_order(k)
        return _leibniz_exp(p, [self.zeta_derivative(p, j) for j in range(k + 1)], k)

    def spec(self):
        return f"cutoff:d={self.d:g}"


def _poly_mul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_pow_linear(c0: int, n: int) -> list:
    """(p + c0)^n, ascending coefficients."""
    return [Fraction(math.comb(n, j) * c0 ** (n - j)) for j in range(n + 1)]


def _poly_deriv_at(coeffs: list, nu: int, x: int) -> Fraction:
    total = Fraction(0)
    for j in range(nu, len(coeffs)):
        total += coeffs[j] * math.perm(j, nu) * Fraction(x) ** (j - nu)
    return total


def _poly_axpy(y: list, a: Fraction, x: list) -> list:
    n = max(len(y), len(x))
    y = y + [Fraction(0)] * (n - len(y))
    for i, v in enumerate(x):
        y[i] += a * v
    return y


def _hermite_parts(r: int) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Exact rational polynomials A, B with P_{2r-1} = e^{-1} A + B.

    A = sum_k L_{0k} carries the data at p = -1, B = sum_k (-1)^k L_{1k} the
    data at p = 0.
    """
    if not 1 <= r <= HERMITE_R_MAX:
        raise ProfileError(f"Hermite order r must be in [1, {HERMITE_R_MAX}], got {r}")
    sgn = Fraction((-1) ** r)
    p_r = [Fraction(0)] * r + [Fraction(1)]
    l0 = [[sgn * c / math.factorial(k) for c in _poly_mul(_poly_pow_linear(1, k), p_r)]
          for k in range(r)]
    l1 = [[c / math.factorial(k) for c in _poly_mul([Fraction(0)] * k + [Fraction(1)],
                                                    _poly_pow_linear(1, r))]
          for k in range(r)]
    big_l0: list = [None] * r
    big_l1: list = [None] * r
    for k in range(r - 1, -1, -1):
        acc0, acc1 = list(l0[k]), list(l1[k])
        for nu in range(k + 1, r):
            acc0 = _poly_axpy(acc0, -_poly_deriv_at(l0[k], nu, -1), big_l0[nu])
            acc1 = _poly_axpy(acc1, -_poly_deriv_at(l1[k], nu, 0), big_l1[nu])
        big_l0[k], big_l1[k] = acc0, acc1

    a_poly: list = [Fraction(0)]
    b_poly: list = [Fraction(0)]
    for k in range(r):
        a_poly = _poly_axpy(a_poly, Fraction(1), big_l0[k])
        b_poly = _poly_axpy(b_poly, Fraction((-1) ** k), big_l1[k])
    return tuple(a_poly), tuple(b_poly)


def _poly_derivative(coeffs: tuple[Fraction, ...], k: int) -> tuple[Fraction, ...]:
    out = list(coeffs)
    for _ in range(k):
        out = [i * c for i, c in enumerate(out)][1:] or [Fraction(0)]
    return tuple(out)


def hermite_interpolant_coeffs(r: int) -> np.ndarray:
    """Ascending monomial coefficients of P_{2r-1} (rounded to double).

    P matches e^{p} (value e^{-1} and all derivatives) at p = -1 and e^{-p}
    (derivatives (-1)^k) at p = 0, for orders 0..r-1, built from the
    generalized Lagrange polynomials L_{0k}, L_{1k}.  Evaluating the rounded
    coefficients loses accuracy quickly with r; ``HermiteProfile`` evaluates
    the exact parts instead.
    """
    a_poly, b_poly = _hermite_parts(r)
    e_inv = math.exp(-1.0)
    return np.array([e_inv * float(a) + float(b) for a, b in zip(a_poly, b_poly)])


class HermiteProfile(InitProfile):
    kind = "hermite"

    def __init__(self, r: int):
        self.r = int(r)
        self._parts = _hermite_parts(self.r)
        self.coeffs = hermite_interpolant_coeffs(self.r)
        self.deriv_order_max = self.r - 1
        self._deriv_parts = [
            (_poly_derivative(self._parts[0], k), _poly_derivative(self._parts[1], k))
            for k in range(self.r)
        ]

    def interpolant(self, p, k: int = 0) -> np.ndarray:
        """k-th derivative of P_{2r-1}, evaluated exactly and rounded once per part."""
        a_poly, b_poly = self._deriv_parts[k] if k < self.r else (
            _poly_derivative(self._parts[0], k), _poly_derivative(self._parts[1], k))
        e_inv = math.exp(-1.0)
        p = np.asarray(p, dtype=float)
        flat = [e_inv * float(_exact_rational_polyval(a_poly, float(v)))
                + float(_exact_rational_polyval(b_poly, float(v))) for v in p.ravel()]
        return np.array(flat).reshape(p.shape)

    def derivative(self, p, k):
        self.check_order(k)
        p = np.asarray(p, dtype=float)
        out = np.empty(p.shape)
        right = p > 0
        left = p < -1
        mid = ~(right | left)
        out[right] = (-1) ** k * np.exp(-p[right])
        out[left] = np.exp(p[left])
        out[mid] = self.interpolant(p[mid], k)
        return out

    def __call__(self, p):
        return self.derivative(p, 0)

    def spec(self):
        return f"hermite:r={self.r}"


class ErfProfile(InitProfile):
    """psi = phi e^{-p}, phi(p) = (erf(a p) + 1) / 2."""

    kind = "erf"
    beta_claim = 1.0
    p_star = 0.5
    deriv_order_max = ERF_ORDER_MAX

    def __init__(self, a: float, epsilon: float | None = None):
        if not a >= 1.0:
            raise ProfileError(f"erf steepness a must be >= 1, got {a}")
        self.a = float(a)
        self.epsilon = epsilon

    def phi(self, p) -> np.ndarray:
        return 0.5 * special.erfc(-self.a * np.asarray(p, dtype=float))

    def phi_derivative(self, p, k: int) -> np.ndarray:
        if k == 0:
            return self.phi(p)
        return 0.5 * self.a**k * erf_derivative(k, self.a * np.asarray(p, dtype=float))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        # log(erfc(-x)/2) = log_ndtr(sqrt(2) x); stable where e^{-p} alone would overflow
        return np.exp(special.log_ndtr(math.sqrt(2.0) * self.a * p) - p)

    def derivative(self, p, k):
        self.check_order(k)
        if k == 0:
            return self(p)
        p = np.asarray(p, dtype=float)
        x = self.a * p
        hf = hermite_functions(k - 1, x)
        derivs = [self.phi(p)]
        for j in range(1, k + 1):
            log_c = j * math.log(self.a) + _log_hermite_scale(j - 1) - 0.5 * math.log(math.pi)
            derivs.append((-1) ** (j - 1) * math.exp(log_c) * hf[j - 1] * np.exp(-0.5 * x * x))
        return _leibniz_exp(p, derivs, k)

    def spec(self):
        if self.epsilon is not None:
            return f"erf:eps={self.epsilon:g}"
        return f"erf:a={self.a:g}"


QUARTIC_MASS = 2.0 * math.gamma(1.25)


def quartic_chi(x) -> np.ndarray:
    """chi(x) = (int_R e^{-t^4} dt)^{-1} int_0^x e^{-t^4} dt."""
    x = np.asarray(x, dtype=float)
    return 0.5 * np.sign(x) * special.gammainc(0.25, x**4)


def quartic_tail(x) -> np.ndarray:
    """1/2 - chi(x) for x >= 0."""
    return 0.5 * special.gammaincc(0.25, np.asarray(x, dtype=float) ** 4)


@lru_cache(maxsize=None)
def _quartic_polys(k_max: int) -> tuple:
    # d^j/dx^j e^{-x^4} = P_j(x) e^{-x^4};  P_{j+1} = P_j' - 4x^3 P_j
    polys = [np.polynomial.Polynomial([1.0])]
    x3 = np.polynomial.Polynomial([0, 0, 0, 4.0])
    for _ in range(k_max):
        polys.append(polys[-1].deriv() - x3 * polys[-1])
    return tuple(polys)


class QuarticProfile(InitProfile):
    kind = "quartic"
    beta_claim = 1.0
    p_star = 0.5
    deriv_order_max = QUARTIC_ORDER_MAX

    def __init__(self, a: float, epsilon: float | None = None):
        self.a = float(a)
        self.epsilon = epsilon

    def phi(self, p):
        return quartic_chi(self.a * np.asarray(p, dtype=float)) + 0.5

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return self.phi(p) * np.exp(-p)

    def derivative(self, p, k):
        self.check_order(k)
        if k == 0:
            return self(p)
        p = np.asarray(p, dtype=float)
        x = self.a * p
        polys = _quartic_polys(k)
        g = np.exp(-x**4)
        derivs = [self.phi(p)]
        for j in range(1, k + 1):
            derivs.append(self.a**j * polys[j - 1](x) * g / QUARTIC_MASS)
        return _leibniz_exp(p, derivs, k)

    def spec(self):
        if self.epsilon is not None:
            return f"quartic:eps={self.epsilon:g}"
        return f"quartic:a={self.a:g}"


# ---------------------------------------------------------------------------
# constructors


def make_exp_abs() -> ExpAbsProfile:
    return ExpAbsProfile()


def make_cutoff(R: float, d: float = 1.0) -> CutoffProfile:
    return CutoffProfile(R, d)


def make_hermite(r: int) -> HermiteProfile:
    return HermiteProfile(r)


def erf_steepness(epsilon: float) -> float:
    return 2.0 * math.sqrt(math.log(1.0 / epsilon))


def make_erf(epsilon: float) -> ErfProfile:
    if not 0.0 < epsilon < math.exp(-1.0):
        raise ProfileError(f"erf profile needs 0 < eps < 1/e, got {epsilon}")
    return ErfProfile(erf_steepness(epsilon), epsilon)


def quartic_steepness(epsilon: float, p_star: float = 0.5) -> float:
    """Smallest a with 1 - phi(p) <= eps for p >= p_star (bracketed root of the tail)."""
    f = lambda a: math.log(quartic_tail(a * p_star)) - math.log(epsilon)
    lo, hi = 1e-3, 1.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise ArithmeticError("quartic steepness bracket failed")
    try:
        return optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
    except ValueError as exc:
        raise ArithmeticError(f"quartic steepness search failed: {exc}") from exc


def make_quartic(epsilon: float) -> QuarticProfile:
    if not 0.0 < epsilon < math.exp(-1.0):
        raise ProfileError(f"quartic profile needs 0 < eps < 1/e, got {epsilon}")
    return QuarticProfile(quartic_steepness(epsilon), epsilon)


def parse_profile(text: str, R: float | None = None) -> InitProfile:
    """Parse ``exp_abs``, ``cutoff:d=<v>``, ``hermite:r=<v>``, ``erf:eps=<v>``, ``quartic:eps=<v>``.

    ``erf:a=<v>`` and ``quartic:a=<v>`` set the steepness directly.  The
    cutoff profile needs the right end R of the truncated domain.
    """
    name, _, rest = text.strip().partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ProfileError(f"malformed profile parameter {item!r} in {text!r}")
        params[key.strip()] = float(val)
    try:
        if name == "exp_abs":
            return make_exp_abs()
        if name == "cutoff":
            return make_cutoff(params.get("R", R if R is not None else 20.0), params.get("d", 1.0))
        if name == "hermite":
            return make_hermite(int(params.get("r", 2)))
        if name == "erf":
            if "a" in params:
                return ErfProfile(params["a"])
            return make_erf(params.get("eps", 1e-6))
        if name == "quartic":
            if "a" in params:
                return QuarticProfile(params["a"])
            return make_quartic(params.get("eps", 1e-6))
    except (TypeError, ValueError) as exc:
        raise ProfileError(f"bad profile spec {text!r}: {exc}") from exc
    raise ProfileError(f"unknown profile {name!r}")


# ---------------------------------------------------------------------------
# derivative norms


def _gl_panels(f, edges: np.ndarray, nodes: int = 24) -> float:
    x, w = np.polynomial.legendre.leggauss(nodes)
    a, b = edges[:-1, None], edges[1:, None]
    pts = 0.5 * (b - a) * x + 0.5 * (a + b)
    vals = f(pts.ravel()).reshape(pts.shape)
    return float(np.sum(0.5 * (b - a) * w * vals))


def _default_interval(profile: InitProfile, r: int) -> tuple[float, float, list[float]]:
    breaks: list[float] = []
    if isinstance(profile, ExpAbsProfile):
        return -40.0, 40.0, [0.0]
    if isinstance(profile, HermiteProfile):
        return -40.0, 40.0, [-1.0, 0.0]
    if isinstance(profile, CutoffProfile):
        lo, hi = profile.support_left, profile.R + 2 * profile.d
        d = profile.d
        breaks = [profile.a1 - d, profile.a1, profile.a1 + d, profile.b1 - d, profile.b1, profile.b1 + d]
        return lo, hi, [b for b in breaks if lo < b < hi]
    a = getattr(profile, "a", 1.0)
    left = -(math.sqrt(2 * r + 1) + 8.0) / a
    return left, 40.0, [0.0]


def deriv_l2_norm(profile: InitProfile, r: int, domain: tuple[float, float] | None = None,
                  panels: int = 256) -> float:
    """log ||psi^{(r)}||_{L^2(domain)}, by composite Gauss-Legendre quadrature.

    The default domain covers the numerical support of psi^{(r)}.  The result
    is a logarithm so that very large norms can be compared and fitted.
    """
    profile.check_order(r)
    lo, hi, breaks = _default_interval(profile, r)
    if domain is not None:
        lo, hi = max(lo, domain[0]), min(hi, domain[1])
        breaks = [b for b in breaks if lo < b < hi]

    def integrand(p, scale):
        v = profile.derivative(p, r) / scale
        return v * v

    fine = np.sort(np.unique(np.concatenate([np.linspace(lo, hi, panels + 1), breaks])))
    probe = profile.derivative(np.linspace(lo, hi, 4 * panels + 1), r)
    scale = float(np.max(np.abs(probe))) or 1.0
    coarse_val = _gl_panels(lambda p: integrand(p, scale), fine)
    finer = np.sort(np.unique(np.concatenate([np.linspace(lo, hi, 2 * panels + 1), breaks])))
    fine_val = _gl_panels(lambda p: integrand(p, scale), finer)
    if fine_val <= 0:
        return -math.inf
    if abs(fine_val - coarse_val) > 1e-6 * fine_val:
        finest = np.sort(np.unique(np.concatenate([np.linspace(lo, hi, 8 * panels + 1), breaks])))
        fine_val = _gl_panels(lambda p: integrand(p, scale), finest)
    return math.log(scale) + 0.5 * math.log(fine_val)
