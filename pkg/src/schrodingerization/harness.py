"""Experiment drivers: convergence orders, derivative growth, mu_max scaling,
truncation checks and query-count formulas, with CSV/JSON reporting."""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, warp
from .oracle import DEFAULT_TOL, solve_reference
from .pipeline import build_domain, relative_error, solve
from .profiles import CutoffProfile, ErfProfile, InitProfile, deriv_l2_norm, parse_profile
from .system import DynamicalSystem, homogenize, spectral_bounds, split_system

FLOOR_FACTOR = 10.0


# ---------------------------------------------------------------------------
# fitting helpers


def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of y against x."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        return math.nan
    return float(np.polyfit(x, y, 1)[0])


def fit_order(n_p: Sequence[int], errors: Sequence[float], floor: float = 0.0) -> float:
    """Order q in err ~ n_p^{-q}, ignoring points at or below ``floor``."""
    n = np.asarray(n_p, float)
    e = np.asarray(errors, float)
    keep = e > floor
    if keep.sum() < 2:
        return math.nan
    return -fit_slope(np.log(n[keep]), np.log(e[keep]))


def pairwise_orders(n_p: Sequence[int], errors: Sequence[float]) -> list[float]:
    n = np.asarray(n_p, float)
    e = np.asarray(errors, float)
    return [float(-np.log(e[i + 1] / e[i]) / np.log(n[i + 1] / n[i])) for i in range(len(n) - 1)]


def r_squared(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    total = np.sum((y - y.mean()) ** 2)
    return float(1.0 - np.sum(resid ** 2) / total) if total > 0 else 1.0


def drop_first_change(x: Sequence[float], y: Sequence[float]) -> float:
    """Relative change of the fitted slope when the first point is dropped."""
    s_all = fit_slope(x, y)
    s_drop = fit_slope(list(x)[1:], list(y)[1:])
    return abs(s_drop - s_all) / abs(s_all)


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# reports


@dataclass
class ConvergenceReport:
    profile: str
    n_p: list[int]
    errors: list[float]
    pairwise_orders: list[float]
    order: float
    runtimes: list[float]
    mu_max: list[float]
    provenance: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [{"profile": self.profile, "n_p": n, "mu_max": m, "error": e, "runtime_s": t}
                for n, m, e, t in zip(self.n_p, self.mu_max, self.errors, self.runtimes)]


@dataclass
class GrowthReport:
    family: str
    r: list[int]
    log_values: list[float]  # log ||psi^(r)||^{1/r}
    slope: float
    beta_estimate: float
    robustness: float  # relative slope change when dropping the smallest r
    provenance: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [{"family": self.family, "r": r, "log_value": v, "value": math.exp(v)}
                for r, v in zip(self.r, self.log_values)]


@dataclass
class MuScalingReport:
    profile: str
    epsilons: list[float]
    n_p: list[int | None]
    mu_max: list[float | None]
    errors: list[float | None]
    loglog_slope: float
    linear_r2: float
    max_ratio_to_log: float
    provenance: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [{"profile": self.profile, "epsilon": e, "n_p": n, "mu_max": m, "error": err,
                 "reached": n is not None}
                for e, n, m, err in zip(self.epsilons, self.n_p, self.mu_max, self.errors)]


@dataclass
class TruncationReport:
    profile: str
    L: list[float]
    n_p: list[int]
    errors: list[float]
    boundary_trace: list[float]
    rate: float
    reference_L: float
    p_recover: float
    provenance: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [{"profile": self.profile, "L": L, "n_p": n, "error": e, "boundary_trace": b}
                for L, n, e, b in zip(self.L, self.n_p, self.errors, self.boundary_trace)]


@dataclass(frozen=True)
class ComplexityEstimate:
    method: str
    queries: float
    state_prep: float
    inputs: dict
    reference_only: bool = False

    def row(self) -> dict:
        out = {"method": self.method, "queries": self.queries, "state_prep": self.state_prep,
               "reference_only": self.reference_only}
        out.update(self.inputs)
        return out


# ---------------------------------------------------------------------------
# studies


def _provenance(sys: DynamicalSystem | None = None, **extra) -> dict:
    prov = {"package_version": __version__, "oracle_tol": DEFAULT_TOL}
    if sys is not None:
        prov["system"] = sys.name
        prov["T"] = sys.horizon
        prov["dim"] = sys.dim
    prov.update(extra)
    return prov


def convergence_study(sys: DynamicalSystem, profile: str, n_p_list: Sequence[int],
                      epsilon: float = 1e-6, average: bool = False, threads: int = 1,
                      oracle_tol: float = DEFAULT_TOL) -> ConvergenceReport:
    """Full pipeline at each n_p on the criterion domain; error vs the oracle."""
    ref = solve_reference(sys, tol=oracle_tol).u_T

    def one(n):
        t0 = time.perf_counter()
        res = solve(sys, profile, epsilon, n_p=n, average=average)
        return res, relative_error(res.u, ref), time.perf_counter() - t0

    out = _map(one, list(n_p_list), threads)
    errors = [e for _, e, _ in out]
    dom = out[0][0].domain
    floor = FLOOR_FACTOR * oracle_tol
    return ConvergenceReport(
        profile=out[0][0].profile.spec(), n_p=list(n_p_list), errors=errors,
        pairwise_orders=pairwise_orders(n_p_list, errors),
        order=fit_order(n_p_list, errors, floor=floor),
        runtimes=[t for _, _, t in out], mu_max=[r.mu_max for r, _, _ in out],
        provenance=_provenance(sys, profile=profile, epsilon=epsilon, L=dom.L, R=dom.R,
                               average=average, oracle_tol=oracle_tol))


def _profile_for_eps(family: str, eps: float) -> str:
    fam = family.split(":")[0]
    if fam == "exp_abs":
        return "exp_abs"
    if fam in ("erf", "quartic"):
        return f"{fam}:eps={eps!r}"
    if fam == "cutoff":
        return f"cutoff:d={max(1, math.ceil(math.log(1.0 / eps)))}"
    return family


def minimal_resolution(sys: DynamicalSystem, profile: str, epsilon: float, ref: np.ndarray,
                       n_min: int = 16, n_max: int = 1 << 23):
    """Smallest power-of-two n_p whose recovered u(T) is within ``epsilon`` of ``ref``.

    Returns (n_p, mu_max, error), with n_p None when n_max is not enough.
    """
    hs = homogenize(sys)
    split = split_system(hs)
    T = sys.horizon
    bounds = spectral_bounds(split, np.linspace(0.0, T, 33))
    n = n_min
    err = math.nan
    while n <= n_max:
        dom, prof = build_domain(bounds, T, epsilon, profile, n_p=n)
        try:
            window = warp.measurement_window(dom, bounds, T, prof.p_star)
        except warp.ConfigurationError:
            n *= 2
            continue
        if split.time_dependent:
            u = solve(sys, prof, epsilon, L=dom.L, R=dom.R, n_p=n).u
        else:
            u = warp.stream_recover_row(prof, dom, split, T, hs.u_i, window.k_star)[:sys.dim]
        err = relative_error(u, ref)
        if err <= epsilon:
            return n, dom.mu_max, err
        n *= 2
    return None, None, err


def mu_scaling_study(sys: DynamicalSystem, family: str, eps_list: Sequence[float],
                     n_max: int = 1 << 23, threads: int = 1) -> MuScalingReport:
    """Minimal n_p (and mu_max) reaching each epsilon; fits the two scaling laws."""
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    ref = solve_reference(sys).u_T
    out = _map(lambda e: minimal_resolution(sys, _profile_for_eps(family, e), e, ref,
                                            n_max=n_max), eps_list, threads)
    reached = [(e, m) for e, (n, m, _) in zip(eps_list, out) if n is not None]
    if len(reached) >= 2:
        inv = np.array([1.0 / e for e, _ in reached])
        le = np.log(inv)
        mu = np.array([m for _, m in reached])
        slope = fit_slope(np.log(inv), np.log(mu))
        r2 = r_squared(le, mu)
        ratio = float(np.max(mu / le))
    else:
        slope = r2 = ratio = math.nan
    return MuScalingReport(family, eps_list, [o[0] for o in out], [o[1] for o in out],
                           [o[2] for o in out], slope, r2, ratio,
                           _provenance(sys, family=family, n_max=n_max))


def growth_profile(family: str, r: int, R: float = 5.0) -> InitProfile:
    """The r-coupled family member: Erf with a = 2 sqrt(r), Cutoff with d = r."""
    if family == "erf":
        return ErfProfile(2.0 * math.sqrt(r))
    if family == "cutoff":
        return CutoffProfile(R, d=r)
    raise ValueError(f"growth study supports 'erf' and 'cutoff', got {family!r}")


def growth_study(family: str, r_list: Sequence[int], R: float = 5.0,
                 threads: int = 1) -> GrowthReport:
    r_list = [int(r) for r in r_list]
    if any(b <= a for a, b in zip(r_list, r_list[1:])):
        raise ValueError("r values must be strictly increasing")
    logs = _map(lambda r: deriv_l2_norm(growth_profile(family, r, R), r) / r, r_list, threads)
    x = np.log(r_list)
    slope = fit_slope(x, logs)
    robust = drop_first_change(x, logs) if len(r_list) >= 3 else math.nan
    return GrowthReport(family, r_list, [float(v) for v in logs], slope, 1.0 / slope, robust,
                        _provenance(family=family, cutoff_R=R if family == "cutoff" else None))


def truncation_check(sys: DynamicalSystem, profile: str, L_list: Sequence[float],
                     dp: float = 0.02, reference_L: float | None = None,
                     p_recover: float = 1.0, epsilon: float = 1e-12,
                     n_times: int = 9) -> TruncationReport:
    """Recovered u(T) on [-L, L] against an extra-wide reference domain.

    Every run reconstructs w(T, p_recover) from its Fourier interpolant, so
    the comparison is made at the same p on every grid.  The boundary trace
    is max_t ||w(t, -L)|| over ``n_times`` equispaced times.
    """
    hs = homogenize(sys)
    split = split_system(hs)
    if split.time_dependent:
        raise ValueError("truncation_check supports time-independent systems")
    T = sys.horizon
    bounds = spectral_bounds(split)
    L_list = [float(L) for L in L_list]
    if reference_L is None:
        reference_L = 2.0 * max(L_list) + 10.0

    def run(L):
        n = warp.next_pow2(2.0 * L / dp)
        dom, prof = build_domain(bounds, T, epsilon, profile, L=L, R=L, n_p=n)
        f0 = warp.to_fourier(warp.initialize(prof, dom, hs.u_i))
        trace = 0.0
        for t in np.linspace(0.0, T, n_times)[1:]:
            ft = warp.evolve_time_independent(f0, split, float(t))
            trace = max(trace, float(np.linalg.norm(warp.evaluate_at(ft, -L)[0])))
        u_f = math.exp(p_recover) * warp.evaluate_at(ft, p_recover)[0]
        return n, u_f[:sys.dim], trace / float(np.linalg.norm(hs.u_i))

    _, u_ref, _ = run(reference_L)
    ns, errs, traces = [], [], []
    for L in L_list:
        n, u, tr = run(L)
        ns.append(n)
        errs.append(relative_error(u, u_ref))
        traces.append(tr)
    e = np.array(errs)
    keep = e > 1e-14
    rate = -fit_slope(np.array(L_list)[keep], np.log(e[keep])) if keep.sum() >= 2 else math.nan
    return TruncationReport(profile, L_list, ns, errs, traces, rate, reference_L, p_recover,
                            _provenance(sys, profile=profile, dp=dp, epsilon=epsilon))


# ---------------------------------------------------------------------------
# query-count formulas (constants set to 1; order of magnitude only)


def query_estimate(norm_ratio: float, alpha_h: float, T: float, epsilon: float,
                   beta: float = 1.0, time_dependent: bool = False) -> ComplexityEstimate:
    """HAM-T query and state-preparation counts for the smooth-profile method.

    queries = ratio * alpha_H * T * log(ratio / eps)^{1/beta}, one extra
    log factor for time-dependent problems; state_prep = ratio.
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if not (norm_ratio > 0 and alpha_h > 0 and T > 0 and epsilon > 0):
        raise ValueError("norm_ratio, alpha_h, T and epsilon must be positive")
    lg = math.log(norm_ratio / epsilon)
    if lg <= 0:
        raise ValueError("norm_ratio / epsilon must exceed 1")
    q = norm_ratio * alpha_h * T * lg ** (1.0 / beta)
    if time_dependent:
        q *= lg
    tag = "this-work-time-dependent" if time_dependent else "this-work-time-independent"
    inputs = {"norm_ratio": norm_ratio, "alpha_h": alpha_h, "T": T, "epsilon": epsilon,
              "beta": beta}
    return ComplexityEstimate(tag, q, norm_ratio, inputs)


def complexity_table(norm_ratio: float, alpha_h: float, T: float, epsilon: float,
                     beta: float = 1.0, kappa_v: float = 1.0) -> list[ComplexityEstimate]:
    """This-work rows plus the comparison-method reference formulas."""
    rows = [query_estimate(norm_ratio, alpha_h, T, epsilon, beta, False),
            query_estimate(norm_ratio, alpha_h, T, epsilon, beta, True)]
    u, a, lg = norm_ratio, alpha_h, math.log(1.0 / epsilon)
    inputs = {"norm_ratio": u, "alpha_h": a, "T": T, "epsilon": epsilon, "beta": beta}
    ref = [
        ("spectral-method", u * kappa_v * a * T * lg, u * kappa_v * a * T * lg),
        ("truncated-dyson", u * a * T * lg ** 2, u * a * T * lg),
        ("time-marching", u * a ** 2 * T ** 2 * lg, u),
        ("lchs-improved-time-dependent", u * a * T * lg ** (1.0 + 1.0 / beta), u),
        ("lchs-improved-time-independent", u * a * T * lg ** (1.0 / beta), u),
        ("lchs-optimal-time-independent", u * a * T * lg, u),
    ]
    for tag, q, sp in ref:
        extra = dict(inputs, kappa_v=kappa_v) if tag == "spectral-method" else inputs
        rows.append(ComplexityEstimate(tag, q, sp, extra, reference_only=True))
    return rows


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if not math.isfinite(v) else f"{float(v):.17g}"
    return str(v)


def write_csv(path: str | Path, rows: list[dict], provenance: dict) -> Path:
    """CSV with '#'-prefixed provenance lines, one header row, one row per measurement."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with path.open("w", newline="") as fh:
        for k in sorted(provenance):
            fh.write(f"# {k}: {_fmt(provenance[k])}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols])
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_json(path: str | Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def report_summary(report) -> dict:
    return asdict(report)
