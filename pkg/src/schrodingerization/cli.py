"""Command-line entry point: ``schrodingerize run`` and ``schrodingerize study``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__, harness, warp
from .lift import LiftConfig
from .oracle import solve_reference
from .pipeline import relative_error, solve
from .profiles import ProfileError
from .system import BUILTIN_SYSTEMS, InvalidSystemError, builtin_system, system_from_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
OUT_ENV = "SCHRODINGERIZATION_OUT"
STUDIES = ("converge", "mu-scaling", "growth", "truncation", "complexity")

log = logging.getLogger("schrodingerization")


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits for reals, componentwise for complex arrays."""
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, np.ndarray):
        return "[" + ", ".join(fmt(v) for v in x.ravel()) + "]"
    return str(x)


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file; command-line flags take precedence")
    p.add_argument("--system", help=f"builtin name {BUILTIN_SYSTEMS} or a YAML system file")
    p.add_argument("--psi", help="profile: exp_abs | cutoff:d=V | hermite:r=V | erf:eps=V | quartic:eps=V")
    p.add_argument("--eps", type=float, help="target accuracy in (0, 1)")
    p.add_argument("--L", type=float, help="left truncation override")
    p.add_argument("--R", type=float, help="right truncation override")
    p.add_argument("--np", dest="n_p", type=int, help="number of p nodes (power of two)")
    p.add_argument("--lift", action="store_true", default=None,
                   help="evolve through dimension lifting even for time-independent systems")
    p.add_argument("--lift-ns", type=int, help="lifting s-grid size (power of two)")
    p.add_argument("--lift-m", type=int, help="delta kernel half-width in s nodes")
    p.add_argument("--lift-S", type=float, help="lifting s-domain scale (domain [-pi S, pi S))")
    p.add_argument("--lift-kernel", choices=("conventional", "printed"), help="delta kernel shape")
    p.add_argument("--average", action="store_true", default=None,
                   help="average e^{p_k} w(T, p_k) over the recovery window")
    p.add_argument("--threads", type=int, help="worker cap for per-mode and per-run parallelism")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    p.add_argument("--seed", type=int, help="seed for random-system suites")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="schrodingerize", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="single pipeline solve against the oracle")
    _common(run)
    run.add_argument("--dump-recovery", action="store_true",
                     help="write recovery.csv with every p-row of w_h(T)")
    st = sub.add_parser("study", help="run a harness study and write CSV + JSON")
    st.add_argument("study", choices=STUDIES)
    _common(st)
    st.add_argument("--np-list", help="comma-separated n_p values (converge)")
    st.add_argument("--eps-list", help="comma-separated decreasing epsilons (mu-scaling)")
    st.add_argument("--r-list", help="comma-separated orders r (growth)")
    st.add_argument("--rmax", type=int, help="largest r for growth; r doubles from 5")
    st.add_argument("--L-list", help="comma-separated half-widths (truncation)")
    st.add_argument("--beta", type=float, help="Gevrey exponent for complexity formulas")
    st.add_argument("--alpha-h", type=float, help="block-encoding bound alpha_H (complexity)")
    st.add_argument("--T", type=float, help="evolution time for complexity formulas")
    st.add_argument("--norm-ratio", type=float, help="||u_I|| / ||u(T)|| for complexity formulas")
    return ap


# ---------------------------------------------------------------------------
# config resolution

DEFAULTS = {"system": "std2", "psi": "erf:eps=1e-6", "eps": 1e-6, "threads": 1,
            "average": False, "lift": None}


def _load_yaml(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < command-line flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        file_cfg = _load_yaml(args.config)
        lift = file_cfg.pop("lift", None)
        if isinstance(lift, dict):
            for k in ("ns", "m", "S", "kernel"):
                if k in lift:
                    cfg[f"lift_{k}"] = lift[k]
            cfg["lift"] = lift.get("enabled", cfg["lift"])
        elif lift is not None:
            cfg["lift"] = bool(lift)
        if "np" in file_cfg:
            file_cfg["n_p"] = file_cfg.pop("np")
        cfg.update(file_cfg)
    for k, v in vars(args).items():
        if v is None or k in ("config", "command", "verbose"):
            continue
        cfg[k] = v
    eps = cfg.get("eps")
    try:
        eps = float(eps)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"eps must be a number, got {cfg.get('eps')!r}") from exc
    if not 0 < eps < 1:
        raise ConfigError(f"eps must lie in (0, 1), got {eps}")
    cfg["eps"] = eps
    cfg["out"] = Path(cfg.get("out") or os.environ.get(OUT_ENV) or "out")
    return cfg


def load_system(spec):
    if isinstance(spec, dict):
        return system_from_config(spec)
    spec = str(spec)
    if spec in BUILTIN_SYSTEMS:
        return builtin_system(spec)
    path = Path(spec)
    if path.suffix in (".yaml", ".yml", ".json") or os.sep in spec:
        data = _load_yaml(spec)
        return system_from_config(data.get("system", data))
    raise ConfigError(f"unknown system {spec!r}; builtins: {', '.join(BUILTIN_SYSTEMS)}")


def _lift_cfg(cfg: dict, T: float) -> LiftConfig | None:
    keys = ("lift_ns", "lift_m", "lift_S", "lift_kernel")
    if not any(k in cfg for k in keys):
        return None
    base = LiftConfig.default(T, n_s=int(cfg.get("lift_ns", 256)), m=int(cfg.get("lift_m", 4)),
                              kernel=cfg.get("lift_kernel", "conventional"))
    if "lift_S" in cfg:
        base = LiftConfig(float(cfg["lift_S"]), base.n_s, base.m, base.kernel)
    return base


# ---------------------------------------------------------------------------
# commands


def cmd_run(cfg: dict) -> int:
    sys_ = load_system(cfg["system"])
    t0 = time.perf_counter()
    res = solve(sys_, cfg["psi"], cfg["eps"], L=cfg.get("L"), R=cfg.get("R"),
                n_p=cfg.get("n_p"), average=bool(cfg.get("average")), lift=cfg.get("lift"),
                lift_cfg=_lift_cfg(cfg, sys_.horizon), threads=int(cfg.get("threads", 1)))
    ref = solve_reference(sys_)
    err = relative_error(res.u, ref.u_T) if np.linalg.norm(ref.u_T) > 0 else float(
        np.linalg.norm(res.u))
    pr = res.probabilities
    print(f"system          {sys_.name}")
    print(f"profile         {res.profile.spec()}")
    print(f"domain          L={fmt(res.domain.L)} R={fmt(res.domain.R)} n_p={res.domain.n_p}")
    print(f"mu_max          {fmt(res.mu_max)}")
    print(f"u(T) recovered  {fmt(res.u)}")
    print(f"u(T) oracle     {fmt(ref.u_T)}")
    print(f"relative_error  {fmt(err)}")
    print(f"pr_w            {fmt(pr.pr_w)}")
    print(f"pr_u            {fmt(pr.pr_u)}")
    print(f"g               {pr.g}")
    out = cfg["out"]
    payload = {
        "version": __version__, "system": sys_.name, "profile": res.profile.spec(),
        "epsilon": cfg["eps"], "L": res.domain.L, "R": res.domain.R, "n_p": res.domain.n_p,
        "dp": res.domain.dp, "mu_max": res.mu_max, "k_star": res.window.k_star,
        "p_k_star": float(res.domain.grid[res.window.k_star]), "lifted": res.lifted,
        "average": bool(cfg.get("average")),
        "u_recovered": {"re": res.u.real.tolist(), "im": res.u.imag.tolist()},
        "u_oracle": {"re": ref.u_T.real.tolist(), "im": ref.u_T.imag.tolist()},
        "oracle_method": ref.method.value, "relative_error": err,
        "pr_w": pr.pr_w, "pr_u": pr.pr_u, "g": pr.g, "ce0_sq_over_ce_sq": pr.ce0_sq_over_ce_sq,
        "fourier_norm_drift": res.fourier_norm_drift, "seed": cfg.get("seed"),
        "runtime_s": time.perf_counter() - t0,
    }
    harness.write_json(out / "run.json", payload)
    if cfg.get("dump_recovery"):
        st = res.final_state
        rows = []
        for k, p in enumerate(res.domain.grid):
            row = {"k": k, "p_k": float(p), "row_norm": float(np.linalg.norm(st.values[k]))}
            rec = math.exp(p) * st.values[k, :sys_.dim]
            for i, v in enumerate(rec):
                row[f"u{i}_re"] = float(v.real)
                row[f"u{i}_im"] = float(v.imag)
            rows.append(row)
        harness.write_csv(out / "recovery.csv", rows,
                          {"system": sys_.name, "profile": res.profile.spec(),
                           "L": res.domain.L, "R": res.domain.R, "n_p": res.domain.n_p})
    return EXIT_OK


def cmd_study(cfg: dict) -> int:
    study = cfg["study"]
    out = cfg["out"]
    threads = int(cfg.get("threads", 1))
    if study == "complexity":
        beta = float(cfg.get("beta", 1.0))
        rows = harness.complexity_table(float(cfg.get("norm_ratio", 1.0)),
                                        float(cfg.get("alpha_h", 10.0)), float(cfg.get("T", 1.0)),
                                        cfg["eps"], beta)
        table = [r.row() for r in rows]
        prov = {"study": study, "constants": "all set to 1; order of magnitude only",
                "version": __version__}
        for r in table:
            print(f"{r['method']:32s} queries={fmt(r['queries'])} state_prep={fmt(r['state_prep'])}")
        harness.write_csv(out / "complexity.csv", table, prov)
        harness.write_json(out / "complexity.json", {"provenance": prov, "rows": table})
        return EXIT_OK
    if study == "growth":
        family = str(cfg.get("psi", "erf")).split(":")[0]
        if "r_list" in cfg:
            r_list = _int_list(str(cfg["r_list"]))
        else:
            rmax = int(cfg.get("rmax", 40 if family == "erf" else 20))
            if family == "erf":
                r_list = [r for r in (5, 10, 20, 40, 64) if r <= rmax]
            else:
                r_list = list(range(5, rmax + 1, 5))
        rep = harness.growth_study(family, r_list, threads=threads)
        print(f"slope {fmt(rep.slope)}  beta_estimate {fmt(rep.beta_estimate)}  "
              f"robustness {fmt(rep.robustness)}")
    else:
        sys_ = load_system(cfg["system"])
        if study == "converge":
            n_list = _int_list(str(cfg.get("np_list", "64,128,256,512,1024")))
            rep = harness.convergence_study(sys_, cfg["psi"], n_list, cfg["eps"],
                                            average=bool(cfg.get("average")), threads=threads)
            print(f"order {fmt(rep.order)}  pairwise {[round(o, 3) for o in rep.pairwise_orders]}")
        elif study == "mu-scaling":
            eps_list = _float_list(str(cfg.get("eps_list", "1e-2,1e-3,1e-4,1e-5,1e-6,1e-7")))
            rep = harness.mu_scaling_study(sys_, cfg["psi"], eps_list, threads=threads)
            print(f"loglog_slope {fmt(rep.loglog_slope)}  linear_r2 {fmt(rep.linear_r2)}  "
                  f"max mu_max/log(1/eps) {fmt(rep.max_ratio_to_log)}")
        else:
            L_list = _float_list(str(cfg.get("L_list", "4,6,8,10,12,14,16")))
            rep = harness.truncation_check(sys_, cfg["psi"], L_list)
            print(f"rate {fmt(rep.rate)}")
    stem = study.replace("-", "_")
    harness.write_csv(out / f"{stem}.csv", rep.rows(), {**rep.provenance, "study": study})
    harness.write_json(out / f"{stem}.json", harness.report_summary(rep))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_study(cfg)
    except (ConfigError, InvalidSystemError, ProfileError, warp.ConfigurationError,
            FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
