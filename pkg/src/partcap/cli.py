"""Command-line front end.

    partcap <command> [--config FILE] [--json PATH] [--csv PATH] [--workers K]

Exit codes: 0 success, 2 configuration error, 3 numerically marginal result
(the guard-band recount disagreed).
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict

import numpy as np

from . import branch_enum as be
from . import captivity as cap
from . import genericity as gen
from .cocycle import theta
from .config import ConfigError, ExperimentConfig, load_config
from .parallel import WORKERS_ENV, default_workers
from .report import dumps, envelope, write_csv, write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MARGINAL = 3

COMMANDS = (
    "ncal",
    "weighted",
    "roots",
    "distortion",
    "coboundary",
    "appendix-a",
    "witness",
    "constants",
    "scan",
    "jac",
)


def _config_summary(cfg: ExperimentConfig) -> dict:
    out = {
        "map": cfg.cmap.to_dict(),
        "lambda": cfg.cmap.lam,
        "Lambda": cfg.cmap.Lam,
        "R": cfg.R,
        "n": list(cfg.ns),
        "strategy": cfg.strategy.label(),
    }
    if cfg.tau is not None:
        out["tau"] = cfg.tau.to_dict()
        out["sup_deriv"] = cfg.tau.sup_deriv
    if cfg.family is not None:
        out["family"] = cfg.family.to_dict()
    for key in ("rho", "samples", "seed"):
        if getattr(cfg, key) is not None:
            out[key] = getattr(cfg, key)
    if cfg.extra:
        out["extra"] = cfg.extra
    return out


def _require(cfg: ExperimentConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            raise ConfigError(f"run.{name}: required for this command")


def _tau(cfg: ExperimentConfig):
    if cfg.tau is None:
        raise ConfigError("tau: a 'trig' or 'coboundary' roof function is required for this command")
    return cfg.tau


# -- commands ------------------------------------------------------------


def cmd_ncal(cfg, workers, timings):
    _require(cfg, "R")
    report = cap.captivity_report(
        cfg.cmap, _tau(cfg), cfg.R, cfg.ns, cfg.strategy, workers, timings=timings, seed=cfg.seed
    )
    rows = [asdict(r) for r in report.records]
    results = {
        "records": rows,
        "lower_bound_semantics": "sup over sampled x; exact sup over slopes at each x",
    }
    return results, rows, report.marginal


def cmd_roots(cfg, workers, timings):
    results, rows, marginal = cmd_ncal(cfg, workers, timings)
    fk = cap.fekete_roots({r["n"]: r["ncal"] for r in rows}, exact=False)
    results["fekete"] = {
        "roots": [list(r) for r in fk.roots],
        "violations": [list(v) for v in fk.violations],
        "advisory": fk.advisory,
    }
    return results, rows, marginal


def cmd_weighted(cfg, workers, timings):
    _require(cfg, "R")
    tau = _tau(cfg)
    rows = []
    for n in cfg.ns:
        xs = cfg.strategy.points(n, cfg.cmap.Lam)
        rows.append(
            {
                "n": n,
                "m_intersecting": cap.weighted_m(cfg.cmap, tau, cfg.R, n, cfg.strategy, "intersecting", workers),
                "m_disjoint": cap.weighted_m(cfg.cmap, tau, cfg.R, n, cfg.strategy, "disjoint", workers),
                "n_weighted": cap.weighted_n(cfg.cmap, tau, cfg.R, n, cfg.strategy, workers),
                "distortion_max": float(np.max(be.distortion_sum(cfg.cmap, xs, n))),
                "chi": cap.chi_estimate(cfg.cmap, n, xs),
            }
        )
    return {"records": rows}, rows, False


def cmd_distortion(cfg, workers, timings):
    b_values = cfg.extra.get("b", [0.5, 0.6, 0.7])
    rows = []
    for n in cfg.ns:
        xs = cfg.strategy.points(n, cfg.cmap.Lam)
        sums = be.distortion_sum(cfg.cmap, xs, n)
        C = float(max(sums.max(), 1.0 / sums.min()))
        small = {
            str(b): max(be.count_small_derivative(cfg.cmap, x, n, b) for x in xs[: min(len(xs), 16)])
            for b in b_values
        }
        rows.append(
            {
                "n": n,
                "sum_min": float(sums.min()),
                "sum_max": float(sums.max()),
                "C": C,
                "chi": cap.chi_estimate(cfg.cmap, n, xs),
                "small_derivative_counts": small,
                "small_derivative_bounds": {str(b): C * math.exp(b * n) for b in b_values},
            }
        )
    return {"records": rows}, rows, False


def cmd_coboundary(cfg, workers, timings):
    tau = _tau(cfg)
    periods = int(cfg.extra.get("periods", 8))
    x = float(cfg.extra.get("x", 0.0))
    rows = [{"n": n, "spread": cap.coboundary_spread(cfg.cmap, tau, x, n)} for n in cfg.ns]
    results = {
        "x": x,
        "records": rows,
        "birkhoff_obstruction": be.birkhoff_obstruction(cfg.cmap, tau, periods),
        "max_period": periods,
    }
    return results, rows, False


def cmd_appendix_a(cfg, workers, timings):
    _require(cfg, "R")
    tau = _tau(cfg)
    theta_tau, theta_R = theta(tau, cfg.cmap.lam, cfg.R)
    r_low = float(cfg.extra.get("R_tilde_lower", theta_R - theta_tau))
    r_high = float(cfg.extra.get("R_tilde_upper", theta_R + theta_tau + 0.1))
    if r_low <= 0:
        raise ConfigError("run.R_tilde_lower: must be positive (need theta_R > theta_tau)")
    rows = []
    for n in cfg.ns:
        xs = cfg.strategy.points(n, cfg.cmap.Lam)
        counts, _ = cap.ncal_per_x(cfg.cmap, tau, cfg.R, n, xs, workers)
        lower, _ = cap.ntilde_per_x(cfg.cmap, tau, r_low, n, xs, workers)
        _, upper = cap.ntilde_per_x(cfg.cmap, tau, r_high, n, xs, workers)
        rows.append(
            {
                "n": n,
                "ncal": int(counts.max()),
                "lower": int(lower.max()),
                "upper": int(upper.max()),
                "R_tilde_lower": r_low,
                "R_tilde_upper": r_high,
                "sandwich_holds": bool(np.all(lower <= counts) and np.all(counts <= upper)),
            }
        )
    return {"records": rows, "theta_tau": theta_tau, "theta_R": theta_R}, rows, False


def _constants_dict(pc: gen.ProofConstants, Lam: float | None) -> dict:
    bad = pc.violations(Lam)
    return {
        "rho": pc.rho,
        "N": pc.N,
        "q": pc.q,
        "J": pc.J,
        "intervals": [list(iv) for iv in pc.intervals],
        "epsilon": pc.epsilon,
        "n_groups": pc.n_groups,
        "relaxed": pc.relaxed,
        "valid": not bad,
        "violations": bad,
    }


def cmd_witness(cfg, workers, timings):
    _require(cfg, "R", "rho")
    tau = _tau(cfg)
    pc = gen.proof_constants(cfg.rho, cfg.cmap.lam, cfg.cmap.Lam)
    if "N" in cfg.extra or "q" in cfg.extra:
        pc = pc.with_overrides(cfg.extra.get("N"), cfg.extra.get("q"))
    rows = []
    for n in cfg.ns:
        w = gen.witness_extract(cfg.cmap, tau, cfg.R, n, pc, cfg.strategy)
        if w is None:
            rows.append({"n": n, "found": False})
            continue
        rows.append(
            {
                "n": n,
                "found": True,
                "x": w.x,
                "slope": w.slope,
                "j": w.j,
                "count": w.count,
                "B": [list(b) for b in w.B],
                "sizes": list(w.sizes),
                "Sigma": {"".join(map(str, b)): [list(a) for a in w.Sigma[b]] for b in w.B},
            }
        )
    return {"constants": _constants_dict(pc, None), "records": rows}, rows, False


def cmd_scan(cfg, workers, timings):
    _require(cfg, "rho", "samples", "seed")
    if cfg.family is None:
        raise ConfigError("tau: scan needs a 'family' roof block")
    grid_size = int(cfg.extra.get("scan_grid", cfg.strategy.size))
    rep = gen.parameter_scan(
        cfg.cmap, cfg.family, cfg.R, cfg.rho, cfg.ns, cfg.samples, cfg.seed, grid_size, workers
    )
    threshold = math.exp(cfg.rho)
    rows = []
    for n, k in zip(rep.n_list, rep.positives):
        lo, hi = gen.wilson_interval(k, rep.samples)
        rows.append(
            {
                "n": n,
                "positives": k,
                "samples": rep.samples,
                "fraction": k / rep.samples,
                "ci95": [lo, hi],
                "ci_low": lo,
                "ci_high": hi,
                "threshold": threshold,
            }
        )
    results = {
        "per_n": [{k: r[k] for k in ("n", "positives", "fraction", "ci95")} for r in rows],
        "samples": rep.samples,
        "seed": rep.seed,
        "rho": rep.rho,
        "threshold": threshold,
        "R": rep.R,
        "grid": rep.grid,
    }
    return results, rows, False


def cmd_jac(cfg, workers, timings):
    if cfg.family is None:
        raise ConfigError("tau: jac needs a 'family' roof block")
    _require(cfg, "seed")
    p = int(cfg.extra.get("p", 2))
    trials = int(cfg.extra.get("trials", 20))
    xs = cfg.strategy.points(1, cfg.cmap.Lam)
    rows = [gen.basis_jac_survey(cfg.cmap, cfg.family, n, p, xs, trials, cfg.seed) for n in cfg.ns]
    return {"records": rows}, rows, False


HANDLERS = {
    "ncal": cmd_ncal,
    "weighted": cmd_weighted,
    "roots": cmd_roots,
    "distortion": cmd_distortion,
    "coboundary": cmd_coboundary,
    "appendix-a": cmd_appendix_a,
    "witness": cmd_witness,
    "scan": cmd_scan,
    "jac": cmd_jac,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partcap", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="experiment config file (TOML)")
    parser.add_argument("--json", help="JSON report path (default: config output.json or stdout)")
    parser.add_argument("--csv", help="CSV report path")
    parser.add_argument(
        "--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or CPU count)"
    )
    parser.add_argument("--timings", action="store_true", help="include wall times in the report")
    parser.add_argument("--rho", type=float, help="constants: rho")
    parser.add_argument("--lambda", dest="lam", type=float, help="constants: lower expansion bound")
    parser.add_argument("--Lambda", dest="Lam", type=float, help="constants: upper expansion bound")
    return parser


def _constants_from_args(args, cfg: ExperimentConfig | None):
    rho = args.rho if args.rho is not None else (cfg.rho if cfg else None)
    lam = args.lam if args.lam is not None else (cfg.cmap.lam if cfg else None)
    Lam = args.Lam if args.Lam is not None else (cfg.cmap.Lam if cfg else None)
    if rho is None or lam is None or Lam is None:
        raise ConfigError("constants: need --rho, --lambda and --Lambda (or a config with map and run.rho)")
    if rho <= 0:
        raise ConfigError(f"--rho: must be positive, got {rho!r}")
    if not 1.0 < lam <= Lam:
        raise ConfigError(f"--lambda/--Lambda: need 1 < lambda <= Lambda, got {lam!r}, {Lam!r}")
    pc = gen.proof_constants(rho, lam, Lam)
    return {"rho": rho, "lambda": lam, "Lambda": Lam}, _constants_dict(pc, Lam)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else None
        workers = args.workers if args.workers is not None else (cfg.workers if cfg else None)
        workers = default_workers() if workers is None else workers
        if args.command == "constants":
            config, results = _constants_from_args(args, cfg)
            rows, marginal = [], False
        else:
            if cfg is None:
                raise ConfigError(f"{args.command}: --config is required")
            results, rows, marginal = HANDLERS[args.command](cfg, workers, args.timings)
            config = _config_summary(cfg)
    except ConfigError as exc:
        print(f"partcap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    report = envelope(args.command, config, results, marginal)
    json_path = args.json or (cfg.json_path if cfg else None)
    csv_path = args.csv or (cfg.csv_path if cfg else None)
    if json_path:
        write_json(report, json_path)
    else:
        sys.stdout.write(dumps(report))
    if csv_path:
        if args.command not in ("witness", "constants", "jac"):
            write_csv(args.command, rows, csv_path)
        else:
            print(f"partcap: no CSV layout for {args.command}; skipped", file=sys.stderr)
    if marginal:
        print("partcap: guard-band recount disagreed; result is numerically marginal", file=sys.stderr)
        return EXIT_MARGINAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
