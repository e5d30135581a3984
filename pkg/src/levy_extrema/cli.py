"""Command-line front end: ``levy-extrema {factorize,invert,verify} --config run.yaml``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification thresholds exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, LevyExtremaError, ModelError
from .factorization import FactorPair
from .inversion import DistributionTable, invert_pair
from .levy_core import rhs_g, winding_number
from .mc_oracle import bias_allowance, empirical_cf, ks_distance, simulate_extrema
from .solver import cross_check, factorize_model

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
PHI_SCHEMA = "levy-extrema phi/1"
DIST_SCHEMA = "levy-extrema distribution/1"
VERIFY_SCHEMA = "levy-extrema verify/1"


def _fmt(v) -> str:
    return repr(float(v))


def _write_table(path: Path, header_lines, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in zip(*rows):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------- #
# Steps
# --------------------------------------------------------------------------- #

def _factorize(cfg: RunConfig) -> tuple[FactorPair, dict]:
    pair = factorize_model(cfg.model, cfg.kill, cfg.grid, cfg.method, pade_order=cfg.pade_order,
                           pade_max_error=cfg.pade_max_error, n_terms=cfg.n_terms)
    g = rhs_g(cfg.model, cfg.kill, pair.grid.nodes)
    report = {
        "method_requested": cfg.method,
        "method": pair.method,
        "grid": {"omega": pair.grid.halfwidth, "n_points": pair.grid.n_points},
        "winding_number": winding_number(g),
        "max_residual": pair.max_residual(),
        "certified_error": pair.error_estimate,
        "hermitian_defect": pair.hermitian_defect(),
        "max_modulus": pair.max_modulus(),
    }
    if pair.info:
        report["info"] = {k: v for k, v in pair.info.items()}
    if pair.method != "hilbert":
        try:
            ref = factorize_model(cfg.model, cfg.kill, cfg.grid, "hilbert")
            report["cross_check"] = {"against": "hilbert", "window": cfg.verify_window,
                                     "sup_difference": cross_check(ref, pair, cfg.verify_window)}
        except LevyExtremaError as exc:
            report["cross_check"] = {"against": "hilbert", "error": type(exc).__name__}
    return pair, report


def _write_phi(out: Path, pair: FactorPair) -> None:
    x = pair.grid.nodes
    res = pair.residual()
    _write_table(out / "phi.csv", [PHI_SCHEMA, f"method={pair.method}"],
                 ["omega", "re_phi_plus", "im_phi_plus", "re_phi_minus", "im_phi_minus",
                  "re_g", "im_g", "residual"],
                 [x, pair.phi_plus.real, pair.phi_plus.imag, pair.phi_minus.real,
                  pair.phi_minus.imag, pair.g.real, pair.g.imag, res])


def _write_dist(path: Path, table: DistributionTable) -> None:
    dens = table.density if table.density is not None else np.full(table.x.size, np.nan)
    _write_table(path, [DIST_SCHEMA, f"side={table.side}", f"atom_at_zero={_fmt(table.atom_at_zero)}",
                        f"projection_correction={_fmt(table.projection_correction)}"],
                 ["x", "cdf", "density"], [table.x, table.cdf, dens])


def _plot(out: Path, sup: DistributionTable, inf: DistributionTable) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "levy-extrema"
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for t, label in ((sup, "M_q"), (inf, "I_q")):
        axes[0].plot(t.x, t.cdf, label=label)
        axes[1].plot(t.x, t.density, label=label)
    axes[0].set_title("cdf")
    axes[1].set_title("density (continuous part)")
    for ax in axes:
        ax.set_xlabel("x")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out / "distributions.svg", format="svg", metadata={"Date": None})
    plt.close(fig)


def _invert(cfg: RunConfig, pair: FactorPair):
    return invert_pair(pair, cfg.inversion.x_max, cfg.inversion.n_x)


# --------------------------------------------------------------------------- #
# Commands
# --------------------------------------------------------------------------- #

def cmd_factorize(cfg: RunConfig) -> int:
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    pair, report = _factorize(cfg)
    _write_phi(out, pair)
    _write_json(out / "report.json", report)
    print(f"factorize: method={pair.method} max_residual={report['max_residual']:.3e} -> {out}")
    return EXIT_OK


def cmd_invert(cfg: RunConfig) -> int:
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    pair, report = _factorize(cfg)
    sup, inf = _invert(cfg, pair)
    _write_dist(out / "dist_sup.csv", sup)
    _write_dist(out / "dist_inf.csv", inf)
    report["atoms"] = {"sup": sup.atom_at_zero, "inf": inf.atom_at_zero}
    report["projection_correction"] = {"sup": sup.projection_correction,
                                       "inf": inf.projection_correction}
    _write_json(out / "report.json", report)
    if cfg.inversion.plots:
        _plot(out, sup, inf)
    print(f"invert: P(M_q=0)={sup.atom_at_zero:.4f} P(I_q=0)={inf.atom_at_zero:.4f} -> {out}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.mc is None:
        raise ConfigError("mc: verify needs an mc section with a seed")
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    pair, report = _factorize(cfg)
    sup, inf = _invert(cfg, pair)
    # keep the analytic side of the comparison next to the verdict
    _write_phi(out, pair)
    _write_dist(out / "dist_sup.csv", sup)
    _write_dist(out / "dist_inf.csv", inf)
    if cfg.inversion.plots:
        _plot(out, sup, inf)
    sample = simulate_extrema(cfg.model, cfg.kill, cfg.mc)
    if cfg.export_samples:
        sample.to_csv(out / "samples.csv")

    x = pair.grid.nodes
    sel = np.abs(x) <= cfg.verify_window
    w = x[sel]
    analytic = (pair.phi_plus * pair.phi_minus)[sel]
    cf_m, cf_i = empirical_cf(sample.sup, w), empirical_cf(sample.inf, w)
    cf_x = empirical_cf(sample.terminal, w)
    dev = np.abs(analytic - cf_x)
    _write_table(out / "verify.csv", [VERIFY_SCHEMA, f"n_paths={cfg.mc.n_paths}", f"seed={cfg.mc.seed}"],
                 ["omega", "re_analytic", "im_analytic", "re_empirical", "im_empirical", "deviation"],
                 [w, analytic.real, analytic.imag, cf_x.real, cf_x.imag, dev])

    n = sample.n_paths
    allowance = bias_allowance(cfg.model, cfg.mc.dt)
    tol = cfg.tolerances
    prod_tol = tol["product"] if tol["product"] is not None else 5.0 / math.sqrt(n) + allowance
    ks_tol = tol["ks"]
    summary = {
        "n_paths": n,
        "seed": cfg.mc.seed,
        "dt": cfg.mc.dt,
        "ks_sup": ks_distance(sample.sup, sup.cdf_at, sup.cdf_left),
        "ks_inf": ks_distance(sample.inf, inf.cdf_at, inf.cdf_left),
        "product_deviation": float(np.max(np.abs(cf_m * cf_i - cf_x))),
        "analytic_deviation": float(np.max(dev)),
        "ordering_violations": sample.ordering_violations(),
        "thresholds": {"ks": ks_tol, "product": prod_tol},
    }
    checks = {
        "ks_sup": ks_tol is None or summary["ks_sup"] < ks_tol,
        "ks_inf": ks_tol is None or summary["ks_inf"] < ks_tol,
        "product": summary["product_deviation"] < prod_tol,
        "analytic": summary["analytic_deviation"] < prod_tol,
        "ordering": summary["ordering_violations"] == 0,
    }
    summary["checks"] = checks
    summary["passed"] = all(checks.values())
    report["verify"] = summary
    _write_json(out / "report.json", report)
    for k, ok in checks.items():
        print(f"verify {k}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if summary["passed"] else EXIT_VERIFY


COMMANDS = {"factorize": cmd_factorize, "invert": cmd_invert, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levy-extrema",
                                description="Wiener-Hopf factors and extrema laws of killed Levy processes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    p.add_argument("--method", help="auto | hilbert | carlemann | pade | kuznetsov-product")
    p.add_argument("--omega", type=float, metavar="MAX", help="grid half-width")
    p.add_argument("--n-points", type=int, metavar="N", help="grid intervals (power of two)")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--n-paths", type=int, metavar="N")
    p.add_argument("--dt", type=float, metavar="F")
    p.add_argument("--workers", type=int, metavar="N", help="Monte Carlo worker threads")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"out": args.out, "method": args.method, "omega": args.omega,
                 "n_points": args.n_points, "seed": args.seed, "n_paths": args.n_paths,
                 "dt": args.dt, "n_workers": args.workers}
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except (ConfigError, ModelError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LevyExtremaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
