"""Command-line entry point: ``nagrate {run,sweep,spectral,checkgrad}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .core import grad_fd, hess_vec_fd, relative_error
from .harness import ConfigError, ExperimentConfig, build_objective, figure_configs, run_experiment, sweep, table_csv, write_table
from .spectral import grid_verify_optimality, optimal_params


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.from_dict({})
    return cfg.with_overrides(seed=args.seed, k=args.k, out=args.out, method=args.method)


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    summary = run_experiment(cfg)
    print(summary.to_json())
    if summary.error:
        print(f"error: {summary.error}", file=sys.stderr)
    return 0 if summary.passed else 1


def cmd_sweep(args) -> int:
    try:
        if args.config:
            raw = json.loads(Path(args.config).read_text())
            if isinstance(raw, dict):
                raw = raw.get("configs", [raw])
        else:
            ks = [args.k] if args.k else [100, 1000]
            raw = figure_configs(ks, seed=args.seed or 1)
        configs = []
        for d in raw:
            cfg = ExperimentConfig.from_dict(d).with_overrides(seed=args.seed, out=args.out, method=args.method)
            configs.append(cfg)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    rows = sweep(configs, workers=args.workers)
    if args.out:
        write_table(rows, Path(args.out) / "comparison.csv")
    sys.stdout.write(table_csv(rows))
    return 0 if all(r["status"] == "ok" for r in rows) else 1


def cmd_spectral(args) -> int:
    card = optimal_params(args.mu, args.L)
    out = card.to_dict()
    if args.grid:
        rep = grid_verify_optimality(args.mu, args.L, args.grid, args.grid)
        out["grid"] = {"passed": rep.passed, "grid_min": rep.grid_min, "gap": rep.gap, "worst_violation": rep.worst_violation}
    print(json.dumps(out, indent=2))
    return 0


def cmd_checkgrad(args) -> int:
    """Finite-difference audit of gradient and Hessian-vector products at random points."""
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    obj = build_objective(cfg.objective)
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    ref = obj.reference_minimizer
    worst_g = worst_h = 0.0
    for _ in range(args.points):
        d = rng.standard_normal(obj.dimension)
        x = ref + rng.uniform() * d / np.linalg.norm(d)
        w = rng.standard_normal(obj.dimension)
        worst_g = max(worst_g, relative_error(obj.grad(x), grad_fd(obj, x)))
        worst_h = max(worst_h, relative_error(obj.hess_vec(x, w), hess_vec_fd(obj, x, w, 1e-5)))
    ok = worst_g < args.tol and worst_h < args.tol
    print(json.dumps({"points": args.points, "grad_rel_err": worst_g, "hess_vec_rel_err": worst_h, "passed": ok}, indent=2))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nagrate", description="Accelerated-gradient rate experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--config", type=str, default=None, help="JSON experiment config")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=str, default=None, help="output directory")
        sp.add_argument("--method", type=str, default=None, choices=["NAG", "GD", "FLOW", "nag", "gd", "flow"])
        sp.add_argument("--k", type=int, default=None, help="size of the curved block")

    sp = sub.add_parser("run", help="run one experiment")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run a list of experiments and print the comparison table")
    common(sp)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("spectral", help="print optimal parameters and rates for given mu, L")
    sp.add_argument("--mu", type=float, required=True)
    sp.add_argument("--L", type=float, required=True)
    sp.add_argument("--grid", type=int, default=0, help="also run the brute-force grid check at this size")
    sp.set_defaults(func=cmd_spectral)

    sp = sub.add_parser("checkgrad", help="finite-difference audit of an objective's derivatives")
    common(sp)
    sp.add_argument("--points", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.set_defaults(func=cmd_checkgrad)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
