"""Command-line entry points.

Subcommands: simulate-paths, verify-jump-budget, verify-coverage, check <name>,
report, plot.  Exit codes: 0 pass, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiment, plots
from .errors import ConfigError, ErgosumError
from .experiment import CHECK_NAMES, ExperimentConfig, Report
from .paths import CadlagStep


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig()
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.n_min is not None:
        cfg.n_min = args.n_min
    if args.n_max is not None:
        cfg.n_max = args.n_max
    if cfg.n_min < 4 or cfg.n_max < cfg.n_min:
        raise ConfigError("need 4 <= n_min <= n_max")
    return cfg


def _report_path(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, "report.json")


def _append_entry(cfg: ExperimentConfig, result) -> Report:
    path = _report_path(cfg)
    rep = Report(cfg.config_hash())
    if os.path.exists(path):
        with open(path) as f:
            payload = json.load(f)
        if payload.get("config_hash") == cfg.config_hash():
            for e in payload.get("entries", []):
                rep.add(experiment.CheckResult(**e))
    rep.add(result)
    rep.write(path)
    return rep


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="ergosum",
                                description="heavy-tailed ergodic-sum experiments")
    p.add_argument("--config", type=str, default=None, help="config file path")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--n-min", type=int, default=None, dest="n_min",
                   help="smallest dyadic exponent")
    p.add_argument("--n-max", type=int, default=None, dest="n_max",
                   help="largest dyadic exponent")
    sub = p.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("simulate-paths", help="write path bundles as CSV + index")
    sp.add_argument("--dump-orbits", action="store_true")

    sub.add_parser("verify-jump-budget", help="exceedance-count budget across the ladder")

    vc = sub.add_parser("verify-coverage", help="J1 proximity to a target step function")
    vc.add_argument("--target-jumps", type=str, default="0.5:1.0",
                    help="comma list of time:size jump pairs, e.g. 0.3:1,0.7:0.5")
    vc.add_argument("--tol", type=float, default=0.3)

    ck = sub.add_parser("check", help="run one named check (default: the config's list)")
    ck.add_argument("name", nargs="?", choices=CHECK_NAMES, default=None)

    sub.add_parser("report", help="print the accumulated report")
    sub.add_parser("plot", help="emit SVG figures for the accumulated report")

    try:
        args = p.parse_args(argv)
        cfg = _load_config(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2

    try:
        if args.cmd == "simulate-paths":
            index = experiment.run_simulate_paths(cfg, cfg.out, args.dump_orbits)
            print(f"wrote {len(index['paths'])} path bundles to {cfg.out}")
            return 0
        if args.cmd == "verify-jump-budget":
            res = experiment.run_verify_jump_budget(
                cfg, args.threads, checkpoint_dir=os.path.join(cfg.out, "checkpoints"))
            _append_entry(cfg, res)
            print(f"jump budget: {'pass' if res.passed else 'FAIL'} "
                  f"(final fraction {res.stats['frac_over_budget'][-1]:.4f})")
            return 0 if res.passed else 1
        if args.cmd == "verify-coverage":
            jumps = []
            for tok in args.target_jumps.split(","):
                t, c = tok.split(":")
                jumps.append((float(t), float(c)))
            target = CadlagStep.from_jumps([t for t, _ in jumps], [c for _, c in jumps]) \
                if jumps else CadlagStep.constant(0.0)
            res = experiment.run_verify_coverage(cfg, target, tol=args.tol,
                                                 threads=args.threads)
            _append_entry(cfg, res)
            freq = res.stats["hit_frequency"]
            print(f"coverage: ladder hit frequencies {np.round(freq, 4).tolist()}")
            return 0
        if args.cmd == "check":
            names = [args.name] if args.name else list(cfg.checks)
            if not names:
                print("no check named and the config check list is empty",
                      file=sys.stderr)
                return 2
            all_ok = True
            for name in names:
                res = experiment.run_check(cfg, name, args.threads,
                                           checkpoint_dir=os.path.join(cfg.out, "checkpoints"))
                _append_entry(cfg, res)
                print(f"check {name}: {'pass' if res.passed else 'FAIL'}")
                all_ok &= res.passed
            return 0 if all_ok else 1
        if args.cmd == "report":
            path = _report_path(cfg)
            if not os.path.exists(path):
                print("no report yet", file=sys.stderr)
                return 2
            with open(path) as f:
                print(f.read())
            return 0
        if args.cmd == "plot":
            path = _report_path(cfg)
            if not os.path.exists(path):
                print("no report to plot; exit 0 for empty check list")
                return 0
            with open(path) as f:
                payload = json.load(f)
            rep = Report(payload["config_hash"])
            for e in payload.get("entries", []):
                rep.add(experiment.CheckResult(**e))
            files = plots.emit_plots(rep, cfg.out)
            print(f"wrote {len(files)} figures to {cfg.out}")
            return 0
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except ErgosumError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
