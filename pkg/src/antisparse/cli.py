"""Command-line front end: single solves, experiments, dictionary export.

Subcommands: ``solve``, ``exp-detection``, ``exp-opcount``, ``exp-profile``
and ``gen``.  Options can also come from a JSON config file (``--config``);
command-line flags override config values, which override built-in
defaults.  Experiment results are CSV with 17-significant-digit floats;
single solves emit a JSON report.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .dictionaries import (
    VARIANTS,
    DictionaryKind,
    derive_seed,
    generate_dictionary,
    generate_observation,
    read_matrix_csv,
    write_matrix_csv,
)
from .experiments import (
    SOLVER_NAMES,
    ExperimentConfig,
    exp_detection,
    exp_opcount,
    exp_profile,
    make_instance,
    solve_once,
)
from .problem import ProblemInstance, lambda_max

log = logging.getLogger(__name__)


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)):
        return str(value)
    return f"{float(value):.17g}"


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _write_json(path, payload):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="antisparse",
        description="Infinity-norm penalized least squares with safe saturation detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, multi_dict):
        if multi_dict:
            p.add_argument("--dict", nargs="+", choices=VARIANTS, dest="dicts")
        else:
            p.add_argument("--dict", choices=VARIANTS, dest="dict_kind")
        p.add_argument("--m", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--config", help="JSON file with default option values")

    p = sub.add_parser("solve", help="solve one instance and print a JSON report")
    common(p, multi_dict=False)
    p.add_argument("--a-csv", help="dictionary CSV (alternative to --dict/--m/--n/--seed)")
    p.add_argument("--y-csv", help="observation CSV, required with --a-csv")
    p.add_argument("--lambda-ratio", type=float, dest="lambda_ratio")
    p.add_argument("--solver", choices=SOLVER_NAMES)
    p.add_argument("--gap-tol", type=float, dest="gap_tol")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--trace-every", type=int, dest="trace_every")
    p.add_argument("--out")

    for name in ("exp-detection", "exp-opcount", "exp-profile"):
        p = sub.add_parser(name, help=f"run the {name[4:]} experiment, write CSV")
        common(p, multi_dict=True)
        p.add_argument("--trials", type=int)
        p.add_argument("--lambda-ratio", type=float, nargs="+", dest="lambda_ratios")
        p.add_argument("--gap-tol", type=float, dest="gap_tol")
        p.add_argument("--max-iters", type=int, dest="max_iters")
        p.add_argument("--threads", type=int)
        p.add_argument("--out")
        if name == "exp-detection":
            p.add_argument("--r0-grid", type=float, nargs="+", dest="r0_grid")
            p.add_argument("--reference-gap", type=float, dest="reference_gap")
        if name == "exp-profile":
            p.add_argument("--budget", type=float)

    p = sub.add_parser("gen", help="write dictionary and observation CSV files")
    common(p, multi_dict=False)
    p.add_argument("--out", help="output directory for A.csv and y.csv")
    return parser


class _Options:
    """Flag > config-file > default resolution for one parsed command."""

    def __init__(self, args):
        self.args = vars(args)
        self.config = {}
        path = self.args.get("config")
        if path:
            with open(path) as fh:
                self.config = json.load(fh)
            if not isinstance(self.config, dict):
                raise SystemExit(f"{path}: config must be a JSON object")

    def get(self, key, default=None):
        value = self.args.get(key)
        if value is not None:
            return value
        if key in self.config:
            return self.config[key]
        return default

    def require(self, key):
        value = self.get(key)
        if value is None:
            raise SystemExit(f"missing required option --{key.replace('_', '-')}")
        return value


def _cmd_solve(args):
    opt = _Options(args)
    solver = opt.get("solver", "pgs")
    gap_tol = opt.get("gap_tol", 1e-8)
    max_iters = int(opt.get("max_iters", 200_000))
    trace_every = int(opt.get("trace_every", 1))
    ratio = float(opt.require("lambda_ratio"))
    a_csv = opt.get("a_csv")
    if a_csv:
        y_csv = opt.require("y_csv")
        A = read_matrix_csv(a_csv)
        y = read_matrix_csv(y_csv).reshape(-1)
        # Normalize first so the ratio refers to the problem actually solved.
        base = ProblemInstance(A, y, 1.0)
        lam = ratio * lambda_max(base.A, y)
        instance = ProblemInstance(base.A, y, lam, normalize=False)
    else:
        variant = opt.require("dict_kind")
        m, n = int(opt.require("m")), int(opt.require("n"))
        seed = int(opt.get("seed", 0))
        instance = make_instance(
            variant, m, n, ratio, derive_seed(seed, 0), derive_seed(seed, 1)
        )
    report = solve_once(
        instance,
        solver,
        gap_tol=gap_tol,
        max_iters=max_iters,
        lambda_ratio=ratio,
        trace_every=trace_every,
    )
    _write_json(opt.get("out"), report)
    return 0


def _experiment_config(opt, experiment):
    kwargs = dict(
        experiment=experiment,
        m=int(opt.get("m", 50)),
        n=int(opt.get("n", 75)),
        trials=int(opt.get("trials", 20)),
        seed=int(opt.get("seed", 0)),
        threads=int(opt.get("threads", os.cpu_count() or 1)),
        gap_tol=opt.get("gap_tol"),
    )
    dicts = opt.get("dicts")
    if dicts:
        kwargs["dicts"] = tuple(dicts)
    ratios = opt.get("lambda_ratios")
    if ratios:
        kwargs["lambda_ratios"] = tuple(float(r) for r in ratios)
    max_iters = opt.get("max_iters")
    if max_iters is not None:
        kwargs["max_iters"] = int(max_iters)
    if experiment == "detection":
        grid = opt.get("r0_grid")
        if grid:
            kwargs["r0_grid"] = tuple(float(r) for r in grid)
        ref = opt.get("reference_gap")
        if ref is not None:
            kwargs["reference_gap"] = float(ref)
    if experiment == "profile":
        budget = opt.get("budget")
        if budget is not None:
            kwargs["budget"] = float(budget)
    return ExperimentConfig(**kwargs)


def _cmd_experiment(args, experiment, runner):
    opt = _Options(args)
    config = _experiment_config(opt, experiment)
    header, rows = runner(config)
    _write_csv(opt.get("out"), header, rows)
    return 0


def _cmd_gen(args):
    opt = _Options(args)
    variant = opt.require("dict_kind")
    m, n = int(opt.require("m")), int(opt.require("n"))
    seed = int(opt.get("seed", 0))
    out_dir = opt.require("out")
    os.makedirs(out_dir, exist_ok=True)
    A = generate_dictionary(DictionaryKind(variant, derive_seed(seed, 0)), m, n)
    y = generate_observation(derive_seed(seed, 1), m)
    write_matrix_csv(os.path.join(out_dir, "A.csv"), A)
    write_matrix_csv(os.path.join(out_dir, "y.csv"), y.reshape(-1, 1))
    log.info("wrote %s and %s", os.path.join(out_dir, "A.csv"), os.path.join(out_dir, "y.csv"))
    return 0


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "solve":
        return _cmd_solve(args)
    if args.command == "exp-detection":
        return _cmd_experiment(args, "detection", exp_detection)
    if args.command == "exp-opcount":
        return _cmd_experiment(args, "opcount", exp_opcount)
    if args.command == "exp-profile":
        return _cmd_experiment(args, "profile", exp_profile)
    if args.command == "gen":
        return _cmd_gen(args)
    raise SystemExit(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
