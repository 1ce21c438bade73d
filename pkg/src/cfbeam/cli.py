"""Command line entry points: run, export-dataset, score, complexity,
list-algorithms."""

import argparse
import sys

from .config import load_config
from .errors import CfBeamError
from .harness import (load_experiment, export_dataset, run_experiment,
                      score_assignments, write_score_records)
from .search import NAMED_ALGORITHMS, complexity_formula, settings_from_name


def _cmd_run(args):
    spec = load_experiment(args.config)
    if args.seed is not None:
        cfg = spec.config
        object.__setattr__(cfg, "master_seed", args.seed)
    if args.runs is not None:
        spec.mc_runs = args.runs
    summaries = run_experiment(spec, results_path=args.out,
                               summary_path=args.summary,
                               workers=args.workers)
    for s in summaries:
        print("%-24s mean sum-rate %.4f  (+/- %.4f, %d runs)" % (
            s["cell"], s["mean_sum_rate"], s["ci95_half_width"], s["runs"]))
    return 0


def _cmd_export(args):
    config = load_config(args.config)
    if args.seed is not None:
        object.__setattr__(config, "master_seed", args.seed)
    settings = settings_from_name(args.teacher, bcc_mode=args.bcc,
                                  n_init=args.n_init, n_iter=args.n_iter,
                                  precoder=args.precoder)
    export_dataset(config, settings, args.rows, args.out,
                   dump_path=args.dump, start_index=args.start,
                   include_gains=args.gains if args.gains else None)
    print(f"wrote {args.rows} rows to {args.out}" +
          (f" and channel dump to {args.dump}" if args.dump else ""))
    return 0


def _cmd_score(args):
    config = load_config(args.config)
    records = score_assignments(config, args.dump, args.assign,
                                precoder=args.precoder)
    if args.out and args.out != "-":
        with open(args.out, "w") as f:
            write_score_records(records, f)
    else:
        write_score_records(records, sys.stdout)
    return 0


def _cmd_complexity(args):
    algs = [args.alg] if args.alg else [
        "linear", "semilinear", "semicentralized", "exhaustive"]
    for alg in algs:
        n = complexity_formula(alg, args.L, args.K, args.B, bcc=args.bcc)
        print(f"{alg}: {n}")
    return 0


def _cmd_list(args):
    for name, kw in NAMED_ALGORITHMS.items():
        print("%-20s algorithm=%s metric=%s" % (name, kw["algorithm"],
                                                kw["metric"]))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="cfbeam",
                                description="mm-wave cell-free beam selection "
                                            "simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a Monte Carlo experiment")
    r.add_argument("--config", required=True, help="experiment YAML file")
    r.add_argument("--out", required=True, help="per-run results CSV")
    r.add_argument("--summary", default=None, help="per-cell summary CSV")
    r.add_argument("--runs", type=int, default=None, help="override mc_runs")
    r.add_argument("--seed", type=int, default=None, help="override master seed")
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=_cmd_run)

    e = sub.add_parser("export-dataset", help="export a teacher-labelled dataset")
    e.add_argument("--config", required=True, help="network YAML file")
    e.add_argument("--teacher", default="linear-ii-rate")
    e.add_argument("--bcc", default="full", choices=("full", "init_only", "off"))
    e.add_argument("--n-init", type=int, default=2)
    e.add_argument("--n-iter", type=int, default=2)
    e.add_argument("--precoder", default="zf", choices=("zf", "mmse"))
    e.add_argument("--rows", type=int, required=True)
    e.add_argument("--start", type=int, default=0,
                   help="first run index (disjoint train/test ranges)")
    e.add_argument("--out", required=True, help="dataset CSV path")
    e.add_argument("--dump", default=None, help="channel dump path")
    e.add_argument("--gains", action="store_true",
                   help="force strongest-path |beta| feature columns")
    e.add_argument("--seed", type=int, default=None, help="override master seed")
    e.set_defaults(func=_cmd_export)

    s = sub.add_parser("score", help="score beam assignments against a dump")
    s.add_argument("--config", required=True, help="network YAML file")
    s.add_argument("--dump", required=True)
    s.add_argument("--assign", required=True)
    s.add_argument("--precoder", default="zf", choices=("zf", "mmse"))
    s.add_argument("--out", default="-", help="JSON-lines output ('-' = stdout)")
    s.set_defaults(func=_cmd_score)

    c = sub.add_parser("complexity", help="closed-form evaluation counts")
    c.add_argument("--L", type=int, required=True)
    c.add_argument("--K", type=int, required=True)
    c.add_argument("--B", type=int, required=True)
    c.add_argument("--alg", default=None)
    c.add_argument("--bcc", action="store_true")
    c.set_defaults(func=_cmd_complexity)

    ls = sub.add_parser("list-algorithms", help="canonical algorithm names")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CfBeamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
