"""Command line entry points: train, evaluate."""

import argparse
import sys

import joblib

from .data import load_dataset
from .errors import MlSelectError
from .evaluate import evaluate, format_report
from .model import MODELS, MlJob, train


def _cmd_train(args):
    dataset = load_dataset(args.data, n_beams=args.beams)
    job = MlJob(model=args.model, n_estimators=args.trees,
                max_depth=args.max_depth, cv_folds=args.cv, seed=args.seed)
    predictor, report = train(job, dataset)
    joblib.dump(predictor, args.out)
    for key, val in report.items():
        print(f"{key}: {val}")
    print(f"saved model to {args.out}")
    return 0


def _cmd_evaluate(args):
    predictor = joblib.load(args.model)
    dataset = load_dataset(args.data)
    report = evaluate(predictor, dataset, args.config, args.dump,
                      cfbeam_cmd=args.cfbeam)
    text = format_report(report)
    if args.report:
        with open(args.report, "w") as f:
            f.write(text)
    print(text, end="")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="mlselect",
                                description="supervised analog beam selection")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a model on an exported dataset")
    t.add_argument("--data", required=True, help="training dataset CSV")
    t.add_argument("--model", default="rft_chain", choices=MODELS)
    t.add_argument("--trees", type=int, default=200)
    t.add_argument("--max-depth", type=int, default=None)
    t.add_argument("--cv", type=int, default=0, help="CV folds (0 = skip)")
    t.add_argument("--beams", type=int, default=None,
                   help="codebook size for label validation")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="model file (joblib)")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("evaluate",
                       help="score predictions through the simulator")
    e.add_argument("--model", required=True, help="trained model file")
    e.add_argument("--data", required=True, help="test dataset CSV")
    e.add_argument("--config", required=True, help="network YAML file")
    e.add_argument("--dump", required=True, help="channel dump for the rows")
    e.add_argument("--report", default=None, help="report output path")
    e.add_argument("--cfbeam", default="cfbeam",
                   help="simulator CLI executable")
    e.set_defaults(func=_cmd_evaluate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MlSelectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
