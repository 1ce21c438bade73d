"""Model evaluation against the simulator's scoring service.

Predicted (and teacher) beam assignments are written in the assignment
file format understood by the simulator CLI — one line per run:
``run_index`` followed by the L*K beam indices, transmitter-major — and
scored with ``cfbeam score`` against the matching channel dump. Retention
is the ratio of mean achieved sum-rates, predicted over teacher.
"""

import json
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError


def write_assignments(path, run_index, labels):
    with open(path, "w") as f:
        for run, row in zip(run_index, labels):
            f.write(f"{int(run)} " + " ".join(str(int(b)) for b in row) + "\n")


def score_with_cli(config_path, dump_path, assign_path, cfbeam_cmd="cfbeam"):
    """Run the simulator's scoring service; returns records by run_index."""
    proc = subprocess.run(
        [cfbeam_cmd, "score", "--config", str(config_path),
         "--dump", str(dump_path), "--assign", str(assign_path), "--out", "-"],
        capture_output=True, text=True)
    if proc.returncode != 0:
        raise DataError(f"scoring service failed: {proc.stderr.strip()}")
    records = [json.loads(line) for line in proc.stdout.splitlines() if line]
    return {rec["run_index"]: rec for rec in records}


def evaluate(predictor, dataset, config_path, dump_path, cfbeam_cmd="cfbeam",
             workdir=None):
    """Exact-match / per-label accuracy and retained sum-rate fraction."""
    pred = predictor.predict(dataset.features)
    truth = dataset.labels
    report = {
        "rows": int(dataset.n_rows),
        "exact_match_accuracy": float((pred == truth).all(axis=1).mean()),
        "per_label_accuracy": float((pred == truth).mean()),
    }
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        assign = Path(tmp) / "predicted.txt"
        write_assignments(assign, dataset.run_index, pred)
        scored = score_with_cli(config_path, dump_path, assign, cfbeam_cmd)
    missing = [int(r) for r in dataset.run_index if int(r) not in scored]
    if missing:
        raise DataError(
            f"dump rows misaligned with dataset: missing runs {missing[:5]}")
    pred_rates = np.array([scored[int(r)]["sum_rate"]
                           for r in dataset.run_index])
    conflicts = sum(scored[int(r)]["conflict_warning"]
                    for r in dataset.run_index)
    teacher_mean = float(dataset.teacher_sum_rate.mean())
    report.update({
        "mean_predicted_sum_rate": float(pred_rates.mean()),
        "mean_teacher_sum_rate": teacher_mean,
        "retained_sum_rate_fraction": float(pred_rates.mean() / teacher_mean),
        "conflict_rows": int(conflicts),
    })
    return report


def format_report(report):
    lines = ["evaluation report"]
    for key in ("rows", "exact_match_accuracy", "per_label_accuracy",
                "mean_predicted_sum_rate", "mean_teacher_sum_rate",
                "retained_sum_rate_fraction", "conflict_rows"):
        lines.append(f"{key}: {report[key]}")
    return "\n".join(lines) + "\n"
