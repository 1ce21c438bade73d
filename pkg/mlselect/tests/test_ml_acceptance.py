"""Full-scale acceptance: sum-rate retention and scoring round-trip.

The teacher datasets (30k train / 10k test on the reference network, plus
a minimal-codebook configuration) take several minutes to generate on one
core, so they are cached under MLSELECT_TEST_CACHE (default
~/.cache/mlselect-tests) and reused across runs. Delete the directory to
force regeneration.
"""

import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

from mlselect import MlJob, evaluate, load_dataset, train
from mlselect.evaluate import score_with_cli, write_assignments

CACHE = Path(os.environ.get("MLSELECT_TEST_CACHE",
                            os.path.expanduser("~/.cache/mlselect-tests")))

REFERENCE = {
    "config": "net_l3k2m8.yaml",
    "network": "network:\n  L: 3\n  K: 2\n  M: 8\n  master_seed: 0\n",
    "train": ("train_l3k2m8.csv", 30000, 0),
    "test": ("test_l3k2m8.csv", 10000, 30000, "test_l3k2m8_dump.txt"),
}
MINIMAL = {   # codebook size equals the user count: locked label patterns
    "config": "net_l3k2m2.yaml",
    "network": "network:\n  L: 3\n  K: 2\n  M: 2\n  master_seed: 0\n",
    "train": ("train_l3k2m2.csv", 6000, 0),
    "test": ("test_l3k2m2.csv", 2000, 6000, "test_l3k2m2_dump.txt"),
}


def _export(config, rows, start, out, dump=None):
    cmd = ["cfbeam", "export-dataset", "--config", str(config),
           "--teacher", "linear-ii-rate", "--n-init", "2", "--n-iter", "2",
           "--rows", str(rows), "--start", str(start), "--out", str(out)]
    if dump:
        cmd += ["--dump", str(dump)]
    subprocess.run(cmd, check=True, capture_output=True, text=True)


def _materialize(spec):
    CACHE.mkdir(parents=True, exist_ok=True)
    config = CACHE / spec["config"]
    if not config.exists():
        config.write_text(spec["network"])
    name, rows, start = spec["train"]
    train_csv = CACHE / name
    if not train_csv.exists():
        _export(config, rows, start, train_csv)
    name, rows, start, dump = spec["test"]
    test_csv, dump_path = CACHE / name, CACHE / dump
    if not (test_csv.exists() and dump_path.exists()):
        _export(config, rows, start, test_csv, dump=dump_path)
    return config, train_csv, test_csv, dump_path


@pytest.fixture(scope="module")
def reference_corpus():
    return _materialize(REFERENCE)


def test_criterion_9_sum_rate_retention(reference_corpus):
    config, train_csv, test_csv, dump = reference_corpus
    train_ds = load_dataset(train_csv, n_beams=8)
    test_ds = load_dataset(test_csv, n_beams=8)
    retention = {}
    for model in ("rft_chain", "rft_independent"):
        predictor, _ = train(MlJob(model=model, n_estimators=200, seed=0),
                             train_ds)
        rep = evaluate(predictor, test_ds, config, dump)
        retention[model] = rep["retained_sum_rate_fraction"]

    config2, train2, test2, dump2 = _materialize(MINIMAL)
    train2_ds = load_dataset(train2, n_beams=2)
    test2_ds = load_dataset(test2, n_beams=2)
    predictor, _ = train(MlJob(model="rft_chain", n_estimators=200, seed=0),
                         train2_ds)
    minimal = evaluate(predictor, test2_ds, config2,
                       dump2)["retained_sum_rate_fraction"]

    ok = (retention["rft_chain"] >= 0.95
          and retention["rft_chain"] > retention["rft_independent"]
          and minimal >= 0.99)
    print(f"criterion 9 retention: {'PASS' if ok else 'FAIL'} "
          f"(chain {retention['rft_chain']:.4f} >= 0.95, "
          f"independent {retention['rft_independent']:.4f}, "
          f"minimal-codebook {minimal:.4f} >= 0.99)")
    assert ok


def test_criterion_10_round_trip_fidelity(reference_corpus, tmp_path):
    config, _, test_csv, dump = reference_corpus
    ds = load_dataset(test_csv)
    n = 1000
    assign = tmp_path / "teacher.txt"
    write_assignments(assign, ds.run_index[:n], ds.labels[:n])
    scored = score_with_cli(config, dump, assign)
    rates = np.array([scored[int(r)]["sum_rate"] for r in ds.run_index[:n]])
    err = np.abs(rates - ds.teacher_sum_rate[:n]).max()
    ok = err < 1e-9
    print(f"criterion 10 round trip: {'PASS' if ok else 'FAIL'} "
          f"(max |scored - recorded| = {err:.2e} over {n} rows)")
    assert ok
