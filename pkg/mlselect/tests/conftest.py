import csv
import subprocess

import pytest

NETWORK_YAML = """
network:
  L: 2
  K: 2
  M: 4
  master_seed: 5
"""


def export_dataset_cli(config, rows, out, dump=None, start=0,
                       teacher="linear-ii-rate", n_init=1, n_iter=1):
    cmd = ["cfbeam", "export-dataset", "--config", str(config),
           "--teacher", teacher, "--n-init", str(n_init),
           "--n-iter", str(n_iter), "--rows", str(rows),
           "--start", str(start), "--out", str(out)]
    if dump:
        cmd += ["--dump", str(dump)]
    subprocess.run(cmd, check=True, capture_output=True, text=True)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """A tiny simulator-exported dataset with its channel dump and config."""
    root = tmp_path_factory.mktemp("corpus")
    config = root / "net.yaml"
    config.write_text(NETWORK_YAML)
    data = root / "data.csv"
    dump = root / "dump.txt"
    export_dataset_cli(config, 40, data, dump=dump)
    return {"config": config, "data": data, "dump": dump}


def read_rows(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        return header, list(reader)
