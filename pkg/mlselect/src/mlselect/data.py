"""Dataset loading and feature standardization.

Datasets are the CSV files exported by the simulator: a ``run_index``
column, per-link feature columns (``pl_l{l}_k{k}``, ``aod_l{l}_k{k}``,
optionally ``gain_l{l}_k{k}``), per-link beam labels (``label_l{l}_k{k}``,
transmitter-major order), and the teacher's achieved ``teacher_sum_rate``.
"""

import csv
import re
from dataclasses import dataclass

import numpy as np

from .errors import DataError

_LABEL_RE = re.compile(r"^label_l(\d+)_k(\d+)$")


@dataclass
class Dataset:
    """Parsed dataset with features and labels as dense arrays."""

    run_index: np.ndarray          # (n,)
    features: np.ndarray           # (n, F)
    labels: np.ndarray             # (n, L*K) ints, transmitter-major
    teacher_sum_rate: np.ndarray   # (n,)
    feature_names: list
    label_names: list
    L: int
    K: int

    @property
    def n_rows(self):
        return self.run_index.size

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def n_labels(self):
        return self.labels.shape[1]


def load_dataset(path, n_beams=None):
    """Read a simulator-exported dataset CSV.

    With ``n_beams`` given, labels are validated to lie in [0, n_beams).
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty dataset") from None
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no data rows")
    if header[0] != "run_index" or header[-1] != "teacher_sum_rate":
        raise DataError(f"{path}: unrecognized dataset header")

    label_cols = [i for i, name in enumerate(header) if _LABEL_RE.match(name)]
    if not label_cols:
        raise DataError(f"{path}: no label columns")
    feature_cols = [i for i in range(1, len(header) - 1) if i not in label_cols]
    lk = [tuple(int(g) for g in _LABEL_RE.match(header[i]).groups())
          for i in label_cols]
    L = max(l for l, _ in lk) + 1
    K = max(k for _, k in lk) + 1
    if len(label_cols) != L * K or sorted(lk) != [(l, k) for l in range(L)
                                                 for k in range(K)]:
        raise DataError(f"{path}: incomplete label grid")

    data = np.array(rows, dtype=object)
    run_index = data[:, 0].astype(int)
    features = data[:, feature_cols].astype(float)
    labels = data[:, label_cols].astype(int)
    teacher = data[:, -1].astype(float)
    if labels.min() < 0:
        raise DataError(f"{path}: negative beam label")
    if n_beams is not None and labels.max() >= n_beams:
        raise DataError(
            f"{path}: beam label {labels.max()} outside [0, {n_beams})")
    return Dataset(run_index=run_index, features=features, labels=labels,
                   teacher_sum_rate=teacher,
                   feature_names=[header[i] for i in feature_cols],
                   label_names=[header[i] for i in label_cols], L=L, K=K)


@dataclass
class Standardizer:
    """Per-feature standardization frozen from the training split."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features):
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        std = np.where(std > 0, std, 1.0)   # constant features pass through
        return cls(mean=mean, std=std)

    def transform(self, features):
        features = np.asarray(features, dtype=float)
        if features.shape[1] != self.mean.size:
            raise DataError(
                f"feature count {features.shape[1]} != {self.mean.size} "
                "seen at fit time")
        return (features - self.mean) / self.std
