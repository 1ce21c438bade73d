"""Random-forest beam predictors: chained and independent multi-output.

The chained model fits one forest per label in a fixed order; forest i
consumes the standardized features plus the i-1 previous labels (teacher
labels while training, its own decisions while predicting), so its input
dimension is feature_count + (i - 1). The independent model is the
binary-relevance baseline: one forest per label, features only.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.model_selection import KFold

from .data import Standardizer
from .errors import ConfigError, DataError

MODELS = ("rft_chain", "rft_independent")


@dataclass
class MlJob:
    """Training configuration."""

    model: str = "rft_chain"
    n_estimators: int = 200
    max_depth: int = None
    chain_order: tuple = None     # label indices; default natural order
    cv_folds: int = 0             # 0 skips cross-validation
    standardize: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        if self.cv_folds < 0 or self.cv_folds == 1:
            raise ConfigError("cv_folds must be 0 or >= 2")


@dataclass
class BeamPredictor:
    """Fitted multi-output predictor."""

    job: MlJob
    standardizer: Standardizer
    order: np.ndarray
    stages: list = field(default_factory=list)
    n_features: int = 0

    def predict(self, features):
        """One label vector per row, single forward pass through the chain."""
        X = np.asarray(features, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(
                f"expected (n, {self.n_features}) features, got {X.shape}")
        if self.standardizer is not None:
            X = self.standardizer.transform(X)
        n = X.shape[0]
        out = np.zeros((n, self.order.size), dtype=int)
        if self.job.model == "rft_independent":
            for pos, j in enumerate(self.order):
                out[:, j] = self.stages[pos].predict(X)
            return out
        chain = np.empty((n, 0))
        for pos, j in enumerate(self.order):
            out[:, j] = self.stages[pos].predict(np.hstack([X, chain]))
            chain = out[:, self.order[:pos + 1]].astype(float)
        return out


def _forest(job, stage_index):
    return RandomForestClassifier(
        n_estimators=job.n_estimators, max_depth=job.max_depth,
        random_state=job.seed + stage_index, n_jobs=-1)


def _fit(job, X, y):
    n_labels = y.shape[1]
    order = np.arange(n_labels) if job.chain_order is None \
        else np.asarray(job.chain_order, dtype=int)
    if sorted(order.tolist()) != list(range(n_labels)):
        raise ConfigError(
            f"chain_order must be a permutation of 0..{n_labels - 1}")
    std = Standardizer.fit(X) if job.standardize else None
    Xs = std.transform(X) if std is not None else X
    stages = []
    for pos, j in enumerate(order):
        if job.model == "rft_chain":
            Xin = np.hstack([Xs, y[:, order[:pos]].astype(float)])
        else:
            Xin = Xs
        stages.append(_forest(job, pos).fit(Xin, y[:, j]))
    return BeamPredictor(job=job, standardizer=std, order=order,
                         stages=stages, n_features=X.shape[1])


def train(job, dataset):
    """Fit the configured model; returns (predictor, report).

    The report holds training-set accuracies and, when ``cv_folds`` >= 2,
    cross-validated exact-match and per-label accuracies with the
    standardizer refit inside each fold (no test leakage).
    """
    X, y = dataset.features, dataset.labels
    predictor = _fit(job, X, y)
    pred = predictor.predict(X)
    report = {
        "model": job.model,
        "train_exact_match": float((pred == y).all(axis=1).mean()),
        "train_label_accuracy": float((pred == y).mean()),
    }
    if job.cv_folds >= 2:
        exact, per_label = [], []
        kf = KFold(n_splits=job.cv_folds, shuffle=True, random_state=job.seed)
        for tr, va in kf.split(X):
            p = _fit(job, X[tr], y[tr]).predict(X[va])
            exact.append((p == y[va]).all(axis=1).mean())
            per_label.append((p == y[va]).mean())
        report["cv_exact_match"] = float(np.mean(exact))
        report["cv_label_accuracy"] = float(np.mean(per_label))
    return predictor, report
