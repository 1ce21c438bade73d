import numpy as np
import pytest

from mlselect import ConfigError, DataError, MlJob, load_dataset, train
from mlselect.data import Dataset


def _toy_dataset(n=60, n_features=4, n_labels=3, n_classes=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n_features))
    y = rng.integers(0, n_classes, size=(n, n_labels))
    return Dataset(run_index=np.arange(n), features=X, labels=y,
                   teacher_sum_rate=rng.uniform(5, 15, n),
                   feature_names=[f"f{i}" for i in range(n_features)],
                   label_names=[f"label_l{i}_k0" for i in range(n_labels)],
                   L=n_labels, K=1)


class TestJobValidation:
    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            MlJob(model="deep_magic")

    def test_bad_trees(self):
        with pytest.raises(ConfigError):
            MlJob(n_estimators=0)

    def test_bad_folds(self):
        with pytest.raises(ConfigError):
            MlJob(cv_folds=1)

    def test_bad_chain_order(self):
        ds = _toy_dataset()
        with pytest.raises(ConfigError):
            train(MlJob(chain_order=(0, 0, 1), n_estimators=2), ds)


class TestChainStructure:
    def test_stage_input_dimensions(self):
        # stage i of the chain consumes the features plus i previous labels
        ds = _toy_dataset(n_labels=3, n_features=4)
        predictor, _ = train(MlJob(model="rft_chain", n_estimators=2), ds)
        dims = [stage.n_features_in_ for stage in predictor.stages]
        assert dims == [4, 5, 6]

    def test_independent_stage_dimensions(self):
        ds = _toy_dataset(n_labels=3, n_features=4)
        predictor, _ = train(MlJob(model="rft_independent", n_estimators=2), ds)
        assert [s.n_features_in_ for s in predictor.stages] == [4, 4, 4]

    def test_custom_chain_order(self):
        ds = _toy_dataset(n_labels=3)
        predictor, _ = train(MlJob(model="rft_chain", n_estimators=2,
                                   chain_order=(2, 0, 1)), ds)
        np.testing.assert_array_equal(predictor.order, [2, 0, 1])
        pred = predictor.predict(ds.features)
        assert pred.shape == ds.labels.shape


class TestPredictions:
    def test_constant_labels_are_learned_exactly(self):
        ds = _toy_dataset()
        ds.labels[:] = [[2, 0, 3]] * ds.n_rows
        for model in ("rft_chain", "rft_independent"):
            predictor, report = train(MlJob(model=model, n_estimators=5,
                                            cv_folds=5), ds)
            assert report["cv_exact_match"] == 1.0
            np.testing.assert_array_equal(predictor.predict(ds.features),
                                          ds.labels)

    def test_memorizes_separable_training_rows(self):
        # wide forests on a tiny unambiguous dataset reproduce its labels
        ds = _toy_dataset(n=30, seed=3)
        predictor, report = train(MlJob(model="rft_chain", n_estimators=50), ds)
        assert report["train_exact_match"] == 1.0
        np.testing.assert_array_equal(predictor.predict(ds.features),
                                      ds.labels)

    def test_labels_always_in_class_set(self):
        ds = _toy_dataset(n_classes=4, seed=5)
        predictor, _ = train(MlJob(n_estimators=3), ds)
        rng = np.random.default_rng(9)
        pred = predictor.predict(rng.normal(size=(200, ds.n_features)) * 10)
        assert pred.min() >= 0 and pred.max() < 4

    def test_determinism_under_fixed_seed(self):
        ds = _toy_dataset(seed=7)
        Xnew = np.random.default_rng(8).normal(size=(50, ds.n_features))
        runs = []
        for _ in range(2):
            predictor, _ = train(MlJob(n_estimators=10, seed=42), ds)
            runs.append(predictor.predict(Xnew))
        np.testing.assert_array_equal(runs[0], runs[1])

    def test_schema_mismatch_rejected(self):
        ds = _toy_dataset()
        predictor, _ = train(MlJob(n_estimators=2), ds)
        with pytest.raises(DataError):
            predictor.predict(np.ones((3, ds.n_features + 1)))

    def test_standardization_is_fit_on_training_only(self):
        ds = _toy_dataset(seed=11)
        predictor, _ = train(MlJob(n_estimators=2, seed=1), ds)
        np.testing.assert_allclose(predictor.standardizer.mean,
                                   ds.features.mean(axis=0))
        # predicting on shifted data must not change the stored statistics
        predictor.predict(ds.features + 50.0)
        np.testing.assert_allclose(predictor.standardizer.mean,
                                   ds.features.mean(axis=0))
