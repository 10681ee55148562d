"""Tests for ROC/AUC, stratified CV, the ablation, and the TPR sweep."""
import numpy as np
import pytest

from botsessions.errors import ConfigError, DomainError
from botsessions.evaluation import (
    MEAN_ROC_GRID,
    ablation,
    auc,
    auc_score,
    cross_validate,
    roc_curve,
    stratified_kfold,
    threshold_sweep_tpr,
)
from botsessions.features import FEATURE_NAMES, FeatureSet
from botsessions.models import make_config, train_model


def pairwise_rank_auc(scores, labels):
    """Independent oracle: P(score_pos > score_neg) + 0.5*P(tie)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


class TestRocCurve:
    def test_textbook_example(self):
        scores = [0.1, 0.4, 0.35, 0.8]
        labels = [0, 0, 1, 1]
        curve = roc_curve(scores, labels)
        np.testing.assert_allclose(curve.fpr, [0.0, 0.0, 0.5, 0.5, 1.0])
        np.testing.assert_allclose(curve.tpr, [0.0, 0.5, 0.5, 1.0, 1.0])
        assert auc(curve) == pytest.approx(0.75)

    def test_perfect_and_inverted(self):
        assert auc_score([0.1, 0.9], [0, 1]) == 1.0
        assert auc_score([0.9, 0.1], [0, 1]) == 0.0

    def test_all_tied_scores_give_diagonal(self):
        curve = roc_curve([0.5] * 6, [0, 1, 0, 1, 0, 1])
        np.testing.assert_allclose(curve.fpr, [0.0, 1.0])
        np.testing.assert_allclose(curve.tpr, [0.0, 1.0])
        assert auc(curve) == pytest.approx(0.5)

    def test_monotone_endpoints(self):
        rng = np.random.default_rng(1)
        scores = rng.uniform(size=50)
        labels = rng.integers(0, 2, size=50)
        labels[0], labels[1] = 0, 1
        curve = roc_curve(scores, labels)
        assert curve.fpr[0] == 0.0 and curve.tpr[0] == 0.0
        assert curve.fpr[-1] == 1.0 and curve.tpr[-1] == 1.0
        assert np.all(np.diff(curve.fpr) >= 0)
        assert np.all(np.diff(curve.tpr) >= 0)

    def test_single_class_rejected(self):
        with pytest.raises(DomainError):
            roc_curve([0.1, 0.2], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            roc_curve([0.1], [1, 0])

    def test_auc_matches_pairwise_oracle_on_random_sets(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(4, 80))
            # coarse scores force plenty of ties
            scores = rng.integers(0, 8, size=n) / 8.0
            labels = rng.integers(0, 2, size=n)
            labels[:2] = [0, 1]
            assert auc_score(scores, labels) == pytest.approx(
                pairwise_rank_auc(scores, labels), abs=1e-12
            )


class TestStratifiedKfold:
    def test_partition_properties(self):
        rng = np.random.default_rng(3)
        y = rng.integers(0, 2, size=103)
        folds = stratified_kfold(y, k=10, seed=4)
        all_idx = np.concatenate(folds)
        assert len(all_idx) == len(y)
        assert len(np.unique(all_idx)) == len(y)
        # per-fold class counts within one of the even split
        for cls in (0, 1):
            counts = [int((y[f] == cls).sum()) for f in folds]
            assert max(counts) - min(counts) <= 1

    def test_depends_only_on_labels_k_seed(self):
        y = np.array([0, 1] * 20)
        a = stratified_kfold(y, k=5, seed=7)
        b = stratified_kfold(y, k=5, seed=7)
        assert all(np.array_equal(x, z) for x, z in zip(a, b))
        c = stratified_kfold(y, k=5, seed=8)
        assert any(not np.array_equal(x, z) for x, z in zip(a, c))

    def test_too_small_class_rejected(self):
        with pytest.raises(DomainError):
            stratified_kfold(np.array([0] * 20 + [1] * 3), k=5)

    def test_bad_k(self):
        with pytest.raises(ConfigError):
            stratified_kfold(np.array([0, 1]), k=1)


class TestCrossValidate:
    def _data(self, leak=True, n=120, seed=5):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 2, size=n)
        X = rng.normal(size=(n, 3))
        if leak:
            X[:, 0] = y  # perfectly informative column
        return X, y

    def test_leaky_feature_reaches_auc_one(self):
        X, y = self._data(leak=True)
        report = cross_validate(X, y, make_config("dt", seed=0), k=5, seed=0)
        assert report.mean_auc == pytest.approx(1.0)
        assert report.fold_aucs == pytest.approx((1.0,) * 5)

    def test_noise_features_stay_near_chance(self):
        X, y = self._data(leak=False, n=300)
        report = cross_validate(X, y, make_config("dt", max_depth=3, seed=0), k=5, seed=0)
        assert 0.3 < report.mean_auc < 0.7

    def test_mean_roc_shape_and_endpoints(self):
        X, y = self._data(leak=True)
        report = cross_validate(X, y, make_config("knn"), k=5, seed=0)
        assert report.mean_roc_fpr.shape == MEAN_ROC_GRID.shape
        assert report.mean_roc_tpr[0] == 0.0
        assert report.mean_roc_tpr[-1] == 1.0
        assert np.all(np.diff(report.mean_roc_tpr) >= -1e-12)

    def test_report_to_dict_is_json_ready(self):
        import json

        X, y = self._data(leak=True, n=60)
        report = cross_validate(X, y, make_config("dt"), k=3, seed=0)
        obj = json.loads(json.dumps(report.to_dict()))
        assert obj["model_kind"] == "decision_tree"
        assert len(obj["fold_aucs"]) == 3
        assert len(obj["mean_roc"]["fpr"]) == len(MEAN_ROC_GRID)


class TestAblation:
    def _matrix(self, n=200, informative_session=True, seed=6):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 2, size=n)
        X = rng.normal(size=(n, len(FEATURE_NAMES)))
        X[:, 3] = y + rng.normal(0, 2.0, size=n)  # weak behavioral signal
        if informative_session:
            X[:, 0] = y + rng.normal(0, 0.3, size=n)  # strong session signal
        return np.abs(X), y

    def test_informative_session_columns_give_positive_delta(self):
        X, y = self._matrix(informative_session=True)
        res = ablation(X, y, [make_config("dt", max_depth=4, seed=0)], k=5, seed=0)[0]
        assert res.delta > 0.05
        assert res.full.feature_set == "full"
        assert res.baseline.feature_set == "baseline"

    def test_uninformative_session_columns_give_small_delta(self):
        X, y = self._matrix(informative_session=False)
        res = ablation(X, y, [make_config("dt", max_depth=4, seed=0)], k=5, seed=0)[0]
        assert abs(res.delta) < 0.1

    def test_one_result_per_config(self):
        X, y = self._matrix()
        configs = [make_config("dt", max_depth=2, seed=0), make_config("knn")]
        results = ablation(X, y, configs, k=3, seed=0)
        assert [r.model_kind for r in results] == ["decision_tree", "knn"]


class TestThresholdSweep:
    def test_counts_and_tpr(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 0, 1, 1])
        model = train_model(X, y, make_config("dt", seed=0))
        acct = [0.1, 0.5, 0.6, 0.9]
        points = threshold_sweep_tpr(model, X, acct, [0.0, 0.55, 0.95])
        assert [p.n_positive_tweets for p in points] == [4, 2, 0]
        # the tree memorizes the data: calls = y
        assert points[0].tpr == pytest.approx(0.5)
        assert points[1].tpr == pytest.approx(1.0)
        assert points[2].tpr is None

    def test_grid_and_score_validation(self):
        X = np.array([[0.0], [1.0]])
        model = train_model(X, np.array([0, 1]), make_config("dt", seed=0))
        with pytest.raises(ConfigError):
            threshold_sweep_tpr(model, X, [0.5, 0.5], [])
        with pytest.raises(DomainError):
            threshold_sweep_tpr(model, X, [0.5], [0.0])
