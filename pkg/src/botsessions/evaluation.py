"""ROC/AUC computation, stratified cross-validation, the full-vs-baseline
feature ablation, and the account-score threshold TPR sweep.

Fold assignment depends only on (labels, k, seed), never on features or model
kind, so full and baseline runs of the ablation share folds (paired design).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .features import FeatureSet, project_matrix
from .models import ModelConfig, TrainedModel, predict_proba_batch, train_model

MEAN_ROC_GRID = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True)
class RocCurve:
    """Points ordered from (0,0) to (1,1); fpr and tpr non-decreasing."""

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


def roc_curve(scores, labels) -> RocCurve:
    """ROC with one step per distinct score (descending); score ties are
    grouped into a single, possibly diagonal, segment."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if len(s) != len(y):
        raise DomainError("scores and labels lengths differ")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DomainError("ROC undefined: both classes must be present")
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # indices where the score changes: one ROC point per distinct threshold
    distinct = np.nonzero(np.diff(s_sorted))[0]
    cut = np.concatenate([distinct, [len(s_sorted) - 1]])
    tp = np.cumsum(y_sorted == 1)[cut]
    fp = np.cumsum(y_sorted == 0)[cut]
    fpr = np.concatenate([[0.0], fp / n_neg])
    tpr = np.concatenate([[0.0], tp / n_pos])
    thresholds = np.concatenate([[np.inf], s_sorted[cut]])
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve."""
    return float(np.trapezoid(curve.tpr, curve.fpr))


def auc_score(scores, labels) -> float:
    return auc(roc_curve(scores, labels))


def stratified_kfold(labels, k: int = 10, seed: int = 0) -> list[np.ndarray]:
    """Disjoint index folds with per-fold class proportions within one sample
    of the global proportions. Deterministic given (labels, k, seed)."""
    y = np.asarray(labels)
    if k < 2:
        raise ConfigError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.nonzero(y == cls)[0]
        if len(idx) < k:
            raise DomainError(
                f"class {cls} has {len(idx)} members, fewer than k={k}"
            )
        rng.shuffle(idx)
        for i, sample in enumerate(idx):
            folds[i % k].append(int(sample))
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


@dataclass(frozen=True)
class CvReport:
    model_kind: str
    feature_set: str
    fold_aucs: tuple[float, ...]
    mean_auc: float
    std_auc: float
    mean_roc_fpr: np.ndarray
    mean_roc_tpr: np.ndarray

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "feature_set": self.feature_set,
            "fold_aucs": list(self.fold_aucs),
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "mean_roc": {
                "fpr": self.mean_roc_fpr.tolist(),
                "tpr": self.mean_roc_tpr.tolist(),
            },
        }


def _interp_tpr(curve: RocCurve, grid: np.ndarray) -> np.ndarray:
    # one tpr per distinct fpr: tpr is non-decreasing, so keep the last entry
    fpr = curve.fpr
    tpr = curve.tpr
    keep = np.concatenate([np.diff(fpr) > 0, [True]])
    out = np.interp(grid, fpr[keep], tpr[keep])
    out[0] = 0.0
    out[-1] = 1.0
    return out


def cross_validate(
    X,
    y,
    config: ModelConfig,
    feature_set: FeatureSet = FeatureSet.FULL,
    k: int = 10,
    seed: int = 0,
) -> CvReport:
    """Stratified k-fold CV; per-fold ROC/AUC plus a vertically averaged
    mean ROC on a fixed 101-point FPR grid."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    folds = stratified_kfold(y, k=k, seed=seed)
    fold_aucs = []
    grid_tprs = []
    for fold in folds:
        mask = np.ones(len(y), dtype=bool)
        mask[fold] = False
        model = train_model(X[mask], y[mask], config)
        scores = predict_proba_batch(model, X[fold])
        curve = roc_curve(scores, y[fold])
        fold_aucs.append(auc(curve))
        grid_tprs.append(_interp_tpr(curve, MEAN_ROC_GRID))
    mean_tpr = np.mean(grid_tprs, axis=0)
    return CvReport(
        model_kind=config.kind,
        feature_set=feature_set.value,
        fold_aucs=tuple(fold_aucs),
        mean_auc=float(np.mean(fold_aucs)),
        std_auc=float(np.std(fold_aucs)),
        mean_roc_fpr=MEAN_ROC_GRID.copy(),
        mean_roc_tpr=mean_tpr,
    )


@dataclass(frozen=True)
class AblationResult:
    model_kind: str
    full: CvReport
    baseline: CvReport

    @property
    def delta(self) -> float:
        return self.full.mean_auc - self.baseline.mean_auc


def ablation(
    X_full,
    y,
    configs: list[ModelConfig],
    k: int = 10,
    seed: int = 0,
) -> list[AblationResult]:
    """Paired full-vs-baseline CV: identical fold assignments on both sides."""
    X_full = np.asarray(X_full, dtype=np.float64)
    X_base = project_matrix(X_full, FeatureSet.BASELINE)
    out = []
    for config in configs:
        full = cross_validate(X_full, y, config, FeatureSet.FULL, k=k, seed=seed)
        base = cross_validate(X_base, y, config, FeatureSet.BASELINE, k=k, seed=seed)
        out.append(AblationResult(config.kind, full, base))
    return out


@dataclass(frozen=True)
class SweepPoint:
    theta: float
    n_positive_tweets: int
    tpr: float | None  # None when the positive set is empty


def threshold_sweep_tpr(
    model: TrainedModel,
    X,
    account_scores,
    theta_grid,
    decision_threshold: float = 0.5,
) -> list[SweepPoint]:
    """TPR over tweets whose account score is >= theta, for each theta.

    A tweet is called a bot when the model scores it at or above
    ``decision_threshold``.
    """
    theta_grid = list(theta_grid)
    if not theta_grid:
        raise ConfigError("theta grid must be non-empty")
    X = np.asarray(X, dtype=np.float64)
    acc = np.asarray(account_scores, dtype=np.float64)
    if len(acc) != len(X):
        raise DomainError("one account score per tweet required")
    calls = predict_proba_batch(model, X) >= decision_threshold
    out = []
    for theta in theta_grid:
        positives = acc >= theta
        n_pos = int(positives.sum())
        tpr = float(calls[positives].mean()) if n_pos else None
        out.append(SweepPoint(float(theta), n_pos, tpr))
    return out
