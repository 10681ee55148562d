"""From-scratch binary classifiers: CART decision tree, random forest,
extremely randomized trees, discrete AdaBoost over stumps, and kNN.

All models expose a probability score in [0,1] for ROC analysis and are
deterministic given (X, y, config): per-estimator rng streams are derived
from the seed by estimator index, so training order never matters.

Split search runs on a per-column integer encoding (codes into the sorted
unique values), so candidate thresholds are exact midpoints between
consecutive distinct observed values and per-node work is two bincounts per
candidate feature.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, ValidationError

KIND_DECISION_TREE = "decision_tree"
KIND_RANDOM_FOREST = "random_forest"
KIND_EXTRA_TREES = "extra_trees"
KIND_ADABOOST = "adaboost"
KIND_KNN = "knn"

KIND_ALIASES = {
    "dt": KIND_DECISION_TREE,
    "rf": KIND_RANDOM_FOREST,
    "et": KIND_EXTRA_TREES,
    "ab": KIND_ADABOOST,
    "knn": KIND_KNN,
}

# alpha assigned to a perfect round instead of an infinite weight
ALPHA_CAP = math.log(1e9)

MODEL_FORMAT_VERSION = 1

_MIN_DECREASE = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    n_estimators: int = 1
    max_depth: int | None = None
    min_samples_split: int = 2
    features_per_split: str = "all"  # "all" | "sqrt"
    bootstrap: bool = False
    learning_rate: float = 1.0
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (
            KIND_DECISION_TREE,
            KIND_RANDOM_FOREST,
            KIND_EXTRA_TREES,
            KIND_ADABOOST,
            KIND_KNN,
        ):
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1 when set")
        if self.min_samples_split < 2:
            raise ConfigError("min_samples_split must be >= 2")
        if self.features_per_split not in ("all", "sqrt"):
            raise ConfigError("features_per_split must be 'all' or 'sqrt'")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.k_neighbors < 1:
            raise ConfigError("k_neighbors must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


def make_config(kind: str, **overrides) -> ModelConfig:
    """Config with per-kind defaults: 100 trees with sqrt features for the
    forests, 50 depth-1 stumps for AdaBoost, k=5 for kNN."""
    kind = KIND_ALIASES.get(kind, kind)
    defaults: dict = {"kind": kind}
    if kind == KIND_RANDOM_FOREST:
        defaults.update(n_estimators=100, features_per_split="sqrt", bootstrap=True)
    elif kind == KIND_EXTRA_TREES:
        defaults.update(n_estimators=100, features_per_split="sqrt", bootstrap=False)
    elif kind == KIND_ADABOOST:
        defaults.update(n_estimators=50, max_depth=1)
    defaults.update(overrides)
    return ModelConfig(**defaults)


def gini(counts: tuple[float, float]) -> float:
    """Binary Gini impurity of a class-count pair, in [0, 0.5]."""
    c0, c1 = counts
    if c0 < 0 or c1 < 0:
        raise DomainError("class counts must be non-negative")
    total = c0 + c1
    if total == 0:
        raise DomainError("gini of an empty node is undefined")
    p0 = c0 / total
    p1 = c1 / total
    return 1.0 - p0 * p0 - p1 * p1


class _Encoded:
    """Per-column codes into the sorted unique values of a matrix."""

    __slots__ = ("values", "codes", "n_features")

    def __init__(self, X: np.ndarray):
        X = np.asarray(X, dtype=np.float64)
        self.n_features = X.shape[1]
        self.values: list[np.ndarray] = []
        cols = []
        for j in range(X.shape[1]):
            vals, inv = np.unique(X[:, j], return_inverse=True)
            self.values.append(vals)
            cols.append(inv.astype(np.int32))
        if cols:
            self.codes = np.stack(cols, axis=1)
        else:
            self.codes = np.empty((X.shape[0], 0), dtype=np.int32)


def _node_split(
    enc: _Encoded,
    y: np.ndarray,
    w: np.ndarray,
    idx: np.ndarray,
    feats: np.ndarray,
    extra_random: bool,
    rng: np.random.Generator | None,
):
    """Best (feature, threshold) for one node, or None without positive gain.

    Exhaustive mode scans every midpoint between consecutive distinct values;
    extra-random mode draws one uniform threshold per candidate feature in
    [min, max). Ties break toward the lowest feature index, then the lowest
    threshold (features ascending, thresholds ascending, strict improvement).
    """
    wi = w[idx]
    wy = wi * y[idx]
    total_w = wi.sum()
    total_p = wy.sum()
    if total_w <= 0:
        return None
    parent = 1.0 - (total_p / total_w) ** 2 - ((total_w - total_p) / total_w) ** 2
    best = None  # (decrease, feature, code_cut, threshold)
    for f in feats:
        c = enc.codes[idx, f]
        vals = enc.values[f]
        tot = np.bincount(c, weights=wi, minlength=len(vals))
        pos = np.bincount(c, weights=wy, minlength=len(vals))
        present = np.nonzero(tot)[0]
        if len(present) < 2:
            continue
        t_p = tot[present]
        p_p = pos[present]
        if extra_random:
            lo = vals[present[0]]
            hi = vals[present[-1]]
            thr = float(rng.uniform(lo, hi))
            cut = int(np.searchsorted(vals[present], thr, side="right")) - 1
            cut = min(max(cut, 0), len(present) - 2)
            tl = float(t_p[: cut + 1].sum())
            pl = float(p_p[: cut + 1].sum())
            cuts = np.array([cut])
            tls = np.array([tl])
            pls = np.array([pl])
            thresholds = np.array([thr])
        else:
            tls = np.cumsum(t_p)[:-1]
            pls = np.cumsum(p_p)[:-1]
            cuts = np.arange(len(present) - 1)
            thresholds = (vals[present[:-1]] + vals[present[1:]]) / 2.0
        trs = total_w - tls
        prs = total_p - pls
        with np.errstate(invalid="ignore", divide="ignore"):
            gl = 1.0 - (pls / tls) ** 2 - ((tls - pls) / tls) ** 2
            gr = 1.0 - (prs / trs) ** 2 - ((trs - prs) / trs) ** 2
        dec = parent - (tls * gl + trs * gr) / total_w
        j = int(np.argmax(dec))
        if dec[j] > _MIN_DECREASE and (best is None or dec[j] > best[0]):
            best = (float(dec[j]), int(f), int(present[cuts[j]]), float(thresholds[j]))
    if best is None:
        return None
    decrease, feature, code_cut, threshold = best
    return feature, code_cut, threshold, decrease


def best_split(
    X,
    y,
    candidate_features: Sequence[int] | None = None,
    rng: np.random.Generator | None = None,
    sample_weight=None,
    extra_random: bool = False,
):
    """Public split search over a full sample.

    Returns (feature_index, threshold, impurity_decrease) or None.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(X) < 2:
        raise DomainError("best_split needs >= 2 samples")
    enc = _Encoded(X)
    w = (
        np.ones(len(X), dtype=np.float64)
        if sample_weight is None
        else np.asarray(sample_weight, dtype=np.float64)
    )
    feats = (
        np.arange(enc.n_features)
        if candidate_features is None
        else np.sort(np.asarray(list(candidate_features), dtype=np.int64))
    )
    res = _node_split(
        enc, y.astype(np.float64), w, np.arange(len(X)), feats, extra_random, rng
    )
    if res is None:
        return None
    feature, _, threshold, decrease = res
    return feature, threshold, decrease


@dataclass
class Tree:
    """Flat CART tree; feature == -1 marks a leaf. Internal nodes route a
    sample left iff x[feature] <= threshold."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    count0: np.ndarray
    count1: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        while True:
            f = self.feature[node]
            active = np.nonzero(f >= 0)[0]
            if len(active) == 0:
                return node
            cur = node[active]
            go_left = X[active, f[active]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        leaf = self.apply(X)
        c0 = self.count0[leaf]
        c1 = self.count1[leaf]
        return c1 / (c0 + c1)

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        leaf = self.apply(X)
        return (self.count1[leaf] > self.count0[leaf]).astype(np.int64)


def _grow_tree(
    enc: _Encoded,
    y: np.ndarray,
    w: np.ndarray,
    root_idx: np.ndarray,
    config: ModelConfig,
    rng: np.random.Generator | None,
    extra_random: bool,
) -> Tree:
    k = enc.n_features
    if config.features_per_split == "sqrt":
        n_candidates = max(1, int(math.isqrt(k)))
    else:
        n_candidates = k
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    count0: list[float] = []
    count1: list[float] = []

    # stack entries: (idx, depth, parent_slot, is_left); DFS with left first
    stack: list[tuple[np.ndarray, int, int, bool]] = [(root_idx, 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = node_id
            else:
                right[parent] = node_id
        wi = w[idx]
        n1 = float(wi[y[idx] == 1].sum())
        n0 = float(wi.sum()) - n1
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        count0.append(n0)
        count1.append(n1)

        if (
            n0 <= 0.0
            or n1 <= 0.0
            or len(idx) < config.min_samples_split
            or (config.max_depth is not None and depth >= config.max_depth)
        ):
            continue
        if n_candidates < k:
            feats = np.sort(rng.choice(k, size=n_candidates, replace=False))
        else:
            feats = np.arange(k)
        res = _node_split(enc, y, w, idx, feats, extra_random, rng)
        if res is None:
            continue
        f, code_cut, thr, _ = res
        mask = enc.codes[idx, f] <= code_cut
        feature[node_id] = f
        threshold[node_id] = thr
        # push right first so the left child is processed (and numbered) next
        stack.append((idx[~mask], depth + 1, node_id, False))
        stack.append((idx[mask], depth + 1, node_id, True))
    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        count0=np.array(count0, dtype=np.float64),
        count1=np.array(count1, dtype=np.float64),
    )


@dataclass
class TrainedModel:
    """Immutable bundle of a config plus kind-specific parameters."""

    config: ModelConfig
    n_features: int
    prior: float
    trees: list[Tree] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    round_errors: list[float] = field(default_factory=list)
    knn_mean: np.ndarray | None = None
    knn_std: np.ndarray | None = None
    knn_X: np.ndarray | None = None
    knn_y: np.ndarray | None = None

    @property
    def kind(self) -> str:
        return self.config.kind


def _check_training_input(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) == 0:
        raise DomainError("training input must be a non-empty 2-D matrix")
    if len(X) != len(y):
        raise DomainError("X and y lengths differ")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    return X, y.astype(np.float64)


def _estimator_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def train_tree(X, y, config: ModelConfig | None = None, sample_weight=None) -> TrainedModel:
    """Single CART tree grown to purity unless limited by the config."""
    X, y = _check_training_input(X, y)
    if config is None:
        config = make_config(KIND_DECISION_TREE)
    w = (
        np.ones(len(X), dtype=np.float64)
        if sample_weight is None
        else np.asarray(sample_weight, dtype=np.float64)
    )
    enc = _Encoded(X)
    rng = _estimator_rng(config.seed, 0)
    tree = _grow_tree(enc, y, w, np.arange(len(X)), config, rng, extra_random=False)
    return TrainedModel(
        config=config, n_features=X.shape[1], prior=float(y.mean()), trees=[tree]
    )


def train_forest(X, y, config: ModelConfig) -> TrainedModel:
    """Random forest (bootstrap + sqrt features) or extra trees (full sample,
    sqrt features, random thresholds)."""
    X, y = _check_training_input(X, y)
    extra_random = config.kind == KIND_EXTRA_TREES
    enc = _Encoded(X)
    all_rows = np.arange(len(X))
    trees = []
    for i in range(config.n_estimators):
        rng = _estimator_rng(config.seed, i)
        idx = rng.integers(0, len(X), size=len(X)) if config.bootstrap else all_rows
        trees.append(_grow_tree(enc, y, np.ones(len(X)), idx, config, rng, extra_random))
    return TrainedModel(
        config=config, n_features=X.shape[1], prior=float(y.mean()), trees=trees
    )


def train_adaboost(X, y, config: ModelConfig) -> TrainedModel:
    """Discrete two-class boosting over weighted trees (stumps by default).

    Stops early on a perfect round (alpha capped at ln(1e9)) or when the
    weighted error reaches 0.5.
    """
    X, y = _check_training_input(X, y)
    enc = _Encoded(X)
    all_rows = np.arange(len(X))
    n = len(X)
    w = np.full(n, 1.0 / n)
    trees: list[Tree] = []
    alphas: list[float] = []
    errors: list[float] = []
    y_int = y.astype(np.int64)
    for m in range(config.n_estimators):
        rng = _estimator_rng(config.seed, m)
        tree = _grow_tree(enc, y, w, all_rows, config, rng, extra_random=False)
        pred = tree.predict_class(X)
        miss = pred != y_int
        eps = float(w[miss].sum())
        if eps >= 0.5:
            break
        if eps == 0.0:
            trees.append(tree)
            alphas.append(config.learning_rate * ALPHA_CAP)
            errors.append(0.0)
            break
        alpha = config.learning_rate * math.log((1.0 - eps) / eps)
        trees.append(tree)
        alphas.append(alpha)
        errors.append(eps)
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    return TrainedModel(
        config=config,
        n_features=X.shape[1],
        prior=float(y.mean()),
        trees=trees,
        alphas=alphas,
        round_errors=errors,
    )


def train_knn(X, y, config: ModelConfig) -> TrainedModel:
    """Stores standardized training data; constant features get weight 0."""
    X, y = _check_training_input(X, y)
    if config.k_neighbors > len(X):
        raise ConfigError(
            f"k_neighbors {config.k_neighbors} exceeds sample count {len(X)}"
        )
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    Z = _standardize(X, mean, std)
    return TrainedModel(
        config=config,
        n_features=X.shape[1],
        prior=float(y.mean()),
        knn_mean=mean,
        knn_std=std,
        knn_X=Z,
        knn_y=y.astype(np.int64),
    )


def _standardize(X: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    safe = np.where(std == 0.0, 1.0, std)
    Z = (X - mean) / safe
    Z[:, std == 0.0] = 0.0
    return Z


def train_model(X, y, config: ModelConfig) -> TrainedModel:
    if config.kind == KIND_DECISION_TREE:
        return train_tree(X, y, config)
    if config.kind in (KIND_RANDOM_FOREST, KIND_EXTRA_TREES):
        return train_forest(X, y, config)
    if config.kind == KIND_ADABOOST:
        return train_adaboost(X, y, config)
    return train_knn(X, y, config)


def predict_proba_batch(model: TrainedModel, X) -> np.ndarray:
    """Probability-like score in [0,1] for each row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DomainError(
            f"feature arity mismatch: model has {model.n_features}, input has "
            f"{X.shape[1] if X.ndim == 2 else 'non-matrix shape'}"
        )
    kind = model.kind
    if kind == KIND_DECISION_TREE:
        return model.trees[0].predict_proba(X)
    if kind in (KIND_RANDOM_FOREST, KIND_EXTRA_TREES):
        acc = np.zeros(len(X))
        for tree in model.trees:
            acc += tree.predict_proba(X)
        return acc / len(model.trees)
    if kind == KIND_ADABOOST:
        if not model.alphas:
            return np.full(len(X), model.prior)
        total = sum(model.alphas)
        acc = np.zeros(len(X))
        for alpha, tree in zip(model.alphas, model.trees):
            acc += alpha * (tree.predict_class(X) == 1)
        return acc / total
    return _knn_scores(model, X)


def _knn_scores(model: TrainedModel, X: np.ndarray, chunk: int = 512) -> np.ndarray:
    Zq = _standardize(X, model.knn_mean, model.knn_std)
    Zt = model.knn_X
    k = model.config.k_neighbors
    t2 = (Zt**2).sum(axis=1)
    out = np.empty(len(X))
    for start in range(0, len(X), chunk):
        q = Zq[start : start + chunk]
        d2 = (q**2).sum(axis=1)[:, None] + t2[None, :] - 2.0 * (q @ Zt.T)
        np.maximum(d2, 0.0, out=d2)
        # stable sort breaks distance ties toward the lower training-row index
        nbrs = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[start : start + chunk] = model.knn_y[nbrs].mean(axis=1)
    return out


def predict_proba(model: TrainedModel, x) -> float:
    """Score for a single feature vector."""
    return float(predict_proba_batch(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def staged_error_bound(model: TrainedModel) -> np.ndarray:
    """Classical per-round bound on AdaBoost training error:
    prod over rounds of 2*sqrt(eps*(1-eps)). Strictly decreasing while
    0 < eps < 0.5."""
    if model.kind != KIND_ADABOOST:
        raise DomainError("staged_error_bound applies to AdaBoost models only")
    factors = [2.0 * math.sqrt(e * (1.0 - e)) for e in model.round_errors]
    return np.cumprod(factors) if factors else np.array([])


# ---------------------------------------------------------------------------
# serialization


def model_to_dict(model: TrainedModel) -> dict:
    cfg = model.config
    out = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "config": {
            "kind": cfg.kind,
            "n_estimators": cfg.n_estimators,
            "max_depth": cfg.max_depth,
            "min_samples_split": cfg.min_samples_split,
            "features_per_split": cfg.features_per_split,
            "bootstrap": cfg.bootstrap,
            "learning_rate": cfg.learning_rate,
            "k_neighbors": cfg.k_neighbors,
            "seed": cfg.seed,
        },
        "n_features": model.n_features,
        "prior": model.prior,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "count0": t.count0.tolist(),
                "count1": t.count1.tolist(),
            }
            for t in model.trees
        ],
        "alphas": list(model.alphas),
        "round_errors": list(model.round_errors),
        "knn": None,
    }
    if model.kind == KIND_KNN:
        out["knn"] = {
            "mean": model.knn_mean.tolist(),
            "std": model.knn_std.tolist(),
            "X": model.knn_X.tolist(),
            "y": model.knn_y.tolist(),
        }
    return out


def model_from_dict(obj: dict) -> TrainedModel:
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValidationError(
            f"unsupported model format version {obj.get('format_version')!r}"
        )
    config = ModelConfig(**obj["config"])
    trees = [
        Tree(
            feature=np.array(t["feature"], dtype=np.int64),
            threshold=np.array(t["threshold"], dtype=np.float64),
            left=np.array(t["left"], dtype=np.int64),
            right=np.array(t["right"], dtype=np.int64),
            count0=np.array(t["count0"], dtype=np.float64),
            count1=np.array(t["count1"], dtype=np.float64),
        )
        for t in obj["trees"]
    ]
    model = TrainedModel(
        config=config,
        n_features=int(obj["n_features"]),
        prior=float(obj["prior"]),
        trees=trees,
        alphas=[float(a) for a in obj["alphas"]],
        round_errors=[float(e) for e in obj["round_errors"]],
    )
    if obj.get("knn"):
        knn = obj["knn"]
        model.knn_mean = np.array(knn["mean"], dtype=np.float64)
        model.knn_std = np.array(knn["std"], dtype=np.float64)
        model.knn_X = np.array(knn["X"], dtype=np.float64)
        model.knn_y = np.array(knn["y"], dtype=np.int64)
    return model


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
