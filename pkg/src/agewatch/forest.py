"""Random forest of CART trees (Gini impurity), written against numpy only.

Each tree is stored as flat arrays (feature, threshold, children, class
counts) so prediction walks all trees over all rows at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .errors import EmptyTrainingSet, FeatureWidthMismatch, ModelFormatError, TooFewRows
from .metrics import derive, score

MODEL_FORMAT = "agewatch-forest"
MODEL_VERSION = 1
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 2
    # "sqrt", "all", or a fixed number of candidate features per split
    features_per_split: str | int = "sqrt"
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("max_depth and min_samples_leaf must be >= 1")
        fps = self.features_per_split
        if not (fps in ("sqrt", "all") or (isinstance(fps, int) and fps >= 1)):
            raise ValueError(f"bad features_per_split {fps!r}")

    def n_candidates(self, n_features: int) -> int:
        fps = self.features_per_split
        if fps == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        if fps == "all":
            return n_features
        return min(int(fps), n_features)

    def with_seed(self, seed: int) -> "ForestConfig":
        return ForestConfig(self.n_trees, self.max_depth, self.min_samples_leaf,
                            self.features_per_split, seed)

    def to_dict(self) -> dict:
        return asdict(self)


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Generator for one tree; depends only on the forest seed and tree index."""
    return np.random.default_rng([seed & _SEED_MASK, tree_index])


def bootstrap_indices(seed: int, tree_index: int, n: int) -> np.ndarray:
    return tree_rng(seed, tree_index).integers(0, n, size=n)


@dataclass
class Tree:
    feature: np.ndarray      # -1 marks a leaf
    threshold: np.ndarray    # go left when x[feature] <= threshold
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray       # (n_nodes, 2) class counts of training samples
    candidates: np.ndarray   # bitmask of features examined at each split node

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def leaf_class(self) -> np.ndarray:
        # ties go to Aging, same rule as the forest vote
        return (self.counts[:, 1] >= self.counts[:, 0]).astype(np.int8)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            nd = node[active]
            f = self.feature[nd]
            go_left = X[rows[active], f] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_class()[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
            "candidates": self.candidates.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["counts"], dtype=np.int64).reshape(-1, 2),
            np.asarray(d["candidates"], dtype=np.int64),
        )


@njit(cache=True)
def _gini(n0, n1):
    n = n0 + n1
    if n == 0:
        return 0.0
    p0 = n0 / n
    p1 = n1 / n
    return 1.0 - p0 * p0 - p1 * p1


@njit(cache=True)
def _grow(X, y, max_depth, min_leaf, k, keys):
    n, n_features = X.shape
    cap = 2 * n + 1
    if max_depth < 40:
        cap = min(cap, 2 ** (max_depth + 1))
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, 2), dtype=np.int64)
    cands = np.zeros(cap, dtype=np.int64)
    order = np.arange(n)
    scratch = np.empty(n, dtype=np.int64)

    # each node owns the slice order[start:end]
    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)

    n1 = 0
    for i in range(n):
        n1 += y[i]
    counts[0, 0] = n - n1
    counts[0, 1] = n1
    n_nodes = 1
    top = 0
    st_node[0], st_start[0], st_end[0], st_depth[0] = 0, 0, n, 0
    top = 1
    n_draws = 0
    while top > 0:
        top -= 1
        node, start, end, depth = st_node[top], st_start[top], st_end[top], st_depth[top]
        m = end - start
        if depth >= max_depth or counts[node, 0] == 0 or counts[node, 1] == 0 or m < 2 * min_leaf:
            continue
        chosen = np.argsort(keys[n_draws])[:k]
        n_draws += 1
        mask = 0
        for c in chosen:
            mask |= 1 << c
        cands[node] = mask
        parent = _gini(counts[node, 0], counts[node, 1])
        total1 = counts[node, 1]
        best_gain = -np.inf
        best_f = -1
        best_thr = 0.0
        vals = np.empty(m)
        for f in chosen:
            for i in range(m):
                vals[i] = X[order[start + i], f]
            srt = np.argsort(vals)
            left1 = 0
            for i in range(m - 1):
                left1 += y[order[start + srt[i]]]
                nl = i + 1
                nr = m - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                a = vals[srt[i]]
                b = vals[srt[i + 1]]
                if not a < b:
                    continue
                right1 = total1 - left1
                child = (nl * _gini(nl - left1, left1) + nr * _gini(nr - right1, right1)) / m
                gain = parent - child
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = (a + b) / 2.0
        if best_f < 0:
            continue
        # stable partition of the node's slice
        nl = 0
        for i in range(start, end):
            if X[order[i], best_f] <= best_thr:
                scratch[nl] = order[i]
                nl += 1
        j = nl
        for i in range(start, end):
            if not X[order[i], best_f] <= best_thr:
                scratch[j] = order[i]
                j += 1
        l1 = 0
        for i in range(m):
            order[start + i] = scratch[i]
            if i < nl:
                l1 += y[scratch[i]]
        feature[node] = best_f
        threshold[node] = best_thr
        lo, hi = n_nodes, n_nodes + 1
        n_nodes += 2
        left[node], right[node] = lo, hi
        counts[lo, 0], counts[lo, 1] = nl - l1, l1
        counts[hi, 0], counts[hi, 1] = (m - nl) - (total1 - l1), total1 - l1
        st_node[top], st_start[top], st_end[top], st_depth[top] = hi, start + nl, end, depth + 1
        top += 1
        st_node[top], st_start[top], st_end[top], st_depth[top] = lo, start, start + nl, depth + 1
        top += 1
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            counts[:n_nodes], cands[:n_nodes])


def grow_tree(X, y, cfg: ForestConfig, rng: np.random.Generator) -> Tree:
    """Grow one CART tree on ``(X, y)``.

    Candidate features at each split are the ``k`` smallest of a row of random
    keys drawn up front from ``rng``, so the tree depends only on the data and
    the generator state.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n, n_features = X.shape
    max_splits = min(n, 2 ** min(cfg.max_depth, 40)) + 1
    keys = rng.random((max_splits, n_features))
    parts = _grow(X, y, cfg.max_depth, cfg.min_samples_leaf,
                  cfg.n_candidates(n_features), keys)
    return Tree(*parts)


def _pack(trees):
    """Concatenate all trees into flat arrays with per-tree root offsets."""
    offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]]).astype(np.int64)
    feature = np.concatenate([t.feature for t in trees])
    threshold = np.concatenate([t.threshold for t in trees])
    left = np.concatenate([t.left + off for t, off in zip(trees, offsets)])
    right = np.concatenate([t.right + off for t, off in zip(trees, offsets)])
    leaf = np.concatenate([t.leaf_class() for t in trees]).astype(np.int64)
    return offsets, feature, threshold, left, right, leaf


@njit(cache=True)
def _votes(X, offsets, feature, threshold, left, right, leaf):
    out = np.zeros(X.shape[0], dtype=np.int64)
    for r in range(X.shape[0]):
        total = 0
        for root in offsets:
            node = root
            while feature[node] >= 0:
                if X[r, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            total += leaf[node]
        out[r] = total
    return out


@dataclass
class ForestModel:
    trees: list
    config: ForestConfig
    n_features: int
    classes: tuple
    # bookkeeping for the streaming harness, not part of the model's behaviour
    version: int = field(default=0, compare=False)
    _packed: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def votes(self, X) -> np.ndarray:
        """Number of trees voting Aging for each row."""
        X = self._check(X)
        if self._packed is None:
            self._packed = _pack(self.trees)
        return _votes(X, *self._packed)

    def predict(self, X) -> np.ndarray:
        """Majority vote over trees; a tied vote goes to class 1 (Aging)."""
        return (2 * self.votes(X) >= len(self.trees)).astype(np.int8)

    def predict_one(self, features) -> int:
        return int(self.predict(np.asarray(features, dtype=np.float64)[None, :])[0])

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise FeatureWidthMismatch(
                f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def to_json(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "n_features": self.n_features,
            "classes": list(self.classes),
            "config": self.config.to_dict(),
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str, expected_width: int | None = None) -> "ForestModel":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not a model file: {exc}") from None
        if doc.get("format") != MODEL_FORMAT:
            raise ModelFormatError(f"unknown format {doc.get('format')!r}")
        if doc.get("version") != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
        width = int(doc["n_features"])
        if expected_width is not None and width != expected_width:
            raise FeatureWidthMismatch(f"model has {width} features, expected {expected_width}")
        cfg = ForestConfig(**doc["config"])
        trees = [Tree.from_dict(t) for t in doc["trees"]]
        return cls(trees, cfg, width, tuple(doc["classes"]))

    @classmethod
    def load(cls, path, expected_width: int | None = None) -> "ForestModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"), expected_width)


def train(X, y, cfg: ForestConfig | None = None) -> ForestModel:
    """Fit ``cfg.n_trees`` trees, each on its own seeded bootstrap resample."""
    cfg = cfg or ForestConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("no training rows")
    if X.shape[1] == 0:
        raise EmptyTrainingSet("no feature columns")
    if X.shape[0] != y.size:
        raise ValueError("X and y differ in length")
    n = y.size
    trees = []
    for t in range(cfg.n_trees):
        rng = tree_rng(cfg.rng_seed, t)
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], cfg, rng))
    classes = tuple(int(c) for c in np.unique(y))
    return ForestModel(trees, cfg, X.shape[1], classes)


def fold_indices(n: int, k: int, seed: int) -> list:
    """Seeded shuffle cut into ``k`` contiguous blocks; earlier folds take the remainder."""
    if k < 2:
        raise TooFewRows("k must be >= 2")
    if n < k:
        raise TooFewRows(f"{n} rows cannot fill {k} folds")
    order = np.random.default_rng(seed & _SEED_MASK).permutation(n)
    return np.array_split(order, k)


def kfold_evaluate(X, y, cfg: ForestConfig | None = None, k: int = 5):
    """k-fold cross-validation; metrics are computed on the pooled predictions."""
    from .report import RunReport

    cfg = cfg or ForestConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64).ravel()
    folds = fold_indices(y.size, k, cfg.rng_seed)
    pred = np.empty(y.size, dtype=np.int8)
    for test in folds:
        mask = np.ones(y.size, dtype=bool)
        mask[test] = False
        model = train(X[mask], y[mask], cfg)
        pred[test] = model.predict(X[test])
    cm = score(pred, y)
    return RunReport(
        name=f"kfold-{k}",
        mode="KFold",
        config={"forest": cfg.to_dict(), "k": k, "fold_sizes": [len(f) for f in folds]},
        confusion=cm,
        metrics=derive(cm),
        predictions=pred,
        truths=y.astype(np.int8),
    )
