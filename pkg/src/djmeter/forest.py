"""Random-forest classifier grown with entropy splits.

Trees are built depth-first with exact greedy splitting on midpoints between
consecutive distinct values. Every tree draws from its own generator seeded by
(random_state, tree index), so trees can be grown in any order or in parallel
without changing the model.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import pca as pca_mod

MODEL_FORMAT = "djmeter-forest"
MODEL_VERSION = 1
GAIN_TIE_TOL = 1e-12


class SchemaMismatchError(ValueError):
    pass


def entropy(class_counts) -> float:
    """Shannon entropy in bits of a vector of class counts."""
    c = np.asarray(class_counts, dtype=np.float64)
    if np.any(c < 0):
        raise ValueError("class counts must be non-negative")
    n = c.sum()
    if n <= 0:
        raise ValueError("entropy of an empty node")
    p = c[c > 0] / n
    h = -float(np.sum(p * np.log2(p)))
    return h if h > 0 else 0.0


def _entropy_rows(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    # row-wise entropy of (m, K) count matrices
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals[:, None]
        terms = np.where(counts > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 25
    max_depth: int = 15
    criterion: str = "entropy"
    bootstrap: bool = True
    max_features: str | int = "sqrt"
    random_state: int = 49
    min_samples_split: int = 2

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.criterion != "entropy":
            raise ValueError("only the entropy criterion is supported")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if isinstance(self.max_features, str):
            if self.max_features not in ("sqrt", "auto", "all"):
                raise ValueError(f"unknown max_features rule {self.max_features!r}")
        elif self.max_features < 1:
            raise ValueError("max_features must be >= 1")

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features in ("sqrt", "auto"):
            return max(1, math.isqrt(n_features))
        if self.max_features == "all":
            return n_features
        return min(int(self.max_features), n_features)


@dataclass(eq=False)
class DecisionTree:
    """Flattened binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_classes) class frequencies

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        deepest, stack = 0, [(0, 0)]
        while stack:
            node, d = stack.pop()
            deepest = max(deepest, d)
            if self.feature[node] >= 0:
                stack += [(self.left[node], d + 1), (self.right[node], d + 1)]
        return deepest

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of X."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(np.array(d["feature"], np.int64), np.array(d["threshold"], np.float64),
                   np.array(d["left"], np.int64), np.array(d["right"], np.int64),
                   np.array(d["value"], np.float64))


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def best_split(X, y, n_classes: int, candidates) -> Split | None:
    """Highest-gain (feature, threshold) among ``candidates``.

    Gains within GAIN_TIE_TOL of the best count as ties, resolved by lowest
    feature index and then lowest threshold.
    """
    n = len(y)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    totals = onehot.sum(axis=0)
    parent = entropy(totals)
    found = []
    for f in candidates:
        xs = X[:, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        valid = np.flatnonzero(xs[:-1] < xs[1:])
        if valid.size == 0:
            continue
        left = np.cumsum(onehot[order], axis=0)[valid]
        right = totals - left
        nl = (valid + 1).astype(np.float64)
        nr = n - nl
        gains = parent - (nl * _entropy_rows(left, nl) + nr * _entropy_rows(right, nr)) / n
        # lowest threshold among near-ties inside this feature
        j = int(np.flatnonzero(gains >= gains.max() - GAIN_TIE_TOL)[0])
        thr = _midpoint(xs[valid[j]], xs[valid[j] + 1])
        found.append(Split(int(f), thr, float(gains[j])))
    if not found:
        return None
    top = max(s.gain for s in found)
    return min((s for s in found if s.gain >= top - GAIN_TIE_TOL),
               key=lambda s: (s.feature, s.threshold))


def _midpoint(a: float, b: float) -> float:
    m = a / 2.0 + b / 2.0
    # a midpoint that rounds onto b would send b to the left child
    return float(a) if m >= b else float(m)


def grow_tree(X, y, n_classes: int, cfg: ForestConfig, rng: np.random.Generator) -> DecisionTree:
    """Grow one tree on (X, y); ``y`` holds class indices."""
    n, d = X.shape
    k = cfg.resolve_max_features(d)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yi = y[idx]
        if depth >= cfg.max_depth or len(idx) < cfg.min_samples_split or np.all(yi == yi[0]):
            continue
        Xi = X[idx]
        # draw features in random order; ones constant in this node don't use up the budget
        candidates = []
        for f in rng.permutation(d):
            if len(candidates) == k:
                break
            if Xi[0, f] != Xi[:, f].min() or Xi[0, f] != Xi[:, f].max():
                candidates.append(int(f))
        if not candidates:
            continue
        split = best_split(Xi, yi, n_classes, candidates)
        if split is None:
            continue
        go_left = Xi[:, split.feature] <= split.threshold
        feature[node] = split.feature
        threshold[node] = split.threshold
        li, ri = idx[go_left], idx[~go_left]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return DecisionTree(np.array(feature, np.int64), np.array(threshold, np.float64),
                        np.array(left, np.int64), np.array(right, np.int64),
                        np.array(value, np.float64).reshape(-1, n_classes))


def _tree_job(args):
    X, y, n_classes, cfg, t = args
    rng = np.random.default_rng([cfg.random_state, t])
    n = len(y)
    idx = rng.integers(0, n, n) if cfg.bootstrap else np.arange(n)
    return grow_tree(X[idx], y[idx], n_classes, cfg, rng)


@dataclass(eq=False)
class ForestModel:
    trees: list[DecisionTree]
    classes: list[str]
    config: ForestConfig
    n_features: int
    schema_hash: str = ""
    pca: pca_mod.PcaModel | None = None
    meta: dict = field(default_factory=dict)

    def _prepare(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_features:
            raise SchemaMismatchError(
                f"model expects {self.n_features} features, got {X.shape[1]}")
        if self.pca is not None:
            X = pca_mod.transform(self.pca, X)
        return X, single

    def predict_proba(self, X) -> np.ndarray:
        X, single = self._prepare(X)
        proba = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.trees:
            proba += tree.predict_proba(X)
        proba /= len(self.trees)
        return proba[0] if single else proba

    def predict(self, X):
        proba = self.predict_proba(X)
        # argmax returns the first maximum: ties go to the lowest class index
        idx = np.argmax(proba, axis=-1)
        if np.ndim(idx) == 0:
            return self.classes[int(idx)]
        return [self.classes[i] for i in idx]

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "schema_hash": self.schema_hash,
            "n_features": self.n_features,
            "classes": list(self.classes),
            "config": asdict(self.config),
            "resolved_max_features": self.config.resolve_max_features(
                self.pca.n_components if self.pca is not None else self.n_features),
            "meta": self.meta,
            "pca": self.pca.to_dict() if self.pca is not None else None,
            "trees": [t.to_dict() for t in self.trees],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not a djmeter forest model")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        pca = pca_mod.PcaModel.from_dict(d["pca"]) if d.get("pca") else None
        return cls([DecisionTree.from_dict(t) for t in d["trees"]], list(d["classes"]),
                   ForestConfig(**d["config"]), int(d["n_features"]), d["schema_hash"],
                   pca, d.get("meta", {}))

    @classmethod
    def load(cls, path) -> "ForestModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit(X, y, cfg: ForestConfig | None = None, classes=None, pca_components: int | None = None,
        schema_hash: str = "", n_jobs: int = 1) -> ForestModel:
    """Train a forest on rows X with labels y.

    ``classes`` fixes the class order (used for tie-breaking); by default it is
    the sorted set of labels. ``pca_components`` inserts a PCA projection.
    """
    cfg = cfg or ForestConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain NaN or infinite values")
    # numpy scalars would not survive the JSON model file
    labels = [v.item() if isinstance(v, np.generic) else v for v in y]
    if len(labels) != X.shape[0]:
        raise ValueError("X and y lengths differ")
    classes = ([c.item() if isinstance(c, np.generic) else c for c in classes]
               if classes is not None else sorted(set(labels)))
    if len(set(classes)) != len(classes):
        raise ValueError("class list contains duplicates")
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        yi = np.array([lookup[v] for v in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not in class list") from None
    if len(np.unique(yi)) < 2:
        raise ValueError("training data holds a single class")

    n_features = X.shape[1]
    pca = None
    if pca_components:
        pca = pca_mod.fit(X, pca_components)
        X = pca_mod.transform(pca, X)

    jobs = [(X, yi, len(classes), cfg, t) for t in range(cfg.n_estimators)]
    if n_jobs > 1 and cfg.n_estimators > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(_tree_job, jobs))
    else:
        trees = [_tree_job(j) for j in jobs]
    return ForestModel(trees, classes, cfg, n_features, schema_hash, pca)
