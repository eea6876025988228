"""Splitting, cross-validation and classification reports."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import features as feat
from .forest import ForestConfig, ForestModel, SchemaMismatchError, fit

AVERAGES = ("macro", "weighted", "micro")


# -- confusion matrix and report -------------------------------------------

@dataclass(eq=False)
class ConfusionMatrix:
    """Rows are actual classes, columns predicted classes."""

    classes: list[str]
    counts: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if list(other.classes) != list(self.classes):
            raise ValueError("class lists differ")
        return ConfusionMatrix(list(self.classes), self.counts + other.counts)

    def reorder(self, classes) -> "ConfusionMatrix":
        idx = [self.classes.index(c) for c in classes]
        return ConfusionMatrix(list(classes), self.counts[np.ix_(idx, idx)])


def confusion(actual, predicted, classes) -> ConfusionMatrix:
    actual, predicted, classes = list(actual), list(predicted), list(classes)
    if len(actual) != len(predicted):
        raise ValueError("actual and predicted differ in length")
    lookup = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, p in zip(actual, predicted):
        if a not in lookup or p not in lookup:
            raise ValueError(f"label {(a if a not in lookup else p)!r} not in class list")
        counts[lookup[a], lookup[p]] += 1
    return ConfusionMatrix(classes, counts)


@dataclass(eq=False)
class ClassReport:
    classes: list[str]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    averages: dict[str, tuple[float, float, float]]
    protocol: str = ""

    def row(self, label: str) -> tuple[float, float, float, int]:
        i = self.classes.index(label)
        return (float(self.precision[i]), float(self.recall[i]), float(self.f1[i]),
                int(self.support[i]))


def _f1(p, r):
    p, r = np.asarray(p, float), np.asarray(r, float)
    s = p + r
    return np.where(s > 0, 2.0 * p * r / np.where(s > 0, s, 1.0), 0.0)


def report(cm: ConfusionMatrix, protocol: str = "") -> ClassReport:
    """Per-class precision/recall/F1/support plus accuracy and averages.

    An empty prediction column gives precision 0; an empty row gives recall 0.
    """
    c = np.asarray(cm.counts, dtype=np.float64)
    if c.sum() == 0:
        raise ValueError("confusion matrix is empty")
    diag = np.diag(c)
    col = c.sum(axis=0)
    row = c.sum(axis=1)
    precision = np.where(col > 0, diag / np.where(col > 0, col, 1.0), 0.0)
    recall = np.where(row > 0, diag / np.where(row > 0, row, 1.0), 0.0)
    f1 = _f1(precision, recall)
    accuracy = float(diag.sum() / c.sum())
    weights = row / row.sum()
    averages = {
        "macro": (float(precision.mean()), float(recall.mean()), float(f1.mean())),
        "weighted": (float(precision @ weights), float(recall @ weights), float(f1 @ weights)),
        # single-label micro averaging collapses to accuracy
        "micro": (accuracy, accuracy, accuracy),
    }
    return ClassReport(list(cm.classes), precision, recall, f1, row.astype(np.int64),
                       accuracy, averages, protocol)


def format_report(rep: ClassReport, digits: int = 3) -> str:
    width = max(12, *(len(c) for c in rep.classes))
    lines = []
    if rep.protocol:
        lines.append(f"protocol: {rep.protocol}")
    lines.append(f"{'':>{width}}  precision     recall   f1-score    support")
    for i, name in enumerate(rep.classes):
        lines.append(f"{name:>{width}}  {rep.precision[i]:9.{digits}f}  {rep.recall[i]:9.{digits}f}"
                     f"  {rep.f1[i]:9.{digits}f}  {rep.support[i]:9d}")
    total = int(rep.support.sum())
    lines.append("")
    lines.append(f"{'accuracy':>{width}}  {'':9}  {'':9}  {rep.accuracy:9.{digits}f}  {total:9d}")
    for name in ("macro", "weighted"):
        p, r, f = rep.averages[name]
        lines.append(f"{name + ' avg':>{width}}  {p:9.{digits}f}  {r:9.{digits}f}  {f:9.{digits}f}"
                     f"  {total:9d}")
    return "\n".join(lines) + "\n"


def format_confusion(cm: ConfusionMatrix) -> str:
    width = max(8, *(len(c) for c in cm.classes))
    head = f"{'actual/predicted':>{width}}" + "".join(f" {c:>{width}}" for c in cm.classes)
    rows = [f"{c:>{width}}" + "".join(f" {v:>{width}d}" for v in cm.counts[i])
            for i, c in enumerate(cm.classes)]
    return "\n".join([head, *rows]) + "\n"


def report_items(rep: ClassReport) -> list[tuple[str, str]]:
    """Flat key/value pairs for machine-readable output."""
    items = [("protocol", rep.protocol), ("accuracy", f"{rep.accuracy:.6f}")]
    for name, (p, r, f) in rep.averages.items():
        items += [(f"{name}.precision", f"{p:.6f}"), (f"{name}.recall", f"{r:.6f}"),
                  (f"{name}.f1", f"{f:.6f}")]
    for i, c in enumerate(rep.classes):
        items += [(f"class.{c}.precision", f"{rep.precision[i]:.6f}"),
                  (f"class.{c}.recall", f"{rep.recall[i]:.6f}"),
                  (f"class.{c}.f1", f"{rep.f1[i]:.6f}"),
                  (f"class.{c}.support", str(int(rep.support[i])))]
    return items


def write_confusion_csv(path, cm: ConfusionMatrix) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["actual\\predicted", *cm.classes])
        for c, row in zip(cm.classes, cm.counts):
            w.writerow([c, *map(int, row)])


# -- training on song records -----------------------------------------------

def class_list(records) -> list[str]:
    return sorted({r.label for r in records})


def design_matrix(records, aggregation: str = feat.MEAN_STD):
    """Rows and labels for training; per-window mode yields one row per window."""
    if aggregation == feat.MEAN_STD:
        return np.vstack([r.features for r in records]), [r.label for r in records]
    rows, labels = [], []
    for r in records:
        if r.windows is None:
            raise ValueError(f"{r.song_id}: per-window rows not available")
        rows.append(r.windows)
        labels += [r.label] * len(r.windows)
    return np.vstack(rows), labels


def train(records, cfg: ForestConfig | None = None, aggregation: str = feat.MEAN_STD,
          pca_components: int | None = None, classes=None, n_jobs: int = 1) -> ForestModel:
    X, y = design_matrix(records, aggregation)
    names = feat.FEATURE_NAMES if aggregation == feat.MEAN_STD else feat.SLOT_NAMES
    model = fit(X, y, cfg, classes=classes or class_list(records),
                pca_components=pca_components, schema_hash=feat.schema_hash(names),
                n_jobs=n_jobs)
    model.meta["aggregation"] = aggregation
    return model


def predict_records(model: ForestModel, records):
    """Predicted label and probability vector per song.

    In per-window mode each window votes for its argmax class; the song goes to
    the most-voted class, ties resolved by the higher mean probability and then
    by class order. The returned vector is the mean window probability.
    """
    aggregation = model.meta.get("aggregation", feat.MEAN_STD)
    names = feat.FEATURE_NAMES if aggregation == feat.MEAN_STD else feat.SLOT_NAMES
    expected = feat.schema_hash(names)
    if model.schema_hash != expected:
        raise SchemaMismatchError(
            f"model schema {model.schema_hash} does not match extraction schema {expected}")
    if aggregation == feat.MEAN_STD:
        proba = model.predict_proba(np.vstack([r.features for r in records]))
        return [model.classes[i] for i in np.argmax(proba, axis=1)], proba
    labels, probas = [], []
    for r in records:
        p = model.predict_proba(r.windows)
        votes = np.bincount(np.argmax(p, axis=1), minlength=len(model.classes))
        mean_p = p.mean(axis=0)
        best = max(range(len(model.classes)), key=lambda i: (votes[i], mean_p[i], -i))
        labels.append(model.classes[best])
        probas.append(mean_p)
    return labels, np.vstack(probas)


# -- protocols --------------------------------------------------------------

def split(records, train_fraction: float = 0.9, seed: int = 49, stratify: bool = True):
    """Seeded shuffle-and-partition into (train, test)."""
    records = list(records)
    n = len(records)
    if n < 2:
        raise ValueError("need at least 2 records to split")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n_train = int(math.floor(train_fraction * n + 1e-9))
    n_test = n - n_train
    if n_train == 0 or n_test == 0:
        raise ValueError(f"train_fraction {train_fraction} leaves an empty partition for n={n}")
    rng = np.random.default_rng(seed)
    if not stratify:
        order = rng.permutation(n)
        test_idx = set(order[:n_test].tolist())
    else:
        groups: dict[str, list[int]] = {}
        for i, r in enumerate(records):
            groups.setdefault(r.label, []).append(i)
        labels = sorted(groups)
        quota = {c: n_test * len(groups[c]) / n for c in labels}
        take = {c: int(math.floor(quota[c])) for c in labels}
        spare = n_test - sum(take.values())
        for c in sorted(labels, key=lambda c: (-(quota[c] - take[c]), labels.index(c)))[:spare]:
            take[c] += 1
        test_idx = set()
        for c in labels:
            members = np.array(groups[c])[rng.permutation(len(groups[c]))]
            test_idx.update(members[:take[c]].tolist())
    train_part = [r for i, r in enumerate(records) if i not in test_idx]
    test_part = [r for i, r in enumerate(records) if i in test_idx]
    return train_part, test_part


def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"cannot make {k} folds from {n} records")
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(order, k)]


@dataclass(eq=False)
class CVResult:
    folds: list[ClassReport]
    confusion: ConfusionMatrix
    fold_sizes: list[int] = field(default_factory=list)

    @property
    def accuracies(self) -> list[float]:
        return [f.accuracy for f in self.folds]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    def pooled(self) -> ClassReport:
        return report(self.confusion, protocol=f"cv{len(self.folds)} pooled")


def cross_validate(records, k: int = 5, cfg: ForestConfig | None = None, seed: int | None = None,
                   aggregation: str = feat.MEAN_STD, pca_components: int | None = None,
                   n_jobs: int = 1) -> CVResult:
    """k-fold cross-validation over songs; folds are a seeded random partition."""
    cfg = cfg or ForestConfig()
    records = list(records)
    seed = cfg.random_state if seed is None else seed
    classes = class_list(records)
    folds = fold_indices(len(records), k, seed)
    reports, pooled = [], None
    for i, test in enumerate(folds):
        test_set = set(test.tolist())
        train_recs = [r for j, r in enumerate(records) if j not in test_set]
        test_recs = [records[j] for j in test]
        model = train(train_recs, cfg, aggregation, pca_components, classes, n_jobs)
        predicted, _ = predict_records(model, test_recs)
        cm = confusion([r.label for r in test_recs], predicted, classes)
        reports.append(report(cm, protocol=f"cv{k} fold {i + 1}"))
        pooled = cm if pooled is None else pooled + cm
    return CVResult(reports, pooled, [len(f) for f in folds])


def holdout(records, cfg: ForestConfig | None = None, train_fraction: float = 0.9,
            seed: int | None = None, stratify: bool = True, aggregation: str = feat.MEAN_STD,
            pca_components: int | None = None, n_jobs: int = 1):
    """Train on a 90/10 style split and report on the held-out part."""
    cfg = cfg or ForestConfig()
    seed = cfg.random_state if seed is None else seed
    classes = class_list(records)
    train_recs, test_recs = split(records, train_fraction, seed, stratify)
    model = train(train_recs, cfg, aggregation, pca_components, classes, n_jobs)
    predicted, _ = predict_records(model, test_recs)
    cm = confusion([r.label for r in test_recs], predicted, classes)
    return report(cm, protocol=f"split{round(train_fraction * 100)}"), cm


def shuffled_label_control(records, k: int = 5, cfg: ForestConfig | None = None,
                           seed: int = 0, repeats: int = 5, **kwargs) -> float:
    """Mean CV accuracy after permuting labels across songs; should sit near chance."""
    rng = np.random.default_rng(seed)
    records = list(records)
    labels = [r.label for r in records]
    accs = []
    for _ in range(repeats):
        perm = rng.permutation(len(records))
        shuffled = [feat.SongRecord(r.song_id, labels[p], r.features, r.window_count,
                                    windows=r.windows) for r, p in zip(records, perm)]
        accs.append(cross_validate(shuffled, k, cfg, **kwargs).mean_accuracy)
    return float(np.mean(accs))
