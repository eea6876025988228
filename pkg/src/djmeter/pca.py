"""Principal component analysis on z-scored song vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray  # (k, d), rows orthonormal
    explained_variance: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist(),
                "components": self.components.tolist(),
                "explained_variance": self.explained_variance.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(np.array(d["mean"], float), np.array(d["scale"], float),
                   np.array(d["components"], float).reshape(-1, len(d["mean"])),
                   np.array(d["explained_variance"], float))


def standardize_params(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def fit(X, k: int = 1) -> PcaModel:
    """Top-k principal axes of the standardized data.

    Each axis is signed so its largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("PCA needs at least 2 rows")
    n, d = X.shape
    if not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k={k} outside [1, {min(n - 1, d)}]")
    mean, scale = standardize_params(X)
    Z = (X - mean) / scale
    cov = Z.T @ Z / n
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1][:k]
    comps = evecs[:, order].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean, scale, comps, np.clip(evals[order], 0.0, None))


def transform(model: PcaModel, X) -> np.ndarray:
    """Scores for one vector (d,) or a matrix (n, d)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != model.mean.shape[0]:
        raise ValueError(f"expected {model.mean.shape[0]} features, got {X.shape[-1]}")
    return ((X - model.mean) / model.scale) @ model.components.T


def inverse_transform(model: PcaModel, scores) -> np.ndarray:
    return np.asarray(scores, dtype=np.float64) @ model.components * model.scale + model.mean
