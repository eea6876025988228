"""Phase-scope statistics of a stereo window: box counting, panning, correlation.

Like the level meters these reduce over the last axis, so ``left`` and
``right`` may be single windows or stacks of windows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID = 20
N_BOXES = GRID * GRID
# cell boundaries of a uniform grid over [-1, 1]; the last entry never matches
_EDGES = np.append((np.arange(GRID) - GRID / 2) / (GRID / 2), np.inf)
SIGMA_FLOOR = 1e-12
NEUTRAL_PAN_DEG = 45.0


@dataclass(frozen=True)
class StereoReading:
    box_count: int
    pan_deg: float
    correlation: float


def _cell(x: np.ndarray) -> np.ndarray:
    """Grid column of every sample; boundary samples go to the higher-index cell."""
    t = np.clip(x, -1.0, 1.0)
    t *= GRID / 2
    # within a few ulps of a boundary the scaled value can land on the wrong
    # side; those samples are re-decided against the exact edge values
    near = np.flatnonzero(np.abs(t - np.rint(t)) < 1e-9)
    np.floor(t, out=t)
    i = t.astype(np.intp)
    i += GRID // 2
    if near.size:
        xs = np.clip(x.ravel()[near], -1.0, 1.0)
        i.ravel()[near] = np.searchsorted(_EDGES[1:GRID], xs, side="right")
    return np.minimum(i, GRID - 1, out=i)


def box_count(left, right):
    """Number of occupied cells of a 20x20 grid laid over the (L, R) plane."""
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    lead = left.shape[:-1]
    cells = (_cell(left) * GRID + _cell(right)).reshape(-1, left.shape[-1])
    n_win = cells.shape[0]
    cells += (np.arange(n_win) * N_BOXES)[:, None]
    hits = np.bincount(cells.ravel(), minlength=n_win * N_BOXES).reshape(n_win, N_BOXES)
    counts = np.count_nonzero(hits, axis=1)
    return counts.reshape(lead) if lead else int(counts[0])


def panning(left, right):
    """Mean polar angle of (|L|, |R|) in degrees; 0 is hard left, 90 hard right.

    Samples with |L| + |R| == 0 carry no direction and are skipped; an
    all-zero window reads 45 degrees.
    """
    a = np.abs(np.asarray(left, dtype=np.float64))
    b = np.abs(np.asarray(right, dtype=np.float64))
    # atan2(0, 0) == 0, so silent samples add nothing to the sum
    total = np.arctan2(b, a).sum(axis=-1)
    n = np.count_nonzero((a + b) > 0, axis=-1)
    pan = np.where(n > 0, np.degrees(total) / np.maximum(n, 1), NEUTRAL_PAN_DEG)
    return pan if pan.ndim else float(pan)


def correlation(left, right):
    """Pearson correlation with population statistics; 0 if either channel is flat."""
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    dl = left - left.mean(axis=-1, keepdims=True)
    dr = right - right.mean(axis=-1, keepdims=True)
    sll = np.einsum("...i,...i->...", dl, dl)
    srr = np.einsum("...i,...i->...", dr, dr)
    slr = np.einsum("...i,...i->...", dl, dr)
    n = left.shape[-1]
    flat = (np.sqrt(sll / n) < SIGMA_FLOOR) | (np.sqrt(srr / n) < SIGMA_FLOOR)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(flat, 0.0, slr / np.sqrt(np.where(flat, 1.0, sll * srr)))
    p = np.clip(p, -1.0, 1.0)
    return p if p.ndim else float(p)


def max_cross_correlation(left, right) -> float:
    """Peak magnitude of the raw cross-correlation of one window.

    Diagnostic only; unbounded and not part of the feature vector.
    """
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    return float(np.max(np.abs(np.correlate(left, right, mode="full"))))


def read_stereo(left, right) -> StereoReading:
    return StereoReading(int(box_count(left, right)), float(panning(left, right)),
                         float(correlation(left, right)))
