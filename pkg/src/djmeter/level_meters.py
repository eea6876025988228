"""Per-window level meters: VU, PPM, DR and RMS.

All meters reduce over the last axis, so a (n_windows, N) array yields one
reading per window. Log meters are floored at FLOOR_DB.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

EPS = 1e-6
FLOOR_DB = -120.0
REFERENCE_HZ = 1000.0
SUBSEGMENT_S = 0.010


@dataclass(frozen=True)
class MeterReading:
    vu_db: float
    ppm_db: float
    dr_db: float
    rms_linear: float


def to_db(x):
    """20*log10(x) floored at -120 dB; zero maps to the floor."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.maximum(20.0 * np.log10(x), FLOOR_DB)


@lru_cache(maxsize=16)
def _vu_reference(n: int, sample_rate: int) -> float:
    t = np.arange(n) / sample_rate
    return float(np.sum(np.abs(np.sin(2.0 * np.pi * REFERENCE_HZ * t))))


def vu(x, sample_rate: int):
    """Average rectified level relative to a full-scale 1 kHz sine of the same length."""
    x = np.asarray(x, dtype=np.float64)
    ref = _vu_reference(x.shape[-1], int(sample_rate))
    return to_db(np.sum(np.abs(x), axis=-1) / ref)


def ppm(x):
    x = np.asarray(x, dtype=np.float64)
    return to_db(np.max(np.abs(x), axis=-1))


def subsegment_len(sample_rate: int) -> int:
    return int(round(SUBSEGMENT_S * sample_rate))


def dr(x, sample_rate: int):
    """Ratio of the largest to the smallest 10 ms sub-segment peak, in dB.

    A trailing partial sub-segment is ignored; both peaks are clamped to EPS.
    """
    x = np.asarray(x, dtype=np.float64)
    sub = subsegment_len(sample_rate)
    n_sub = x.shape[-1] // sub
    if n_sub == 0:
        raise ValueError(f"window of {x.shape[-1]} samples holds no {sub}-sample sub-segment")
    peaks = np.abs(x[..., : n_sub * sub]).reshape(*x.shape[:-1], n_sub, sub).max(axis=-1)
    hi = np.maximum(peaks.max(axis=-1), EPS)
    lo = np.maximum(peaks.min(axis=-1), EPS)
    return 20.0 * np.log10(hi / lo)


def rms(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] == 0:
        raise ValueError("rms of an empty window")
    return np.sqrt(np.einsum("...i,...i->...", x, x) / x.shape[-1])


def read_levels(channel, sample_rate: int) -> MeterReading:
    return MeterReading(float(vu(channel, sample_rate)), float(ppm(channel)),
                        float(dr(channel, sample_rate)), float(rms(channel)))
