"""Fused single-pass window statistics used by feature extraction.

Computes the same quantities as stereo_meters.box_count,
stereo_meters.correlation and level_meters.rms in one sweep over the samples of
every window. The numpy versions stay the reference; tests compare the two.
The arctan2 of panning comes from numpy, whose vectorised version beats a
scalar loop; the kernel folds and averages the angles.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from .stereo_meters import _EDGES, GRID, N_BOXES, NEUTRAL_PAN_DEG, SIGMA_FLOOR

HALF_PI = math.pi / 2


@numba.njit(cache=True, nogil=True)
def _stats(left, right, theta, edges, out):
    n_win, n = left.shape
    hits = np.zeros(N_BOXES, dtype=np.int64)
    half = GRID / 2
    for w in range(n_win):
        hits[:] = 0
        # sums are taken around the first sample so a constant window has
        # exactly zero spread
        l0 = left[w, 0]
        r0 = right[w, 0]
        sl = 0.0
        sr = 0.0
        sll = 0.0
        srr = 0.0
        slr = 0.0
        ql = 0.0
        qr = 0.0
        live = 0
        angle = 0.0
        for i in range(n):
            l = left[w, i]
            r = right[w, i]
            ql += l * l
            qr += r * r
            dl = l - l0
            dr = r - r0
            sl += dl
            sr += dr
            sll += dl * dl
            srr += dr * dr
            slr += dl * dr
            if l != 0.0 or r != 0.0:
                live += 1
            # fold atan2(R, L) onto the angle of (|L|, |R|); silent samples give 0
            a = abs(theta[w, i])
            angle += math.pi - a if a > HALF_PI else a

            x = min(max(l, -1.0), 1.0)
            y = min(max(r, -1.0), 1.0)
            ci = min(int((x + 1.0) * half), GRID - 1)
            if x < edges[ci]:
                ci -= 1
            elif x >= edges[ci + 1]:
                ci += 1
            cj = min(int((y + 1.0) * half), GRID - 1)
            if y < edges[cj]:
                cj -= 1
            elif y >= edges[cj + 1]:
                cj += 1
            hits[ci * GRID + cj] += 1

        boxes = 0
        for k in range(N_BOXES):
            if hits[k] > 0:
                boxes += 1
        vl = max(sll / n - (sl / n) ** 2, 0.0)
        vr = max(srr / n - (sr / n) ** 2, 0.0)
        out[w, 0] = boxes
        if math.sqrt(vl) < SIGMA_FLOOR or math.sqrt(vr) < SIGMA_FLOOR:
            out[w, 1] = 0.0
        else:
            cov = slr / n - (sl / n) * (sr / n)
            out[w, 1] = min(max(cov / math.sqrt(vl * vr), -1.0), 1.0)
        out[w, 2] = math.sqrt(ql / n)
        out[w, 3] = math.sqrt(qr / n)
        out[w, 4] = live
        out[w, 5] = math.degrees(angle) / live if live > 0 else NEUTRAL_PAN_DEG


def window_stats(left, right) -> np.ndarray:
    """(n_windows, N) stereo windows -> (n_windows, 6).

    Columns: box_count, corr, rms_L, rms_R, the number of samples where either
    channel is nonzero, and pan in degrees.
    """
    left = np.ascontiguousarray(np.atleast_2d(left), dtype=np.float64)
    right = np.ascontiguousarray(np.atleast_2d(right), dtype=np.float64)
    if left.shape != right.shape:
        raise ValueError("left and right windows differ in shape")
    theta = np.arctan2(right, left)
    out = np.empty((left.shape[0], 6))
    _stats(left, right, theta, _EDGES, out)
    return out
