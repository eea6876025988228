"""27-band third-octave filterbank, 40 Hz to 16 kHz.

Each band is a 6th-order Butterworth bandpass (3rd-order prototype per skirt)
realised as three cascaded biquads, designed on exact base-2 centers
1000 * 2**(k/3) with -3 dB points at center * 2**(+-1/6).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

NOMINAL_CENTERS = (
    40, 50, 63, 80, 100, 125, 160, 200, 250, 315, 400, 500, 630, 800, 1000,
    1250, 1600, 2000, 2500, 3150, 4000, 5000, 6300, 8000, 10000, 12500, 16000,
)
N_BANDS = len(NOMINAL_CENTERS)
REFERENCE_INDEX = 14  # 1 kHz
PROTOTYPE_ORDER = 3
HALF_BAND = 2.0 ** (1.0 / 6.0)


class FilterDesignError(ValueError):
    pass


@dataclass(frozen=True)
class BandSpec:
    index: int
    center_hz: float
    exact_center_hz: float
    lower_edge_hz: float
    upper_edge_hz: float

    @property
    def nominal(self) -> int:
        return NOMINAL_CENTERS[self.index]


@dataclass(frozen=True, eq=False)
class BandFilter:
    spec: BandSpec
    sos: np.ndarray
    sample_rate: int


@dataclass(frozen=True, eq=False)
class BandSet:
    """bands has shape (27, 2, n): band, channel (L, R), sample."""

    bands: np.ndarray
    specs: tuple[BandSpec, ...]

    def band(self, index: int) -> np.ndarray:
        return self.bands[index]


def band_specs() -> tuple[BandSpec, ...]:
    specs = []
    for i, nominal in enumerate(NOMINAL_CENTERS):
        exact = 1000.0 * 2.0 ** ((i - REFERENCE_INDEX) / 3.0)
        specs.append(BandSpec(i, float(nominal), exact, exact / HALF_BAND, exact * HALF_BAND))
    return tuple(specs)


def design_bank(sample_rate: int) -> list[BandFilter]:
    specs = band_specs()
    top = specs[-1].upper_edge_hz
    if sample_rate < 2.0 * top:
        raise FilterDesignError(
            f"sample rate {sample_rate} Hz cannot represent the {NOMINAL_CENTERS[-1]} Hz band "
            f"(needs >= {2.0 * top:.0f} Hz)")
    bank = []
    for spec in specs:
        sos = signal.butter(PROTOTYPE_ORDER, [spec.lower_edge_hz, spec.upper_edge_hz],
                            btype="bandpass", fs=sample_rate, output="sos")
        bank.append(BandFilter(spec, sos, sample_rate))
    return bank


def apply_bank(stereo: np.ndarray, sample_rate: int, bank: list[BandFilter] | None = None) -> BandSet:
    """Filter a (2, n) stereo signal, or an AudioClip, through every band.

    Filter state starts at zero and the whole signal is filtered in one pass.
    """
    if hasattr(stereo, "stereo"):
        stereo = stereo.stereo()
    x = np.atleast_2d(np.asarray(stereo, dtype=np.float64))
    if x.shape[-1] == 0:
        raise ValueError("empty signal")
    bank = bank if bank is not None else design_bank(sample_rate)
    out = np.empty((len(bank),) + x.shape)
    for i, band in enumerate(bank):
        out[i] = signal.sosfilt(band.sos, x, axis=-1)
    return BandSet(out, tuple(b.spec for b in bank))


def magnitude_db(band: BandFilter, freqs_hz) -> np.ndarray:
    """Analytic magnitude response of a band filter in dB."""
    _, h = signal.sosfreqz(band.sos, worN=np.atleast_1d(np.asarray(freqs_hz, float)),
                           fs=band.sample_rate)
    return 20.0 * np.log10(np.maximum(np.abs(h), 1e-300))
