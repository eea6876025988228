"""146-slot per-window feature vectors, song aggregation and dataset files."""
from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from . import audio_io, filterbank
from .audio_io import AudioClip, PreprocessConfig, WindowFrame
from ._kernels import window_stats
from .level_meters import dr, ppm, vu

log = logging.getLogger(__name__)

LAYOUT_VERSION = "v1"
DATASET_MAGIC = "djmeter-dataset"
MEAN_STD = "mean_std"
PER_WINDOW = "per_window"
AGGREGATIONS = (MEAN_STD, PER_WINDOW)
SIG_DIGITS = 9

BROADBAND_SLOTS = ("vu_L", "vu_R", "ppm_L", "ppm_R", "dr_L", "dr_R", "rms_L", "rms_R",
                   "box_count", "pan", "corr")
BAND_SLOTS = ("rms_L", "rms_R", "box_count", "pan", "corr")


def _slot_names() -> tuple[str, ...]:
    names = list(BROADBAND_SLOTS)
    for hz in filterbank.NOMINAL_CENTERS:
        names += [f"{slot}_{hz}Hz" for slot in BAND_SLOTS]
    return tuple(names)


SLOT_NAMES = _slot_names()
N_SLOTS = len(SLOT_NAMES)
FEATURE_NAMES = tuple(f"mean_{s}" for s in SLOT_NAMES) + tuple(f"std_{s}" for s in SLOT_NAMES)
N_FEATURES = len(FEATURE_NAMES)
assert N_SLOTS == 146 and N_FEATURES == 292


class DatasetError(ValueError):
    pass


class ExtractionError(RuntimeError):
    def __init__(self, song_id, cause):
        super().__init__(f"{song_id}: {cause}")
        self.song_id = song_id


def schema_hash(names=FEATURE_NAMES) -> str:
    """Short digest of the ordered feature names; guards models against layout drift."""
    h = hashlib.sha256((LAYOUT_VERSION + "\n" + "\n".join(names)).encode())
    return h.hexdigest()[:16]


def quantize(x):
    """Round to SIG_DIGITS significant digits so text round-trips are exact."""
    x = np.asarray(x, dtype=np.float64)
    flat = [float(format(v, f".{SIG_DIGITS}g")) for v in x.ravel()]
    return np.array(flat, dtype=np.float64).reshape(x.shape)


# -- per-window vectors -----------------------------------------------------

def broadband_features(left, right, sample_rate: int) -> np.ndarray:
    """(n_windows, N) stereo windows -> (n_windows, 11) broadband slots."""
    left, right = np.atleast_2d(left), np.atleast_2d(right)
    stats = window_stats(left, right)
    cols = [vu(left, sample_rate), vu(right, sample_rate), ppm(left), ppm(right),
            dr(left, sample_rate), dr(right, sample_rate), stats[:, 2], stats[:, 3],
            stats[:, 0], stats[:, 5], stats[:, 1]]
    return np.column_stack(cols)


def band_features(left, right) -> np.ndarray:
    """(n_windows, N) band-filtered stereo windows -> (n_windows, 5) band slots."""
    left, right = np.atleast_2d(left), np.atleast_2d(right)
    stats = window_stats(left, right)
    return stats[:, [2, 3, 0, 5, 1]]


def extract_window_features(frame: WindowFrame, band_frames, sample_rate: int) -> np.ndarray:
    """Fill the 146 slots for one window.

    ``band_frames`` holds 27 (left, right) pairs (or WindowFrames) covering the
    same time span as ``frame``, already band-filtered.
    """
    band_frames = list(band_frames)
    if len(band_frames) != filterbank.N_BANDS:
        raise ValueError(f"need {filterbank.N_BANDS} band windows, got {len(band_frames)}")
    parts = [broadband_features(frame.left, frame.right, sample_rate)[0]]
    for bf in band_frames:
        bl, br = (bf.left, bf.right) if isinstance(bf, WindowFrame) else bf
        if len(bl) != len(frame.left):
            raise ValueError("band window not aligned with broadband window")
        parts.append(band_features(bl, br)[0])
    return np.concatenate(parts)


def window_matrix(clip: AudioClip, window_len: int = 4096, bank=None) -> np.ndarray:
    """(n_windows, 146) feature matrix of an already preprocessed clip.

    Bands are filtered over the whole clip, then cut on the same window grid as
    the broadband signal; one band is held in memory at a time.
    """
    n_win = audio_io.window_count(len(clip), window_len)
    if n_win == 0:
        raise audio_io.AudioError(f"clip of {len(clip)} samples is shorter than one window")
    bank = bank if bank is not None else filterbank.design_bank(clip.sample_rate)
    stereo = clip.stereo()
    framed = audio_io.frame_array(stereo, window_len)
    out = np.empty((n_win, N_SLOTS))
    out[:, :len(BROADBAND_SLOTS)] = broadband_features(framed[0], framed[1], clip.sample_rate)
    col = len(BROADBAND_SLOTS)
    for band in bank:
        filtered = audio_io.frame_array(signal.sosfilt(band.sos, stereo, axis=-1), window_len)
        out[:, col:col + len(BAND_SLOTS)] = band_features(filtered[0], filtered[1])
        col += len(BAND_SLOTS)
    return out


def aggregate(windows: np.ndarray) -> np.ndarray:
    """Per-slot mean then per-slot population standard deviation (292 values)."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 2 or windows.shape[0] < 1:
        raise ValueError("need a non-empty (n_windows, n_slots) matrix")
    const = np.all(windows == windows[0], axis=0)
    mean = np.where(const, windows[0], windows.mean(axis=0))
    std = np.where(const, 0.0, windows.std(axis=0))
    return np.concatenate([mean, std])


# -- songs ------------------------------------------------------------------

@dataclass(eq=False)
class SongRecord:
    song_id: str
    label: str
    features: np.ndarray
    window_count: int
    windows: np.ndarray | None = field(default=None, repr=False)
    short: bool = False

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.window_count < 1:
            raise ValueError("window_count must be >= 1")

    def __eq__(self, other):
        if not isinstance(other, SongRecord):
            return NotImplemented
        return (self.song_id == other.song_id and self.label == other.label
                and self.window_count == other.window_count
                and np.array_equal(self.features, other.features))


def song_from_clip(clip: AudioClip, song_id: str, label: str,
                   cfg: PreprocessConfig | None = None, bank=None) -> SongRecord:
    cfg = cfg or PreprocessConfig()
    clip = audio_io.preprocess(clip, cfg)
    windows = quantize(window_matrix(clip, cfg.window_len, bank))
    return SongRecord(song_id, label, quantize(aggregate(windows)), windows.shape[0],
                      windows=windows, short=clip.short)


def extract_song(path, label: str, cfg: PreprocessConfig | None = None,
                 song_id: str | None = None, bank=None) -> SongRecord:
    """decode -> crop -> normalize -> central section -> filterbank -> windows -> aggregate."""
    song_id = song_id if song_id is not None else Path(path).stem
    try:
        clip = audio_io.decode(path, cfg)
        return song_from_clip(clip, song_id, label, cfg, bank)
    except (audio_io.AudioError, filterbank.FilterDesignError, ValueError) as exc:
        raise ExtractionError(song_id, exc) from exc


# -- manifest ---------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    song_id: str
    path: Path
    label: str


def read_manifest(path) -> list[ManifestEntry]:
    """Parse a ``song_id,path,label`` table; relative paths resolve against its folder."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["song_id", "path", "label"]:
        raise DatasetError(f"{path}: manifest header must be song_id,path,label")
    entries, seen = [], set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise DatasetError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        sid, p, label = (c.strip() for c in row)
        if sid in seen:
            raise DatasetError(f"{path}:{lineno}: duplicate song_id {sid!r}")
        seen.add(sid)
        p = Path(p)
        entries.append(ManifestEntry(sid, p if p.is_absolute() else path.parent / p, label))
    return entries


def write_manifest(path, entries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["song_id", "path", "label"])
        for e in entries:
            w.writerow([e.song_id, str(e.path), e.label])


# -- dataset files ----------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), f".{SIG_DIGITS}g")


def write_dataset(path, records, aggregation: str = MEAN_STD) -> None:
    """Write song records as a comma-separated table with a version comment row."""
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation {aggregation!r}")
    with open(path, "w", newline="") as fh:
        fh.write(f"# {DATASET_MAGIC} {LAYOUT_VERSION} {aggregation}\n")
        w = csv.writer(fh, lineterminator="\n")
        if aggregation == MEAN_STD:
            w.writerow(["song_id", "label", "window_count", *FEATURE_NAMES])
            for r in records:
                if r.features.shape != (N_FEATURES,):
                    raise DatasetError(f"{r.song_id}: expected {N_FEATURES} features, "
                                       f"got {r.features.shape}")
                w.writerow([r.song_id, r.label, r.window_count, *map(_fmt, r.features)])
        else:
            w.writerow(["song_id", "label", "window_index", *SLOT_NAMES])
            for r in records:
                if r.windows is None:
                    raise DatasetError(f"{r.song_id}: per-window rows not available")
                for i, row in enumerate(r.windows):
                    w.writerow([r.song_id, r.label, i, *map(_fmt, row)])


def dataset_kind(path) -> str:
    with open(path) as fh:
        first = fh.readline().split()
    if len(first) != 4 or first[:2] != ["#", DATASET_MAGIC]:
        raise DatasetError(f"{path}: missing '# {DATASET_MAGIC} <version> <aggregation>' row")
    if first[2] != LAYOUT_VERSION:
        raise DatasetError(f"{path}: unknown layout version {first[2]!r}")
    if first[3] not in AGGREGATIONS:
        raise DatasetError(f"{path}: unknown aggregation {first[3]!r}")
    return first[3]


def read_dataset(path) -> list[SongRecord]:
    kind = dataset_kind(path)
    with open(path, newline="") as fh:
        fh.readline()
        reader = csv.reader(fh)
        header = next(reader, None)
        names = FEATURE_NAMES if kind == MEAN_STD else SLOT_NAMES
        third = "window_count" if kind == MEAN_STD else "window_index"
        expected = ["song_id", "label", third, *names]
        if header is None:
            raise DatasetError(f"{path}: missing header row")
        if len(header) != len(expected):
            raise DatasetError(f"{path}: header has {len(header) - 3} feature columns, "
                               f"expected {len(names)}")
        if header != expected:
            bad = next(h for h, e in zip(header, expected) if h != e)
            raise DatasetError(f"{path}: unexpected column {bad!r}")
        rows = []
        for lineno, row in enumerate(reader, start=3):
            if len(row) != len(expected):
                raise DatasetError(f"{path}:{lineno}: row width {len(row)} != {len(expected)}")
            rows.append(row)

    if kind == MEAN_STD:
        return [SongRecord(r[0], r[1], np.array(r[3:], dtype=np.float64), int(r[2]))
                for r in rows]

    grouped: dict[str, list] = {}
    for r in rows:
        grouped.setdefault(r[0], []).append(r)
    records = []
    for sid, rs in grouped.items():
        rs.sort(key=lambda r: int(r[2]))
        windows = np.array([r[3:] for r in rs], dtype=np.float64)
        records.append(SongRecord(sid, rs[0][1], quantize(aggregate(windows)),
                                  len(rs), windows=windows))
    return records
