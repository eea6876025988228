"""Stereo PCM ingestion and the preprocessing chain.

decode -> crop_silence -> normalize -> central_section -> segment
"""
from __future__ import annotations

import logging
import wave
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

PCM16_SCALE = 32768.0


class AudioError(Exception):
    """Raised when a file cannot be turned into a usable stereo clip."""


class SilentInputError(AudioError):
    pass


@dataclass(frozen=True)
class PreprocessConfig:
    silence_threshold_db: float = -60.0
    center_duration_s: float = 180.0
    window_len: int = 4096
    expected_sample_rate: int = 44100
    allow_mono: bool = False

    def __post_init__(self):
        if self.window_len <= 0:
            raise ValueError("window_len must be positive")
        if self.center_duration_s <= 0:
            raise ValueError("center_duration_s must be positive")
        if self.silence_threshold_db >= 0:
            raise ValueError("silence_threshold_db must be negative")


@dataclass(frozen=True, eq=False)
class AudioClip:
    left: np.ndarray
    right: np.ndarray
    sample_rate: int
    short: bool = field(default=False)

    def __post_init__(self):
        left = np.asarray(self.left, dtype=np.float64)
        right = np.asarray(self.right, dtype=np.float64)
        if left.ndim != 1 or left.shape != right.shape:
            raise ValueError("left and right must be 1-D and equally long")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def __len__(self):
        return self.left.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def stereo(self) -> np.ndarray:
        """(2, n) view of the samples."""
        return np.vstack([self.left, self.right])

    def slice(self, start: int, stop: int) -> "AudioClip":
        return replace(self, left=self.left[start:stop], right=self.right[start:stop])


@dataclass(frozen=True, eq=False)
class WindowFrame:
    left: np.ndarray
    right: np.ndarray
    index: int


def decode(path, cfg: PreprocessConfig | None = None) -> AudioClip:
    """Read a 16-bit PCM RIFF/WAVE file into an AudioClip scaled to [-1, 1)."""
    cfg = cfg or PreprocessConfig()
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except (OSError, EOFError, wave.Error) as exc:
        raise AudioError(f"cannot read {path}: {exc}") from exc

    if width != 2:
        raise AudioError(f"{path}: unsupported sample width {8 * width} bit, need 16-bit PCM")
    if channels == 1 and not cfg.allow_mono:
        raise AudioError(f"{path}: expected 2 channels, got 1 (mono up-mix not enabled)")
    if channels not in (1, 2):
        raise AudioError(f"{path}: expected 2 channels, got {channels}")
    if rate != cfg.expected_sample_rate:
        log.warning("%s: sample rate %d Hz differs from expected %d Hz",
                    path, rate, cfg.expected_sample_rate)

    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM16_SCALE
    if channels == 1:
        return AudioClip(data, data.copy(), rate)
    data = data.reshape(-1, 2)
    return AudioClip(data[:, 0].copy(), data[:, 1].copy(), rate)


def write_wav(path, left, right, sample_rate: int) -> None:
    """Write a stereo 16-bit PCM file; samples outside [-1, 1] are clipped."""
    stereo = np.column_stack([np.asarray(left, float), np.asarray(right, float)])
    pcm = np.clip(np.round(stereo * PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(int(sample_rate))
        w.writeframes(pcm.tobytes())


def crop_silence(clip: AudioClip, cfg: PreprocessConfig | None = None) -> AudioClip:
    cfg = cfg or PreprocessConfig()
    if len(clip) == 0:
        raise AudioError("empty clip")
    threshold = 10.0 ** (cfg.silence_threshold_db / 20.0)
    loud = np.flatnonzero(np.maximum(np.abs(clip.left), np.abs(clip.right)) >= threshold)
    if loud.size == 0:
        raise SilentInputError("silent input")
    return clip.slice(int(loud[0]), int(loud[-1]) + 1)


def normalize(clip: AudioClip) -> AudioClip:
    """Peak-normalize so the largest magnitude over both channels is exactly 1."""
    peak = max(np.max(np.abs(clip.left), initial=0.0), np.max(np.abs(clip.right), initial=0.0))
    if peak == 0.0:
        raise SilentInputError("cannot normalize an all-zero clip")
    if peak == 1.0:
        return clip
    return replace(clip, left=clip.left / peak, right=clip.right / peak)


def central_section(clip: AudioClip, cfg: PreprocessConfig | None = None) -> AudioClip:
    """Centered span of ``center_duration_s``; shorter clips pass through flagged."""
    cfg = cfg or PreprocessConfig()
    want = int(round(cfg.center_duration_s * clip.sample_rate))
    n = len(clip)
    if n < want:
        log.warning("clip of %.2f s is shorter than %.0f s; analysing it whole",
                    clip.duration, cfg.center_duration_s)
        return replace(clip, short=True)
    start = (n - want) // 2
    return clip.slice(start, start + want)


def window_count(n_samples: int, window_len: int = 4096) -> int:
    return n_samples // window_len


def segment(clip: AudioClip, cfg: PreprocessConfig | None = None) -> list[WindowFrame]:
    cfg = cfg or PreprocessConfig()
    n = window_count(len(clip), cfg.window_len)
    if n == 0:
        raise AudioError(f"clip of {len(clip)} samples is shorter than one window "
                         f"({cfg.window_len})")
    left = frame_array(clip.left, cfg.window_len)
    right = frame_array(clip.right, cfg.window_len)
    return [WindowFrame(left[i], right[i], i) for i in range(n)]


def frame_array(x: np.ndarray, window_len: int) -> np.ndarray:
    """Non-overlapping (n_windows, window_len) view; trailing remainder dropped."""
    x = np.asarray(x)
    n = x.shape[-1] // window_len
    return x[..., : n * window_len].reshape(*x.shape[:-1], n, window_len)


def preprocess(clip: AudioClip, cfg: PreprocessConfig | None = None) -> AudioClip:
    """crop -> normalize -> central section, the chain applied before filtering."""
    cfg = cfg or PreprocessConfig()
    return central_section(normalize(crop_silence(clip, cfg)), cfg)
