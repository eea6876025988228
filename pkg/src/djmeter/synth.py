"""Seeded synthetic stereo corpus for desk-scale checks.

Every class archetype differs along axes the features measure: spectral tilt
(band RMS profile), stereo width (correlation, box counting, panning) and
percussiveness (DR, VU/PPM gap).

A corpus spec is JSON::

    {"seed": 7, "sample_rate": 44100, "duration_s": 30,
     "classes": [{"name": "club", "count": 10, "tilt_db_per_oct": -4.5,
                  "width": "mono", "dr": "percussive"}, ...]}

``width`` is "mono", "narrow", "wide" or a number in [0, 1] (share of
decorrelated signal); ``dr`` is "sustained", "moderate", "percussive" or a
number in [0, 1]. Optional per-class keys: ``tempo_bpm``, ``balance`` (-1..1,
negative leans left) and ``jitter`` (per-song spread).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import write_wav
from .features import ManifestEntry, write_manifest

WIDTHS = {"mono": 0.0, "narrow": 0.25, "wide": 0.85}
DR_LEVELS = {"sustained": 0.0, "moderate": 0.5, "percussive": 1.0}
EDGE_SILENCE_S = 0.25
NOISE_LOOP = 1 << 18


class SynthSpecError(ValueError):
    pass


@dataclass(frozen=True)
class Archetype:
    name: str
    count: int
    tilt_db_per_oct: float = -3.0
    width: float = 0.5
    dr: float = 0.5
    tempo_bpm: float = 126.0
    balance: float = 0.0
    jitter: float = 1.0


@dataclass(frozen=True)
class CorpusSpec:
    classes: tuple[Archetype, ...]
    seed: int = 0
    sample_rate: int = 44100
    duration_s: float = 30.0


def _level(value, table, key):
    if isinstance(value, str):
        if value not in table:
            raise SynthSpecError(f"unknown {key} {value!r}; choose from {sorted(table)}")
        return table[value]
    v = float(value)
    if not 0.0 <= v <= 1.0:
        raise SynthSpecError(f"{key} must lie in [0, 1], got {v}")
    return v


def parse_spec(data: dict) -> CorpusSpec:
    if not isinstance(data, dict) or not data.get("classes"):
        raise SynthSpecError("spec needs a non-empty 'classes' list")
    classes, names = [], set()
    for c in data["classes"]:
        try:
            name = str(c["name"])
            count = int(c["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SynthSpecError(f"class entry {c!r} needs 'name' and integer 'count'") from exc
        if count < 1 or name in names or not name or "," in name:
            raise SynthSpecError(f"invalid or duplicate class {name!r} (count {count})")
        names.add(name)
        balance = float(c.get("balance", 0.0))
        if not -1.0 <= balance <= 1.0:
            raise SynthSpecError("balance must lie in [-1, 1]")
        classes.append(Archetype(
            name, count, float(c.get("tilt_db_per_oct", -3.0)),
            _level(c.get("width", 0.5), WIDTHS, "width"),
            _level(c.get("dr", 0.5), DR_LEVELS, "dr"),
            float(c.get("tempo_bpm", 126.0)), balance, float(c.get("jitter", 1.0))))
    spec = CorpusSpec(tuple(classes), int(data.get("seed", 0)),
                      int(data.get("sample_rate", 44100)), float(data.get("duration_s", 30.0)))
    if spec.duration_s <= 2 * EDGE_SILENCE_S or spec.sample_rate < 8000:
        raise SynthSpecError("duration or sample rate too small")
    return spec


def load_spec(path) -> CorpusSpec:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SynthSpecError(f"cannot read corpus spec {path}: {exc}") from exc
    return parse_spec(data)


def _tilted_noise(rng, n, sample_rate, tilt_db_per_oct):
    # shape one loop of noise and repeat it; keeps long songs cheap to render
    m = min(n, NOISE_LOOP)
    spec = np.fft.rfft(rng.standard_normal(m))
    f = np.fft.rfftfreq(m, 1.0 / sample_rate)
    gain = np.zeros_like(f)
    band = (f >= 30.0) & (f <= 18000.0)
    gain[band] = (f[band] / 1000.0) ** (tilt_db_per_oct / (20.0 * np.log10(2.0)))
    x = np.fft.irfft(spec * gain, m)
    return np.resize(x / np.sqrt(np.mean(x * x)), n)


def _envelope(rng, n, sample_rate, dr, tempo_bpm):
    t = np.arange(n) / sample_rate
    beat = 60.0 / tempo_bpm
    phase = (t + rng.uniform(0, beat)) % beat
    floor = 1.0 - 0.97 * dr
    decay = np.exp(-phase / 0.045)
    wobble = 1.0 + 0.05 * np.sin(2 * np.pi * rng.uniform(0.1, 0.3) * t)
    return (floor + (1.0 - floor) * decay) * wobble


def render_song(arch: Archetype, rng: np.random.Generator, sample_rate: int, duration_s: float):
    """One (left, right) pair for an archetype with per-song jitter."""
    n = int(round(duration_s * sample_rate))
    j = arch.jitter
    tilt = arch.tilt_db_per_oct + j * rng.uniform(-0.5, 0.5)
    width = arch.width
    if width > 0:
        width = float(np.clip(width + j * rng.uniform(-0.05, 0.05), 0.01, 1.0))
    dr = float(np.clip(arch.dr + j * rng.uniform(-0.05, 0.05), 0.0, 1.0))
    tempo = arch.tempo_bpm + j * rng.uniform(-3, 3)

    common = _tilted_noise(rng, n, sample_rate, tilt)
    if width > 0:
        side_l = _tilted_noise(rng, n, sample_rate, tilt)
        side_r = _tilted_noise(rng, n, sample_rate, tilt)
    else:
        side_l = side_r = 0.0
    env = _envelope(rng, n, sample_rate, dr, tempo)
    left = ((1.0 - width) * common + width * side_l) * env
    right = ((1.0 - width) * common + width * side_r) * env
    left *= np.sqrt(1.0 - arch.balance) if arch.balance > 0 else 1.0
    right *= np.sqrt(1.0 + arch.balance) if arch.balance < 0 else 1.0

    pad = np.zeros(int(EDGE_SILENCE_S * sample_rate))
    left, right = np.concatenate([pad, left, pad]), np.concatenate([pad, right, pad])
    peak = max(np.max(np.abs(left)), np.max(np.abs(right)))
    return 0.9 * left / peak, 0.9 * right / peak


def generate_corpus(spec: CorpusSpec, out_dir) -> list[ManifestEntry]:
    """Write every song plus ``manifest.csv`` into ``out_dir``.

    The manifest stores paths relative to ``out_dir``; the returned entries
    point at the written files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for ci, arch in enumerate(spec.classes):
        for si in range(arch.count):
            rng = np.random.default_rng([spec.seed, ci, si])
            left, right = render_song(arch, rng, spec.sample_rate, spec.duration_s)
            song_id = f"{arch.name}_{si:03d}"
            write_wav(out_dir / f"{song_id}.wav", left, right, spec.sample_rate)
            entries.append(ManifestEntry(song_id, Path(f"{song_id}.wav"), arch.name))
    write_manifest(out_dir / "manifest.csv", entries)
    return [ManifestEntry(e.song_id, out_dir / e.path, e.label) for e in entries]


def demo_spec(count: int = 20, duration_s: float = 60.0, seed: int = 7) -> CorpusSpec:
    """Three clearly separated archetypes."""
    return parse_spec({
        "seed": seed, "duration_s": duration_s,
        "classes": [
            {"name": "bigroom", "count": count, "tilt_db_per_oct": -4.5, "width": "mono",
             "dr": "percussive"},
            {"name": "trance", "count": count, "tilt_db_per_oct": -1.5, "width": "wide",
             "dr": "sustained"},
            {"name": "house", "count": count, "tilt_db_per_oct": -3.0, "width": "narrow",
             "dr": "moderate"},
        ],
    })
