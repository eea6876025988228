import math

import numpy as np
import pytest

from djmeter import features as feat
from djmeter import filterbank as fb
from djmeter.audio_io import AudioClip, PreprocessConfig, WindowFrame, frame_array
from conftest import FS, N, sine


@pytest.fixture(scope="module")
def bank():
    return fb.design_bank(FS)


def slot(name):
    return feat.SLOT_NAMES.index(name)


def swapped_slots():
    """Slot permutation and pan mask for exchanging left and right."""
    perm = []
    for name in feat.SLOT_NAMES:
        other = name.replace("_L", "_#").replace("_R", "_L").replace("_#", "_R")
        perm.append(feat.SLOT_NAMES.index(other))
    pan = np.array([n.startswith("pan") for n in feat.SLOT_NAMES])
    return np.array(perm), pan


def test_layout():
    assert feat.N_SLOTS == 146 and feat.N_FEATURES == 292
    assert feat.SLOT_NAMES[:11] == feat.BROADBAND_SLOTS
    assert feat.SLOT_NAMES[11:16] == ("rms_L_40Hz", "rms_R_40Hz", "box_count_40Hz",
                                      "pan_40Hz", "corr_40Hz")
    assert feat.SLOT_NAMES[-1] == "corr_16000Hz"
    assert len(set(feat.FEATURE_NAMES)) == 292
    assert feat.schema_hash() == feat.schema_hash(list(feat.FEATURE_NAMES))
    assert feat.schema_hash() != feat.schema_hash(feat.FEATURE_NAMES[:-1])


def test_zero_frame():
    z = np.zeros(N)
    v = feat.extract_window_features(WindowFrame(z, z, 0), [(z, z)] * 27, FS)
    assert v.shape == (146,)
    for i, name in enumerate(feat.SLOT_NAMES):
        base = name.split("_")[0]
        want = {"vu": -120, "ppm": -120, "dr": 0, "rms": 0, "box": 1, "pan": 45, "corr": 0}[base]
        assert v[i] == want, name


def test_extract_window_needs_27_bands():
    z = np.zeros(N)
    with pytest.raises(ValueError):
        feat.extract_window_features(WindowFrame(z, z, 0), [(z, z)] * 26, FS)


def test_window_matrix_matches_per_window_path(bank, rng):
    left, right = rng.uniform(-1, 1, (2, 3 * N))
    clip = AudioClip(left, right, FS)
    m = feat.window_matrix(clip, N, bank)
    bands = fb.apply_bank(clip, FS, bank).bands
    for w in range(3):
        s = slice(w * N, (w + 1) * N)
        v = feat.extract_window_features(WindowFrame(left[s], right[s], w),
                                         [(b[0, s], b[1, s]) for b in bands], FS)
        np.testing.assert_allclose(m[w], v, rtol=1e-12, atol=1e-12)


def test_mono_sine_window(bank):
    x = sine(1000, n=11 * N)
    m = feat.window_matrix(AudioClip(x, x, FS), N, bank)
    v = m[-1]
    assert v[slot("corr")] == pytest.approx(1.0, abs=1e-9)
    assert v[slot("pan")] == pytest.approx(45.0, abs=1e-9)
    assert v[slot("rms_L")] == pytest.approx(1 / math.sqrt(2), abs=1e-3)
    assert v[slot("rms_R")] == v[slot("rms_L")]
    assert abs(20 * math.log10(v[slot("rms_L_1000Hz")] / v[slot("rms_L")])) < 0.5
    assert 20 * math.log10(v[slot("rms_L_40Hz")]) < -40


def test_swap_symmetry(bank, rng):
    left = rng.normal(0, 0.3, 2 * N)
    right = 0.5 * left + rng.normal(0, 0.2, 2 * N)
    a = feat.window_matrix(AudioClip(left, right, FS), N, bank)
    b = feat.window_matrix(AudioClip(right, left, FS), N, bank)
    perm, pan = swapped_slots()
    expect = a[:, perm]
    expect[:, pan] = 90.0 - expect[:, pan]
    np.testing.assert_allclose(b, expect, rtol=1e-12, atol=1e-9)


def test_aggregate_constant_windows():
    row = np.linspace(-3, 7, 146)
    agg = feat.aggregate(np.tile(row, (5, 1)))
    np.testing.assert_array_equal(agg[:146], row)
    assert not agg[146:].any()


def test_aggregate_matches_brute_force(rng):
    w = rng.normal(size=(40, 146))
    agg = feat.aggregate(w)
    for j in range(146):
        col = w[:, j].tolist()
        mu = math.fsum(col) / len(col)
        sd = math.sqrt(math.fsum((c - mu) ** 2 for c in col) / len(col))
        assert agg[j] == pytest.approx(mu, rel=1e-12, abs=1e-14)
        assert agg[146 + j] == pytest.approx(sd, rel=1e-12)


def test_quantize():
    assert feat.quantize(np.array([1 / 3]))[0] == 0.333333333
    x = np.random.default_rng(0).normal(size=100)
    q = feat.quantize(x)
    np.testing.assert_array_equal(feat.quantize(q), q)


def song(rng, sid, label, n_windows=4):
    w = feat.quantize(rng.normal(size=(n_windows, 146)))
    return feat.SongRecord(sid, label, feat.quantize(feat.aggregate(w)), n_windows, windows=w)


def test_dataset_round_trip(tmp_path, rng):
    recs = [song(rng, f"s{i}", "ab"[i % 2]) for i in range(3)]
    feat.write_dataset(tmp_path / "d.csv", recs)
    assert feat.dataset_kind(tmp_path / "d.csv") == feat.MEAN_STD
    assert feat.read_dataset(tmp_path / "d.csv") == recs


def test_per_window_round_trip(tmp_path, rng):
    recs = [song(rng, f"s{i}", "ab"[i % 2], n_windows=3 + i) for i in range(3)]
    feat.write_dataset(tmp_path / "w.csv", recs, feat.PER_WINDOW)
    back = feat.read_dataset(tmp_path / "w.csv")
    assert back == recs
    for a, b in zip(recs, back):
        np.testing.assert_array_equal(a.windows, b.windows)


def test_empty_dataset(tmp_path):
    feat.write_dataset(tmp_path / "e.csv", [])
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert len(lines) == 2
    assert feat.read_dataset(tmp_path / "e.csv") == []


def test_width_mismatch(tmp_path, rng):
    feat.write_dataset(tmp_path / "d.csv", [song(rng, "s", "a")])
    lines = (tmp_path / "d.csv").read_text().splitlines()
    cut = [lines[0]] + [",".join(l.split(",")[:-1]) for l in lines[1:]]
    (tmp_path / "bad.csv").write_text("\n".join(cut) + "\n")
    with pytest.raises(feat.DatasetError, match="291"):
        feat.read_dataset(tmp_path / "bad.csv")


def test_missing_magic_row(tmp_path):
    (tmp_path / "x.csv").write_text("song_id,label\n")
    with pytest.raises(feat.DatasetError):
        feat.read_dataset(tmp_path / "x.csv")


def test_manifest(tmp_path):
    (tmp_path / "m.csv").write_text("song_id,path,label\na,x.wav,A\nb,/abs/y.wav,B\n")
    entries = feat.read_manifest(tmp_path / "m.csv")
    assert entries[0].path == tmp_path / "x.wav"
    assert str(entries[1].path) == "/abs/y.wav"
    (tmp_path / "dup.csv").write_text("song_id,path,label\na,x.wav,A\na,y.wav,B\n")
    with pytest.raises(feat.DatasetError, match="duplicate"):
        feat.read_manifest(tmp_path / "dup.csv")
    (tmp_path / "hdr.csv").write_text("id,file,dj\n")
    with pytest.raises(feat.DatasetError):
        feat.read_manifest(tmp_path / "hdr.csv")


def test_extract_song_errors_name_song(tmp_path):
    with pytest.raises(feat.ExtractionError, match="song-7"):
        feat.extract_song(tmp_path / "nope.wav", "A", song_id="song-7")


def test_extract_song_deterministic(wav_factory, bank, rng):
    left, right = rng.uniform(-0.5, 0.5, (2, 6 * N))
    path = wav_factory("a.wav", left, right)
    a = feat.extract_song(path, "A", bank=bank)
    b = feat.extract_song(path, "A")
    assert a == b and a.song_id == "a"
    np.testing.assert_array_equal(a.windows, b.windows)
    assert a.window_count == 6 and a.short
    # stored mean slots agree with a brute-force mean of the stored windows
    np.testing.assert_allclose(a.features[:146], a.windows.mean(axis=0), rtol=1e-8, atol=1e-9)


@pytest.mark.slow
def test_180_second_song_window_count(bank):
    r = np.random.default_rng(5)
    x = r.uniform(-1, 1, 181 * FS)
    rec = feat.song_from_clip(AudioClip(x, x[::-1].copy(), FS), "long", "A",
                              PreprocessConfig(), bank)
    assert rec.window_count == 1937 and not rec.short
    assert rec.windows.shape == (1937, 146)
