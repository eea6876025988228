import numpy as np
import pytest
from scipy.signal import sosfilt

from djmeter import filterbank as fb
from djmeter.audio_io import AudioClip
from filter_oracle import measured_gain_db
from conftest import FS, sine


@pytest.fixture(scope="module")
def bank():
    return fb.design_bank(FS)


def test_specs():
    specs = fb.band_specs()
    assert len(specs) == 27
    assert [s.center_hz for s in specs][:4] == [40, 50, 63, 80]
    assert specs[-1].center_hz == 16000
    s = specs[14]
    assert s.center_hz == 1000
    assert s.lower_edge_hz == pytest.approx(890.899, abs=1e-3)
    assert s.upper_edge_hz == pytest.approx(1122.462, abs=1e-3)
    for s in specs:
        assert s.lower_edge_hz < s.center_hz < s.upper_edge_hz
        assert s.exact_center_hz == pytest.approx(s.center_hz, rel=0.03)


def test_design_rejects_low_rate():
    with pytest.raises(fb.FilterDesignError):
        fb.design_bank(8000)


def test_bank_shape(bank):
    assert len(bank) == 27
    for b in bank:
        assert b.sos.shape == (3, 6)


@pytest.mark.parametrize("index", [0, 7, 14, 21, 26])
def test_measured_matches_analytic(bank, index):
    b = bank[index]
    c = b.spec.exact_center_hz
    freqs = [c, b.spec.lower_edge_hz, b.spec.upper_edge_hz, c / 2]
    np.testing.assert_allclose(measured_gain_db(b.sos, freqs, FS), fb.magnitude_db(b, freqs),
                               atol=0.05)


def test_sine_through_bank():
    x = sine(1000, n=3 * FS)
    bands = fb.apply_bank(np.vstack([x, x]), FS)
    settled = bands.bands[:, 0, FS:]
    in_rms = np.sqrt(np.mean(x[FS:] ** 2))
    out = np.sqrt(np.mean(settled ** 2, axis=-1))
    assert abs(20 * np.log10(out[14] / in_rms)) < 0.5
    assert 20 * np.log10(out[10] / in_rms) <= -30


def test_zero_signal(bank):
    out = fb.apply_bank(np.zeros((2, 1000)), FS, bank)
    assert out.bands.shape == (27, 2, 1000)
    assert not out.bands.any()


def test_accepts_clip(bank, rng):
    clip = AudioClip(rng.normal(size=500), rng.normal(size=500), FS)
    a = fb.apply_bank(clip, FS, bank).bands
    b = fb.apply_bank(clip.stereo(), FS, bank).bands
    np.testing.assert_array_equal(a, b)


def test_linearity(bank, rng):
    x = rng.normal(size=(2, 4000))
    a = fb.apply_bank(x, FS, bank).bands
    b = fb.apply_bank(0.37 * x, FS, bank).bands
    np.testing.assert_allclose(b, 0.37 * a, rtol=1e-9, atol=1e-12)


def test_impulse_decay(bank):
    imp = np.zeros(10 * FS)
    imp[0] = 1.0
    for b in bank:
        h = sosfilt(b.sos, imp)
        assert np.max(np.abs(h[-FS // 10:])) < 1e-9, b.spec.center_hz


def test_empty_signal_rejected(bank):
    with pytest.raises(ValueError):
        fb.apply_bank(np.zeros((2, 0)), FS, bank)
