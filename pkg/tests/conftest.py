from collections import defaultdict

import numpy as np
import pytest

from djmeter.audio_io import write_wav

FS = 44100
N = 4096

# acceptance outcomes: criterion -> [(ok, detail)], printed one line per criterion
ACCEPTANCE = defaultdict(list)


def sine(freq, n=N, fs=FS, amp=1.0, phase=0.0):
    return amp * np.sin(2 * np.pi * freq * np.arange(n) / fs + phase)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def wav_factory(tmp_path):
    def make(name, left, right, fs=FS):
        path = tmp_path / name
        write_wav(path, left, right, fs)
        return path
    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[key]
        ok = all(c[0] for c in checks)
        shown = [d for good, d in checks if not good] if not ok else [d for _, d in checks]
        terminalreporter.write_line(
            f"criterion {key}: {'PASS' if ok else 'FAIL'}  " + "; ".join(shown))
