from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from djmeter import stereo_meters as sm
from djmeter._kernels import window_stats
from djmeter.level_meters import rms
from conftest import N, sine


# interior boundaries -0.9, ..., 0.9 as the doubles nearest to k/10
BOUNDS = [Fraction(float(Fraction(k - 10, 10))) for k in range(1, 20)]


def enumerate_boxes(left, right):
    """Cell occupancy by exact comparison of each sample against every boundary."""
    def cell(v):
        v = min(max(Fraction(float(v)), Fraction(-1)), Fraction(1))
        return sum(v >= b for b in BOUNDS)
    return len({(cell(a), cell(b)) for a, b in zip(left, right)})


def test_constant_frame_is_one_box():
    x = np.full(N, 0.05)
    assert sm.box_count(x, x) == 1


def test_mono_sine_matches_enumeration():
    x = sine(1000)
    assert sm.box_count(x, x) == enumerate_boxes(x, x) == 20


def test_boundary_samples_go_up():
    x = np.array([-0.9, 0.0, 0.1, 1.0, -1.0])
    y = np.zeros(5)
    assert sm._cell(x).tolist() == [1, 10, 11, 19, 0]
    assert sm.box_count(x, y) == enumerate_boxes(x, y) == 5


def test_out_of_range_samples_are_clipped():
    assert sm.box_count(np.array([1.7, 1.0]), np.array([-3.0, -1.0])) == 1


def test_uniform_noise_fills_grid(rng):
    left, right = rng.uniform(-1, 1, (2, N))
    assert 350 <= sm.box_count(left, right) <= 400


@pytest.mark.parametrize("seed", range(5))
def test_random_frames_match_enumeration(seed):
    r = np.random.default_rng(seed)
    # coarse values put many samples exactly on cell boundaries
    left = np.round(r.uniform(-1.2, 1.2, 600), 1)
    right = np.round(r.normal(0, 0.4, 600), 2)
    assert sm.box_count(left, right) == enumerate_boxes(left, right)


def test_panning_examples(rng):
    x = rng.normal(size=N)
    assert sm.panning(x, x) == pytest.approx(45.0, abs=1e-6)
    assert sm.panning(x, np.zeros(N)) == 0.0
    assert sm.panning(np.zeros(N), x) == pytest.approx(90.0, abs=1e-12)
    assert sm.panning(np.zeros(N), np.zeros(N)) == 45.0


def test_panning_skips_silent_samples():
    left = np.array([0.0, 1.0, 0.0])
    right = np.array([0.0, 1.0, 0.0])
    assert sm.panning(left, right) == pytest.approx(45.0, abs=1e-12)


def test_correlation_examples(rng):
    x = rng.normal(size=N)
    assert sm.correlation(x, x) == pytest.approx(1.0, abs=1e-9)
    assert sm.correlation(x, -x) == pytest.approx(-1.0, abs=1e-9)
    assert sm.correlation(x, np.full(N, 0.3)) == 0.0


def test_independent_noise_correlation_small():
    worst = 0.0
    for seed in range(100):
        left, right = np.random.default_rng(seed).normal(size=(2, N))
        worst = max(worst, abs(sm.correlation(left, right)))
    assert worst < 0.08


def test_correlation_matches_numpy(rng):
    left, right = rng.normal(size=(2, N))
    assert sm.correlation(left, right) == pytest.approx(np.corrcoef(left, right)[0, 1], abs=1e-12)


def test_max_cross_correlation_is_unbounded():
    x = np.ones(8)
    assert sm.max_cross_correlation(x, x) == 8.0


def test_kernel_matches_numpy(rng):
    sparse = rng.normal(size=N) * (rng.uniform(size=N) < 0.3)
    left = np.vstack([rng.uniform(-1.1, 1.1, (6, N)), np.zeros((1, N)),
                      np.round(rng.uniform(-1, 1, (1, N)), 1), -np.abs(sparse), -0.0 * sparse])
    right = np.vstack([rng.normal(0, 0.3, (6, N)), np.zeros((1, N)), left[7:8], sparse,
                       -np.abs(sparse)])
    stats = window_stats(left, right)
    np.testing.assert_array_equal(stats[:, 0], sm.box_count(left, right))
    np.testing.assert_allclose(stats[:, 1], sm.correlation(left, right), atol=1e-12)
    np.testing.assert_allclose(stats[:, 2], rms(left), rtol=1e-12)
    np.testing.assert_allclose(stats[:, 3], rms(right), rtol=1e-12)
    live = np.count_nonzero((np.abs(left) + np.abs(right)) > 0, axis=-1)
    np.testing.assert_array_equal(stats[:, 4], live)
    np.testing.assert_allclose(stats[:, 5], sm.panning(left, right), atol=1e-12)


def test_read_stereo():
    x = sine(1000)
    r = sm.read_stereo(x, x)
    assert (r.box_count, r.pan_deg, r.correlation) == (20, pytest.approx(45.0), pytest.approx(1.0))


frames = arrays(np.float64, (2, 256), elements=st.floats(-1, 1, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(frames)
def test_swap_symmetry(f):
    left, right = f
    assert sm.panning(right, left) == pytest.approx(90.0 - sm.panning(left, right), abs=1e-9)
    assert sm.correlation(right, left) == pytest.approx(sm.correlation(left, right), abs=1e-12)
    assert sm.box_count(right, left) == sm.box_count(left, right)


@settings(max_examples=60, deadline=None)
@given(frames, st.floats(0.1, 10), st.floats(-5, 5), st.randoms(use_true_random=False))
def test_invariances(f, a, c, r):
    left, right = f
    p = sm.correlation(left, right)
    if np.std(left) > 1e-6 and np.std(right) > 1e-6:
        assert sm.correlation(a * left + c, right) == pytest.approx(p, abs=1e-7)
    assert sm.panning(a * left, a * right) == pytest.approx(sm.panning(left, right), abs=1e-9)
    perm = list(range(left.size))
    r.shuffle(perm)
    assert sm.box_count(left[perm], right[perm]) == sm.box_count(left, right)
    assert 0 <= sm.panning(left, right) <= 90
    assert -1 <= p <= 1
