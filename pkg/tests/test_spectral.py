import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsrnet.signal import EcgRecord
from tsrnet.spectral import StftParams, stft_frames, stft_magnitude


def naive_frame_dft(frame, window):
    """Direct O(n^2) one-sided DFT magnitude of a single windowed frame."""
    n = len(frame)
    out = []
    for f in range(n // 2 + 1):
        acc = 0j
        for k in range(n):
            acc += window[k] * frame[k] * complex(math.cos(-2 * math.pi * f * k / n),
                                                  math.sin(-2 * math.pi * f * k / n))
        out.append(abs(acc))
    return np.array(out)


def hann(n):
    return np.array([0.5 - 0.5 * math.cos(2 * math.pi * k / n) for k in range(n)])


def test_zero_signal():
    r = EcgRecord(np.zeros((1000, 12)), 100.0)
    s = stft_magnitude(r)
    assert s.magnitudes.shape == (12, 33, 118)
    assert not s.magnitudes.any()


def test_default_shape_at_100hz():
    x = np.random.default_rng(0).normal(size=(1000, 12))
    assert stft_frames(x, StftParams()).shape == (12, 33, 118)


def test_sinusoid_peak_bin():
    t = np.arange(1000) / 100.0
    x = np.sin(2 * np.pi * 5.0 * t)[:, None]
    mag = stft_frames(x, StftParams(64, 8, "hann"))
    assert np.all(mag[0].argmax(axis=0) == 3)


@pytest.mark.parametrize("alpha", [-3.0, 0.5, 7.25])
def test_homogeneity(alpha):
    x = np.random.default_rng(1).normal(size=(300, 3))
    a = stft_frames(alpha * x, StftParams())
    b = abs(alpha) * stft_frames(x, StftParams())
    np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-12)


@pytest.mark.parametrize("window", ["hann", "rect"])
def test_matches_naive_dft(window):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(64 + 8 * 9, 2))
    p = StftParams(64, 8, window)
    mag = stft_frames(x, p)
    w = hann(64) if window == "hann" else np.ones(64)
    for lead in range(2):
        for t in range(mag.shape[2]):
            ref = naive_frame_dft(x[t * 8: t * 8 + 64, lead], w)
            assert np.max(np.abs(mag[lead, :, t] - ref)) < 1e-6


def test_hop_shift_covariance():
    x = np.random.default_rng(3).normal(size=(400, 2))
    p = StftParams(64, 8)
    a = stft_frames(x, p)
    b = stft_frames(x[8:], p)
    np.testing.assert_allclose(a[:, :, 1:1 + b.shape[2]], b, atol=1e-6)


@settings(max_examples=80, deadline=None)
@given(st.integers(4, 300), st.data())
def test_shape_law(d, data):
    n_fft = data.draw(st.integers(1, d))
    hop = data.draw(st.integers(1, n_fft))
    x = np.ones((d, 2))
    mag = stft_frames(x, StftParams(n_fft, hop))
    assert mag.shape == (2, n_fft // 2 + 1, (d - n_fft) // hop + 1)
    assert np.all(mag >= 0) and np.all(np.isfinite(mag))


def test_invalid_params():
    with pytest.raises(ValueError):
        StftParams(64, 0)
    with pytest.raises(ValueError):
        StftParams(8, 16)
    with pytest.raises(ValueError):
        stft_frames(np.zeros((32, 1)), StftParams(64, 8))
