"""Per-lead STFT magnitude spectrograms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .signal import EcgRecord, zscore


@dataclass(frozen=True)
class StftParams:
    n_fft: int = 64
    hop: int = 8
    window: str = "hann"

    def __post_init__(self):
        if self.hop <= 0:
            raise ValueError("hop must be positive")
        if self.n_fft <= 0 or self.hop > self.n_fft:
            raise ValueError("need 0 < hop <= n_fft")
        if self.window not in ("hann", "rect"):
            raise ValueError(f"unsupported window {self.window!r}")

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        if self.n_fft > n_samples:
            raise ValueError(f"n_fft={self.n_fft} exceeds signal length {n_samples}")
        return (n_samples - self.n_fft) // self.hop + 1

    def window_array(self) -> np.ndarray:
        if self.window == "rect":
            return np.ones(self.n_fft)
        return get_window("hann", self.n_fft, fftbins=True)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    magnitudes: np.ndarray  # (N, H, W)
    params: StftParams


def stft_frames(x: np.ndarray, params: StftParams) -> np.ndarray:
    """Magnitude STFT of ``x`` (D, N) -> (N, H, W). Trailing partial frames are dropped."""
    x = np.asarray(x, dtype=np.float64)
    n_frames = params.n_frames(x.shape[0])
    frames = sliding_window_view(x, params.n_fft, axis=0)[:: params.hop][:n_frames]
    # frames: (W, N, n_fft)
    spec = np.abs(np.fft.rfft(frames * params.window_array(), axis=-1))
    return np.ascontiguousarray(spec.transpose(1, 2, 0))


def stft_magnitude(record: EcgRecord, params: StftParams = StftParams()) -> Spectrogram:
    return Spectrogram(stft_frames(record.samples, params), params)


def normalize_spectrogram(mag: np.ndarray) -> np.ndarray:
    """Single z-score over every entry of one record's spectrogram."""
    return zscore(mag.reshape(-1), axis=0).reshape(mag.shape)
