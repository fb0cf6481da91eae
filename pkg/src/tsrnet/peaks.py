"""R-peak detection and the window mask used by the peak-based score."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, find_peaks, sosfiltfilt

from .signal import EcgRecord


@dataclass(frozen=True)
class DetectorParams:
    lead: int = 1  # lead II
    band_hz: tuple[float, float] = (5.0, 15.0)
    integration_s: float = 0.15
    refractory_s: float = 0.2
    search_s: float = 0.08
    # Pan-Tompkins running estimates: threshold = noise + frac * (signal - noise)
    threshold_frac: float = 0.25
    learning_s: float = 2.0


@dataclass(frozen=True, eq=False)
class PeakMask:
    indices: np.ndarray
    window_halfwidth: int
    peak_positions: np.ndarray

    def __len__(self):
        return int(self.indices.size)


def _integrated_energy(x: np.ndarray, fs: float, params: DetectorParams) -> np.ndarray:
    lo, hi = params.band_hz
    hi = min(hi, 0.45 * fs)
    sos = butter(2, [lo, hi], btype="bandpass", fs=fs, output="sos")
    padlen = min(len(x) - 1, 3 * 2 * sos.shape[0])
    band = sosfiltfilt(sos, x, padlen=padlen)
    slope = np.gradient(band)
    width = max(1, int(round(params.integration_s * fs)))
    kernel = np.ones(width) / width
    return np.convolve(slope**2, kernel, mode="same")


def detect_peaks_1d(x, fs: float, params: DetectorParams = DetectorParams()) -> np.ndarray:
    """Pan-Tompkins style detector on a single lead; returns sorted sample indices."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 8 or np.ptp(x) == 0:
        return np.zeros(0, dtype=np.int64)
    energy = _integrated_energy(x, fs, params)
    refractory = max(1, int(np.ceil(params.refractory_s * fs)))
    cand, props = find_peaks(energy, distance=refractory, height=0.0)
    if cand.size == 0:
        return np.zeros(0, dtype=np.int64)
    heights = props["peak_heights"]

    # initial estimates from the learning window (whole record if shorter)
    learn = max(1, int(params.learning_s * fs))
    head = energy[:learn]
    spk = head.max()
    if spk < 0.1 * energy.max():
        # quiet lead-in: seed from the whole record instead
        spk = energy.max()
    npk = 0.5 * np.mean(head)
    accepted = []
    for c, h in zip(cand, heights):
        thr = npk + params.threshold_frac * (spk - npk)
        if h > thr:
            accepted.append(c)
            spk = 0.125 * h + 0.875 * spk
        else:
            npk = 0.125 * h + 0.875 * npk

    # refine each QRS location to the largest deflection of the raw lead
    half = max(1, int(round(params.search_s * fs)))
    baseline = np.median(x)
    out = []
    for c in accepted:
        lo, hi = max(0, c - half), min(x.size, c + half + 1)
        seg = np.abs(x[lo:hi] - baseline)
        p = lo + int(np.argmax(seg))
        if out and p - out[-1] < refractory:
            if abs(x[p] - baseline) > abs(x[out[-1]] - baseline):
                out[-1] = p
            continue
        out.append(p)
    return np.asarray(out, dtype=np.int64)


def detect_r_peaks(record: EcgRecord, lead: int | None = None,
                   params: DetectorParams = DetectorParams()) -> np.ndarray:
    lead = params.lead if lead is None else lead
    if not 0 <= lead < record.n_leads:
        raise IndexError(f"lead {lead} out of range for {record.n_leads}-lead record")
    return detect_peaks_1d(record.samples[:, lead], record.sampling_rate_hz, params)


def build_peak_mask(peaks, window_halfwidth: int, n_samples: int) -> PeakMask:
    """Union of ``[p - w, p + w]`` windows clipped to ``[0, D)``."""
    if window_halfwidth < 0:
        raise ValueError("window_halfwidth must be >= 0")
    peaks = np.asarray(peaks, dtype=np.int64).reshape(-1)
    if peaks.size and (peaks.min() < 0 or peaks.max() >= n_samples):
        raise ValueError("peak positions must lie in [0, D)")
    covered = np.zeros(n_samples, dtype=bool)
    for p in peaks:
        covered[max(0, p - window_halfwidth): min(n_samples, p + window_halfwidth + 1)] = True
    return PeakMask(np.flatnonzero(covered), int(window_halfwidth), np.sort(peaks))
