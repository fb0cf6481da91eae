"""Record -> network inputs: per-lead z-scored series and z-scored spectrogram."""
from __future__ import annotations

import numpy as np

from .signal import EcgRecord, zscore_normalize
from .spectral import StftParams, normalize_spectrogram, stft_frames


def preprocess_record(record: EcgRecord, stft: StftParams = StftParams()):
    """Returns ``(ecg (D, N), spec (N, H, W))`` as float64 arrays."""
    x = zscore_normalize(record).samples
    spec = normalize_spectrogram(stft_frames(x, stft))
    return np.asarray(x), spec


def preprocess_records(records, stft: StftParams = StftParams(), dtype=np.float32):
    """Stacked inputs for a list of records: ``(R, D, N)`` and ``(R, N, H, W)``."""
    if not records:
        raise ValueError("no records to preprocess")
    pairs = [preprocess_record(r, stft) for r in records]
    shapes = {p[0].shape for p in pairs}
    if len(shapes) != 1:
        raise ValueError(f"records have differing shapes {sorted(shapes)}")
    ecg = np.stack([p[0] for p in pairs]).astype(dtype)
    spec = np.stack([p[1] for p in pairs]).astype(dtype)
    return ecg, spec
