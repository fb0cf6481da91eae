"""ECG record type and per-lead normalization."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import DataIntegrityError

EPS = 1e-8


class Label(str, Enum):
    NORMAL = "normal"
    ABNORMAL = "abnormal"
    UNLABELED = "unlabeled"


@dataclass(frozen=True, eq=False)
class EcgRecord:
    """A multi-lead ECG, ``samples`` shaped (D, N) in millivolts."""

    samples: np.ndarray
    sampling_rate_hz: float
    record_id: str = ""
    label: Label = Label.UNLABELED
    lead_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
            raise DataIntegrityError(
                f"{self.record_id}: samples must be a non-empty (D, N) matrix, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DataIntegrityError(f"{self.record_id}: non-finite sample values")
        if not self.sampling_rate_hz > 0:
            raise DataIntegrityError(f"{self.record_id}: sampling rate must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "label", Label(self.label))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_leads(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sampling_rate_hz

    def with_samples(self, samples) -> "EcgRecord":
        return replace(self, samples=samples)


def zscore(x: np.ndarray, axis=0) -> np.ndarray:
    """Population z-score along ``axis``; constant slices map to zero."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DataIntegrityError("non-finite values cannot be normalized")
    mu = x.mean(axis=axis, keepdims=True)
    centered = x - mu
    # exact zeros for constant slices; the mean may not reproduce the value bit-for-bit
    centered = np.where(np.ptp(x, axis=axis, keepdims=True) == 0, 0.0, centered)
    sd = np.sqrt(np.mean(centered**2, axis=axis, keepdims=True))
    return centered / (sd + EPS)


def zscore_normalize(record: EcgRecord) -> EcgRecord:
    """Per-lead zero-mean, unit-variance copy of ``record``.

    The 1e-8 guard in the denominator sends constant leads to all zeros.
    A lead that is already standardized is returned unchanged to within
    1e-6, so the operation is idempotent.
    """
    if record.n_samples < 2:
        raise DataIntegrityError(f"{record.record_id}: need at least 2 samples per lead")
    return record.with_samples(zscore(record.samples, axis=0))
