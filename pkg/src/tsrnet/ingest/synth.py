"""Deterministic synthetic 12-lead ECG generator for desk-scale experiments.

Beats are sums of Gaussian bumps (P, Q, R, S, T) projected onto twelve leads
with lead-specific gains.  Abnormal records carry exactly one injected
perturbation kind.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import DataIntegrityError
from ..signal import EcgRecord, Label
from .split import DatasetSplit
from .wfdb import read_wfdb, write_wfdb

ANOMALY_KINDS = ("amplitude_spike", "dropped_beat", "widened_qrs")
LEAD_NAMES = ("I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6")

# per-lead gains for the P wave, QRS complex and T wave
_P_GAIN = np.array([0.5, 1.0, 0.5, -0.7, 0.2, 0.7, 0.4, 0.5, 0.5, 0.6, 0.6, 0.5])
_QRS_GAIN = np.array([0.6, 1.0, 0.4, -0.8, 0.25, 0.7, -0.5, 0.35, 0.7, 1.2, 1.0, 0.8])
_T_GAIN = np.array([0.5, 0.8, 0.3, -0.6, 0.2, 0.5, -0.2, 0.6, 0.8, 0.9, 0.7, 0.5])


@dataclass(frozen=True)
class SynthSpec:
    n_normal_train: int = 500
    n_normal_test: int = 100
    n_abnormal_test: int = 100
    duration_s: float = 10.0
    sampling_rate_hz: float = 100.0
    heart_rate_bpm_range: tuple[float, float] = (55.0, 95.0)
    anomaly_kinds: tuple[str, ...] = ANOMALY_KINDS
    n_leads: int = 12
    noise_mv: float = 0.015

    def __post_init__(self):
        for name in ("n_normal_train", "n_normal_test", "n_abnormal_test"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.duration_s > 0:
            raise DataIntegrityError("duration_s must be positive")
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling_rate_hz must be positive")
        lo, hi = self.heart_rate_bpm_range
        if not 0 < lo <= hi:
            raise ValueError("heart_rate_bpm_range must satisfy 0 < lo <= hi")
        unknown = set(self.anomaly_kinds) - set(ANOMALY_KINDS)
        if unknown:
            raise ValueError(f"unknown anomaly kinds {sorted(unknown)}")
        if self.n_abnormal_test and not self.anomaly_kinds:
            raise ValueError("abnormal records requested but no anomaly kinds given")
        if not 1 <= self.n_leads <= len(LEAD_NAMES):
            raise ValueError(f"n_leads must be in 1..{len(LEAD_NAMES)}")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sampling_rate_hz))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["heart_rate_bpm_range"] = list(self.heart_rate_bpm_range)
        d["anomaly_kinds"] = list(self.anomaly_kinds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        if "heart_rate_bpm_range" in d:
            d["heart_rate_bpm_range"] = tuple(d["heart_rate_bpm_range"])
        if "anomaly_kinds" in d:
            d["anomaly_kinds"] = tuple(d["anomaly_kinds"])
        return cls(**d)


@dataclass
class _Beat:
    r_time: float
    r_amp: float = 1.0
    qrs_width: float = 1.0
    has_qrs: bool = True


def _gauss(t, center, width, amp):
    return amp * np.exp(-0.5 * ((t - center) / width) ** 2)


def _render(beats, rr, t, spec, rng):
    n = spec.n_leads
    scale = rng.uniform(0.8, 1.3)
    jit = lambda g: g[:n] * rng.uniform(0.85, 1.15, size=n)  # noqa: E731
    p_gain, qrs_gain, t_gain = jit(_P_GAIN), jit(_QRS_GAIN), jit(_T_GAIN)
    t_offset = 0.16 + 0.1 * np.sqrt(rr)

    p = np.zeros_like(t)
    qrs = np.zeros_like(t)
    tw = np.zeros_like(t)
    for b in beats:
        p += _gauss(t, b.r_time - 0.16, 0.022, 0.15)
        if not b.has_qrs:
            continue
        w = b.qrs_width
        qrs += _gauss(t, b.r_time - 0.025 * w, 0.009 * w, -0.12)
        qrs += _gauss(t, b.r_time, 0.011 * w, b.r_amp)
        qrs += _gauss(t, b.r_time + 0.027 * w, 0.010 * w, -0.25)
        tw += _gauss(t, b.r_time + t_offset, 0.045, 0.3)

    x = scale * (np.outer(p, p_gain) + np.outer(qrs, qrs_gain) + np.outer(tw, t_gain))
    wander_f = rng.uniform(0.1, 0.35)
    wander = 0.05 * np.sin(2 * np.pi * wander_f * t + rng.uniform(0, 2 * np.pi))
    x += wander[:, None] * rng.uniform(0.5, 1.0, size=n)
    x += rng.normal(0.0, spec.noise_mv, size=x.shape)
    return x


def synth_record(spec: SynthSpec, rng: np.random.Generator, anomaly: str | None = None):
    """Generate one record; returns (samples (D, N), R-peak indices, annotation)."""
    fs = spec.sampling_rate_hz
    d = spec.n_samples
    t = np.arange(d) / fs
    hr = rng.uniform(*spec.heart_rate_bpm_range)
    rr = 60.0 / hr
    r_time = rng.uniform(0.0, rr)
    beats = []
    while r_time < spec.duration_s:
        beats.append(_Beat(r_time))
        r_time += rr * (1.0 + rng.uniform(-0.02, 0.02))

    info = {"heart_rate_bpm": float(hr), "anomaly": anomaly}
    # interior beats are the ones an injected perturbation may touch
    inner = [i for i, b in enumerate(beats[1:-1], start=1)
             if 0.5 < b.r_time < spec.duration_s - 0.5] or list(range(len(beats)))
    if anomaly == "amplitude_spike":
        k = min(len(inner), int(rng.integers(1, 3)))
        chosen = rng.choice(inner, size=k, replace=False)
        for i in chosen:
            beats[i].r_amp = float(rng.uniform(2.5, 3.5))
        info["beats"] = sorted(int(i) for i in chosen)
    elif anomaly == "dropped_beat":
        i = int(rng.choice(inner))
        beats[i].has_qrs = False
        info["beats"] = [i]
    elif anomaly == "widened_qrs":
        w = float(rng.uniform(2.2, 3.0))
        for b in beats:
            b.qrs_width = w
            b.r_amp = 0.8
        info["qrs_width_factor"] = w
    elif anomaly is not None:
        raise ValueError(f"unknown anomaly kind {anomaly!r}")

    x = _render(beats, rr, t, spec, rng)
    peaks = np.array([int(round(b.r_time * fs)) for b in beats if b.has_qrs], dtype=np.int64)
    peaks = peaks[peaks < d]
    info["r_amplitudes"] = [float(b.r_amp) for b in beats if b.has_qrs]
    return x, peaks, info


def synth_dataset(spec: SynthSpec, seed: int) -> DatasetSplit:
    """Build a synthetic split; identical ``(spec, seed)`` gives bit-identical arrays."""
    fs = spec.sampling_rate_hz
    lead_names = LEAD_NAMES[: spec.n_leads]
    annotations = {}

    def make(group: int, idx: int, prefix: str, label: Label):
        rng = np.random.default_rng([seed, group, idx])
        anomaly = None
        if label is Label.ABNORMAL:
            anomaly = spec.anomaly_kinds[int(rng.integers(len(spec.anomaly_kinds)))]
        x, peaks, info = synth_record(spec, rng, anomaly)
        rid = f"{prefix}{idx:05d}"
        info["r_peaks"] = peaks.tolist()
        annotations[rid] = info
        return EcgRecord(x, fs, rid, label, lead_names)

    train = [make(0, i, "train_n", Label.NORMAL) for i in range(spec.n_normal_train)]
    test = [make(1, i, "test_n", Label.NORMAL) for i in range(spec.n_normal_test)]
    test += [make(2, i, "test_a", Label.ABNORMAL) for i in range(spec.n_abnormal_test)]
    return DatasetSplit(train, test, "synthetic", seed, annotations)


def save_dataset(split: DatasetSplit, directory, spec: SynthSpec | None = None) -> Path:
    """Write every record as a WFDB file pair plus ``manifest.json``."""
    directory = Path(directory)
    rec_dir = directory / "records"
    entries = []
    for part, records in (("train", split.train), ("test", split.test)):
        for r in records:
            write_wfdb(rec_dir / r.record_id, r.samples, r.sampling_rate_hz,
                       lead_names=list(r.lead_names) or None)
            entries.append({
                "id": r.record_id, "split": part, "label": r.label.value,
                "annotation": split.annotations.get(r.record_id),
            })
    manifest = {
        "provenance": split.provenance,
        "seed": split.seed,
        "spec": spec.to_dict() if spec is not None else None,
        "records": entries,
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return path


def load_dataset(directory) -> DatasetSplit:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    train, test, annotations = [], [], {}
    for e in manifest["records"]:
        rec = read_wfdb(directory / "records" / e["id"], label=e["label"])
        (train if e["split"] == "train" else test).append(rec)
        if e.get("annotation") is not None:
            annotations[e["id"]] = e["annotation"]
    return DatasetSplit(train, test, manifest["provenance"], manifest["seed"], annotations)
