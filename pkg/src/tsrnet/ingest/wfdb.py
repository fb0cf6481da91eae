"""Minimal WFDB reader/writer for single-segment, format-16 records."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import LeadCountError, TruncatedSignalError, UnsupportedFormatError, WfdbFormatError
from ..signal import EcgRecord, Label

_FMT_RE = re.compile(r"^(\d+)(?:x(\d+))?(?::(\d+))?(?:\+(\d+))?$")
_GAIN_RE = re.compile(r"^([-+0-9.eE]+)(?:\((-?\d+)\))?(?:/(\S+))?$")
DEFAULT_GAIN = 200.0


@dataclass(frozen=True)
class SignalSpec:
    filename: str
    fmt: str
    byte_offset: int
    gain: float
    baseline: int
    units: str
    adc_res: int
    adc_zero: int
    description: str


@dataclass(frozen=True)
class WfdbHeader:
    record_name: str
    n_sig: int
    fs: float
    n_samples: int | None
    signals: tuple[SignalSpec, ...]


def parse_header(text: str, record_id: str = "") -> WfdbHeader:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise WfdbFormatError(record_id, "empty header")
    rec = lines[0].split()
    if "/" in rec[0] or (len(rec) > 1 and "/" in rec[1]):
        raise UnsupportedFormatError(record_id, "multi-segment records are not supported")
    try:
        name = rec[0]
        n_sig = int(rec[1])
        fs = float(rec[2].split("/")[0].split("(")[0]) if len(rec) > 2 else 250.0
        n_samples = int(rec[3]) if len(rec) > 3 else None
    except (IndexError, ValueError) as exc:
        raise WfdbFormatError(record_id, f"malformed record line: {lines[0]!r}") from exc

    sig_lines = lines[1:]
    if len(sig_lines) != n_sig:
        raise LeadCountError(
            record_id, f"header declares {n_sig} signals but lists {len(sig_lines)}")

    signals = []
    for ln in sig_lines:
        parts = ln.split(maxsplit=8)
        if len(parts) < 2:
            raise WfdbFormatError(record_id, f"malformed signal line: {ln!r}")
        m = _FMT_RE.match(parts[1])
        if m is None:
            raise UnsupportedFormatError(record_id, f"cannot parse format field {parts[1]!r}")
        fmt, spf, _skew, offset = m.groups()
        if fmt != "16" or (spf not in (None, "1")):
            raise UnsupportedFormatError(record_id, f"signal format {parts[1]!r} is not supported")
        adc_res = int(parts[3]) if len(parts) > 3 else 0
        adc_zero = int(parts[4]) if len(parts) > 4 else 0
        gain, baseline, units = DEFAULT_GAIN, adc_zero, "mV"
        if len(parts) > 2:
            g = _GAIN_RE.match(parts[2])
            if g is None:
                raise WfdbFormatError(record_id, f"cannot parse gain field {parts[2]!r}")
            gain = float(g.group(1)) or DEFAULT_GAIN
            if g.group(2) is not None:
                baseline = int(g.group(2))
            if g.group(3):
                units = g.group(3)
        signals.append(SignalSpec(
            filename=parts[0], fmt=fmt, byte_offset=int(offset or 0), gain=gain,
            baseline=baseline, units=units, adc_res=adc_res, adc_zero=adc_zero,
            description=parts[8] if len(parts) > 8 else ""))

    if len({s.filename for s in signals}) > 1:
        raise UnsupportedFormatError(record_id, "signals spread over several files")
    return WfdbHeader(name, n_sig, fs, n_samples, tuple(signals))


def _header_path(path) -> Path:
    p = Path(path)
    return p if p.suffix == ".hea" else p.with_name(p.name + ".hea")


def read_wfdb(header_path, label: Label | str = Label.UNLABELED) -> EcgRecord:
    """Read a format-16 WFDB record and convert it to millivolts.

    ``header_path`` may point at the ``.hea`` file or be the record stem.
    """
    hea = _header_path(header_path)
    record_id = hea.stem
    if not hea.exists():
        raise WfdbFormatError(record_id, f"header file {hea} not found")
    header = parse_header(hea.read_text(), record_id)
    n = header.n_sig
    if n == 0:
        raise LeadCountError(record_id, "record has no signals")
    dat = hea.parent / header.signals[0].filename
    if not dat.exists():
        raise TruncatedSignalError(record_id, f"signal file {dat.name} not found")
    raw = dat.read_bytes()[header.signals[0].byte_offset:]

    n_samples = header.n_samples
    if n_samples is None:
        n_samples = len(raw) // (2 * n)
    need = n_samples * n * 2
    if len(raw) < need:
        raise TruncatedSignalError(
            record_id, f"signal file holds {len(raw)} bytes, header implies {need}")
    if n_samples == 0:
        raise TruncatedSignalError(record_id, "record has zero samples")

    digital = np.frombuffer(raw[:need], dtype="<i2").reshape(n_samples, n)
    gain = np.array([s.gain for s in header.signals])
    baseline = np.array([s.baseline for s in header.signals], dtype=np.float64)
    physical = (digital.astype(np.float64) - baseline) / gain
    return EcgRecord(
        samples=physical,
        sampling_rate_hz=header.fs,
        record_id=record_id,
        label=label,
        lead_names=tuple(s.description for s in header.signals),
    )


def write_wfdb(stem, samples, fs: float, gain: float = 1000.0, baseline: int = 0,
               lead_names=None) -> Path:
    """Write ``samples`` (D, N, millivolts) as a format-16 record; returns the header path."""
    stem = Path(stem)
    x = np.asarray(samples, dtype=np.float64)
    d, n = x.shape
    digital = np.clip(np.round(x * gain) + baseline, -32767, 32767).astype("<i2")
    name = stem.name
    stem.parent.mkdir(parents=True, exist_ok=True)
    (stem.parent / f"{name}.dat").write_bytes(digital.tobytes())
    if lead_names is None:
        lead_names = [f"ch{i}" for i in range(n)]
    fs_txt = f"{fs:g}"
    lines = [f"{name} {n} {fs_txt} {d}"]
    for i in range(n):
        col = digital[:, i].astype(np.int64)
        checksum = int(col.sum()) % 65536
        checksum = checksum - 65536 if checksum >= 32768 else checksum
        lines.append(f"{name}.dat 16 {gain:g}({baseline})/mV 16 0 {int(col[0])} {checksum} 0 {lead_names[i]}")
    hea = stem.parent / f"{name}.hea"
    hea.write_text("\n".join(lines) + "\n")
    return hea
