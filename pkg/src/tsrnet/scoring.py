"""Peak-based anomaly score, ROC/AUC, and whole-split scoring reports."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import DataIntegrityError, TsrnetError
from .masking import apply_masks, sample_masks
from .network import TSRNet, restore
from .objective import per_point_terms, restoration_loss
from .peaks import DetectorParams, PeakMask, build_peak_mask, detect_peaks_1d
from .preprocess import preprocess_record
from .signal import Label
from .spectral import StftParams

log = logging.getLogger(__name__)


def peak_error(y, sigma, x, peak_mask: PeakMask | None) -> float:
    """Loss terms averaged over the peak windows, pooled over leads.

    An empty (or missing) mask falls back to the whole-signal mean.
    """
    terms = per_point_terms(y, sigma, x)
    if peak_mask is None or len(peak_mask) == 0:
        return float(np.mean(terms, dtype=np.float64))
    idx = peak_mask.indices
    if idx.max() >= terms.shape[0]:
        raise DataIntegrityError("peak mask exceeds signal length")
    return float(np.mean(terms[idx], dtype=np.float64))


def _is_abnormal(label) -> bool:
    if isinstance(label, (bool, np.bool_)):
        return bool(label)
    if isinstance(label, (int, np.integer)):
        return int(label) == 1
    return Label(label) is Label.ABNORMAL


def roc_auc(labeled_scores):
    """AUC as the Mann-Whitney statistic (ties get half credit) and the ROC points.

    Abnormal records are the positive class. ROC points step through every
    distinct score from high to low, starting at (0, 0) and ending at (1, 1).
    """
    pairs = list(labeled_scores)
    pos = np.array([_is_abnormal(lab) for lab, _ in pairs], dtype=bool)
    scores = np.array([float(s) for _, s in pairs], dtype=np.float64)
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataIntegrityError("AUC needs at least one normal and one abnormal score")

    ranks = rankdata(scores)
    auc = (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    order = np.argsort(-scores, kind="stable")
    s_sorted, p_sorted = scores[order], pos[order]
    tp = np.cumsum(p_sorted)
    fp = np.cumsum(~p_sorted)
    last_of_run = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    fpr = np.r_[0.0, fp[last_of_run] / n_neg]
    tpr = np.r_[0.0, tp[last_of_run] / n_pos]
    return float(auc), list(zip(fpr.tolist(), tpr.tolist()))


def trapezoid_auc(roc_points) -> float:
    pts = np.asarray(roc_points, dtype=np.float64)
    return float(np.trapezoid(pts[:, 1], pts[:, 0]))


@dataclass(frozen=True)
class ScoringConfig:
    peak_based: bool = True
    window_halfwidth: int = 15
    detector: DetectorParams = field(default_factory=DetectorParams)
    # averaged multi-mask inference, off by default
    inference_masks: int = 0
    time_mask_ratio: float = 0.3
    stripe_mask_ratio: float = 0.2
    seed: int = 0


@dataclass
class ScoreReport:
    per_record: list[tuple[str, float, str]]
    auc: float
    roc_points: list[tuple[float, float]]
    config_fingerprint: str = ""
    failed: list[tuple[str, str]] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"# config_fingerprint: {self.config_fingerprint}", "record_id\tlabel\tscore"]
        lines += [f"{rid}\t{label}\t{score!r}" for rid, score, label in self.per_record]
        n_abn = sum(label == Label.ABNORMAL.value for _, _, label in self.per_record)
        lines += [
            "# summary",
            f"# n_records: {len(self.per_record)}",
            f"# n_abnormal: {n_abn}",
            f"# n_normal: {len(self.per_record) - n_abn}",
            f"# n_failed: {len(self.failed)}",
            f"# auc: {self.auc!r}",
        ]
        return "\n".join(lines) + "\n"

    def roc_text(self) -> str:
        lines = [f"# config_fingerprint: {self.config_fingerprint}", "fpr\ttpr"]
        lines += [f"{f!r}\t{t!r}" for f, t in self.roc_points]
        return "\n".join(lines) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        path.with_name(path.stem + "_roc.tsv").write_text(self.roc_text())
        return path

    @classmethod
    def read(cls, path) -> "ScoreReport":
        fingerprint, rows = "", []
        for line in Path(path).read_text().splitlines():
            if line.startswith("# config_fingerprint:"):
                fingerprint = line.split(":", 1)[1].strip()
            elif line.startswith("#") or line.startswith("record_id") or not line.strip():
                continue
            else:
                rid, label, score = line.split("\t")
                rows.append((rid, float(score), label))
        auc, roc = roc_auc([(lab, s) for _, s, lab in rows])
        return cls(rows, auc, roc, fingerprint)


def score_record(model: TSRNet, record, stft: StftParams, cfg: ScoringConfig,
                 item: int = 0) -> float:
    x, spec = preprocess_record(record, stft)
    mask = None
    if cfg.peak_based:
        peaks = detect_peaks_1d(x[:, cfg.detector.lead], record.sampling_rate_hz, cfg.detector)
        mask = build_peak_mask(peaks, cfg.window_halfwidth, x.shape[0])
    if cfg.inference_masks <= 0:
        r = restore(model, x, spec)
        return peak_error(r.y, r.sigma, x, mask)
    scores = []
    for k in range(cfg.inference_masks):
        m = sample_masks(x.shape[0], x.shape[1], spec.shape[-1],
                         np.random.SeedSequence([cfg.seed, item, k]),
                         cfg.time_mask_ratio, cfg.stripe_mask_ratio)
        xm, sm = apply_masks(x, spec, m)
        r = restore(model, xm, sm)
        scores.append(peak_error(r.y, r.sigma, x, mask))
    return float(np.mean(scores))


def score_split(model: TSRNet, split, stft: StftParams = StftParams(),
                cfg: ScoringConfig = ScoringConfig(), fingerprint: str = "",
                records=None) -> ScoreReport:
    """Score every test record (or ``records``) and assemble the AUC report."""
    records = split.test if records is None else records
    if not records:
        raise DataIntegrityError("nothing to score: test split is empty")
    rows, failed = [], []
    for i, rec in enumerate(records):
        try:
            s = score_record(model, rec, stft, cfg, item=i)
        except (TsrnetError, ValueError, IndexError) as exc:
            log.warning("record %s could not be scored: %s", rec.record_id, exc)
            failed.append((rec.record_id, str(exc)))
            continue
        rows.append((rec.record_id, s, rec.label.value))
    auc, roc = roc_auc([(lab, s) for _, s, lab in rows])
    return ScoreReport(rows, auc, roc, fingerprint, failed)


def full_signal_loss(model: TSRNet, record, stft: StftParams = StftParams()) -> float:
    x, spec = preprocess_record(record, stft)
    r = restore(model, x, spec)
    return restoration_loss(r.y, r.sigma, x).total
