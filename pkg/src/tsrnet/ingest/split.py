from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import DataIntegrityError
from ..signal import EcgRecord, Label


@dataclass
class DatasetSplit:
    """Normal-only training records plus a mixed-label test set.

    ``annotations`` maps record ids to generator ground truth (synthetic
    data only): R-peak sample indices and the injected anomaly kind.
    """

    train: list[EcgRecord]
    test: list[EcgRecord]
    provenance: str
    seed: int = 0
    annotations: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in ("ptbxl", "synthetic"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        bad = [r.record_id for r in self.train if r.label is not Label.NORMAL]
        if bad:
            raise DataIntegrityError(f"non-normal records in train list: {bad[:5]}")

    def check_test_mix(self):
        labels = {r.label for r in self.test}
        if not {Label.NORMAL, Label.ABNORMAL} <= labels:
            raise DataIntegrityError("test split needs at least one normal and one abnormal record")

    def counts(self) -> dict[str, int]:
        return {
            "train_normal": len(self.train),
            "test_normal": sum(r.label is Label.NORMAL for r in self.test),
            "test_abnormal": sum(r.label is Label.ABNORMAL for r in self.test),
        }
