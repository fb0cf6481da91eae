"""PTB-XL metadata handling and the normal-only train / mixed test split."""
from __future__ import annotations

import ast
import csv
import logging
from dataclasses import dataclass
from pathlib import Path

from ..errors import TsrnetError, WfdbFormatError
from ..signal import Label
from .split import DatasetSplit
from .wfdb import read_wfdb

log = logging.getLogger(__name__)

DATABASE_CSV = "ptbxl_database.csv"
STATEMENTS_CSV = "scp_statements.csv"

# reference counts of the published split (train normal / test normal / test abnormal)
REFERENCE_COUNTS = {"train_normal": 8167, "test_normal": 912, "test_abnormal": 1248}


@dataclass(frozen=True)
class NormalRule:
    normal_superclass: str = "NORM"
    train_folds: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    test_folds: tuple[int, ...] = (9, 10)
    min_likelihood: float = 0.0
    # records whose codes map to no diagnostic superclass at all
    skip_undiagnosed: bool = False
    sampling: str = "lr"  # "lr" = 100 Hz rendition


class UnresolvableCode(TsrnetError):
    pass


def load_superclass_map(root) -> dict[str, str | None]:
    """SCP code -> diagnostic superclass (None for non-diagnostic statements)."""
    path = Path(root) / STATEMENTS_CSV
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        code_col = reader.fieldnames[0]
        for row in reader:
            code = row[code_col].strip()
            diag = row.get("diagnostic", "").strip()
            cls = row.get("diagnostic_class", "").strip()
            is_diag = diag not in ("", "0", "0.0")
            out[code] = cls if (is_diag and cls) else None
    return out


def superclasses(scp_codes: dict[str, float], code_map, min_likelihood: float = 0.0) -> set[str]:
    result = set()
    for code, likelihood in scp_codes.items():
        if code not in code_map:
            raise UnresolvableCode(code)
        if float(likelihood) < min_likelihood:
            continue
        cls = code_map[code]
        if cls is not None:
            result.add(cls)
    return result


def classify(scp_codes: dict[str, float], code_map, rule: NormalRule = NormalRule()) -> Label | None:
    """Normal iff the codes map to the normal superclass and nothing else.

    Returns None for records that should be skipped.
    """
    classes = superclasses(scp_codes, code_map, rule.min_likelihood)
    if classes == {rule.normal_superclass}:
        return Label.NORMAL
    if not classes and rule.skip_undiagnosed:
        return None
    return Label.ABNORMAL


def load_ptbxl_split(root, rule: NormalRule = NormalRule(), limit: int | None = None) -> DatasetSplit:
    root = Path(root)
    db = root / DATABASE_CSV
    if not db.exists():
        raise FileNotFoundError(f"PTB-XL metadata table not found at {db}")
    code_map = load_superclass_map(root)
    path_col = "filename_lr" if rule.sampling == "lr" else "filename_hr"

    train, test = [], []
    with open(db, newline="") as fh:
        for row in csv.DictReader(fh):
            rid = row.get("ecg_id", "?")
            fold = int(float(row["strat_fold"]))
            if fold not in rule.train_folds and fold not in rule.test_folds:
                continue
            try:
                codes = ast.literal_eval(row["scp_codes"])
                label = classify(codes, code_map, rule)
            except UnresolvableCode as exc:
                log.warning("record %s: unresolvable SCP code %s, skipped", rid, exc)
                continue
            except (ValueError, SyntaxError):
                log.warning("record %s: malformed scp_codes field, skipped", rid)
                continue
            if label is None:
                log.info("record %s: no diagnostic superclass, skipped", rid)
                continue
            in_train = fold in rule.train_folds
            if in_train and label is not Label.NORMAL:
                continue
            try:
                rec = read_wfdb(root / row[path_col], label=label)
            except (WfdbFormatError, OSError) as exc:
                log.warning("record %s: unreadable (%s), skipped", rid, exc)
                continue
            (train if in_train else test).append(rec)
            if limit is not None and len(train) + len(test) >= limit:
                break

    split = DatasetSplit(train, test, "ptbxl", 0)
    counts = split.counts()
    log.info("PTB-XL split counts %s (reference %s)", counts, REFERENCE_COUNTS)
    return split
