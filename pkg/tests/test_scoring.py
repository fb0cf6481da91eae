import itertools

import numpy as np
import pytest

from tsrnet.errors import DataIntegrityError
from tsrnet.network import init_params, tiny_config
from tsrnet.objective import restoration_loss
from tsrnet.peaks import build_peak_mask
from tsrnet.scoring import (ScoreReport, ScoringConfig, full_signal_loss, peak_error, roc_auc,
                            score_split, trapezoid_auc)
from tsrnet.signal import EcgRecord, Label
from tsrnet.spectral import StftParams


def pairwise_auc(normals, abnormals):
    """Brute-force oracle over every (normal, abnormal) pair."""
    credit = 0.0
    for n, a in itertools.product(normals, abnormals):
        credit += 1.0 if a > n else 0.5 if a == n else 0.0
    return credit / (len(normals) * len(abnormals))


def labeled(normals, abnormals):
    return [("normal", s) for s in normals] + [("abnormal", s) for s in abnormals]


class TestAuc:
    def test_perfect(self):
        assert roc_auc(labeled([0.1, 0.2], [0.8, 0.9]))[0] == 1.0

    def test_all_ties(self):
        auc, pts = roc_auc(labeled([0.3] * 4, [0.3] * 3))
        assert auc == 0.5 and pts == [(0.0, 0.0), (1.0, 1.0)]

    def test_pair_count(self):
        assert roc_auc(labeled([0.1, 0.9], [0.5, 0.95]))[0] == 0.75

    def test_label_spellings(self):
        a = roc_auc([(Label.NORMAL, 0.1), (Label.ABNORMAL, 0.2)])[0]
        b = roc_auc([(0, 0.1), (1, 0.2)])[0]
        c = roc_auc([(False, 0.1), (True, 0.2)])[0]
        assert a == b == c == 1.0

    def test_single_class(self):
        with pytest.raises(DataIntegrityError):
            roc_auc(labeled([0.1, 0.2], []))
        with pytest.raises(DataIntegrityError):
            roc_auc(labeled([], [0.1]))

    def test_trapezoid_equals_mann_whitney(self):
        rng = np.random.default_rng(0)
        for i in range(100):
            n_n, n_a = int(rng.integers(1, 30)), int(rng.integers(1, 30))
            if i % 2:  # tie-heavy: few distinct values
                normals, abnormals = rng.integers(0, 4, n_n) / 4, rng.integers(0, 4, n_a) / 4
            else:
                normals, abnormals = rng.normal(size=n_n), rng.normal(0.7, size=n_a)
            auc, pts = roc_auc(labeled(normals, abnormals))
            assert abs(trapezoid_auc(pts) - auc) < 1e-9
            assert auc == pytest.approx(pairwise_auc(normals, abnormals), abs=1e-12)
            assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
            assert len(pts) == len(set(np.r_[normals, abnormals])) + 1

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        normals, abnormals = rng.normal(size=40), rng.normal(0.5, size=25)
        base = roc_auc(labeled(normals, abnormals))[0]
        for f in (np.exp, lambda v: 3 * v + 7, lambda v: np.arctan(v) ** 3):
            assert roc_auc(labeled(f(normals), f(abnormals)))[0] == base


class TestPeakError:
    def test_restricted_mean(self):
        # sigma = 0 and x = 0 make the per-point terms y**2
        y = np.sqrt(np.array([1.0, 5.0, 9.0, 2.0]))[:, None]
        z = np.zeros_like(y)
        assert peak_error(y, z, z, build_peak_mask([1, 2], 0, 4)) == pytest.approx(7.0, rel=1e-15)

    def test_full_mask_is_loss(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            d, n = int(rng.integers(2, 200)), int(rng.integers(1, 13))
            y, s, x = rng.normal(size=(d, n)), rng.normal(size=(d, n)), rng.normal(size=(d, n))
            full = build_peak_mask(np.arange(d), 0, d)
            assert peak_error(y, s, x, full) == restoration_loss(y, s, x).total

    def test_empty_mask_falls_back(self):
        rng = np.random.default_rng(3)
        y, s, x = rng.normal(size=(50, 3)), rng.normal(size=(50, 3)), rng.normal(size=(50, 3))
        total = restoration_loss(y, s, x).total
        assert peak_error(y, s, x, build_peak_mask([], 5, 50)) == total
        assert peak_error(y, s, x, None) == total

    def test_shape_mismatch(self):
        with pytest.raises(DataIntegrityError):
            peak_error(np.zeros((5, 2)), np.zeros((5, 2)), np.zeros((5, 3)), None)
        with pytest.raises(DataIntegrityError):
            peak_error(np.zeros((5, 2)), np.zeros((5, 2)), np.zeros((5, 2)),
                       build_peak_mask([9], 0, 10))


@pytest.fixture(scope="module")
def small_model():
    cfg = tiny_config(enc2d_strides=((1, 1),) * 5).for_inputs(12, 1000, 33, 118)
    return init_params(cfg, 0)


class TestScoreSplit:
    def test_deterministic_and_consistent(self, small_model, small_split):
        a = score_split(small_model, small_split, fingerprint="abc")
        b = score_split(small_model, small_split, fingerprint="abc")
        assert a.to_text() == b.to_text() and a.roc_text() == b.roc_text()
        assert abs(trapezoid_auc(a.roc_points) - a.auc) < 1e-9
        assert [r[0] for r in a.per_record] == [r.record_id for r in small_split.test]

    def test_peak_off_equals_full_loss(self, small_model, small_split):
        rep = score_split(small_model, small_split, cfg=ScoringConfig(peak_based=False))
        for (rid, score, _), rec in zip(rep.per_record, small_split.test):
            assert score == full_signal_loss(small_model, rec, StftParams())

    def test_failed_record_excluded(self, small_model, small_split):
        short = EcgRecord(np.random.default_rng(0).normal(size=(500, 12)), 100.0, "short",
                          Label.ABNORMAL)
        records = list(small_split.test) + [short]
        rep = score_split(small_model, small_split, records=records)
        assert [f[0] for f in rep.failed] == ["short"]
        assert "short" not in [r[0] for r in rep.per_record]

    def test_empty_split(self, small_model, small_split):
        with pytest.raises(DataIntegrityError):
            score_split(small_model, small_split, records=[])

    def test_multi_mask_mode_runs(self, small_model, small_split):
        cfg = ScoringConfig(inference_masks=2)
        a = score_split(small_model, small_split, cfg=cfg)
        assert a.to_text() == score_split(small_model, small_split, cfg=cfg).to_text()

    def test_report_round_trip(self, small_model, small_split, tmp_path):
        rep = score_split(small_model, small_split, fingerprint="f00d")
        path = rep.write(tmp_path / "scores.tsv")
        assert (tmp_path / "scores_roc.tsv").read_text() == rep.roc_text()
        back = ScoreReport.read(path)
        assert back.per_record == rep.per_record
        assert back.auc == rep.auc and back.config_fingerprint == "f00d"
        text = path.read_text()
        assert text.startswith("# config_fingerprint: f00d") and "# summary" in text
