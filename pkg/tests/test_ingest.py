import logging

import numpy as np
import pytest

from tsrnet.errors import DataIntegrityError
from tsrnet.ingest import NormalRule, SynthSpec, classify, load_dataset, load_ptbxl_split, save_dataset, synth_dataset
from tsrnet.ingest.ptbxl import load_superclass_map
from tsrnet.ingest.split import DatasetSplit
from tsrnet.signal import EcgRecord, Label


def test_classify_rules(ptbxl_root):
    cmap = load_superclass_map(ptbxl_root)
    assert classify({"NORM": 100.0}, cmap) is Label.NORMAL
    assert classify({"NORM": 100.0, "SR": 0.0}, cmap) is Label.NORMAL
    assert classify({"NORM": 80.0, "IMI": 50.0}, cmap) is Label.ABNORMAL
    assert classify({"NDT": 100.0}, cmap) is Label.ABNORMAL
    assert classify({"SR": 0.0}, cmap, NormalRule(skip_undiagnosed=True)) is None


def test_ptbxl_split(ptbxl_root, caplog):
    with caplog.at_level(logging.WARNING):
        split = load_ptbxl_split(ptbxl_root)
    train_ids = sorted(r.record_id for r in split.train)
    test = {r.record_id: r.label for r in split.test}
    assert train_ids == ["00001_lr", "00008_lr"]
    assert test == {"00004_lr": Label.NORMAL, "00005_lr": Label.ABNORMAL, "00009_lr": Label.ABNORMAL}
    assert all(r.label is Label.NORMAL for r in split.train)
    assert "XYZ" in caplog.text  # unresolvable code logged, record skipped
    assert split.counts() == {"train_normal": 2, "test_normal": 1, "test_abnormal": 2}
    assert split.train[0].samples.shape == (1000, 12)


def test_ptbxl_missing_metadata(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_ptbxl_split(tmp_path)


@pytest.mark.parametrize("rule", [NormalRule(), NormalRule(min_likelihood=60.0),
                                  NormalRule(skip_undiagnosed=True),
                                  NormalRule(train_folds=(1, 2, 3, 4, 5, 6, 7, 8, 9, 10), test_folds=())])
def test_no_abnormal_in_train_for_any_rule(ptbxl_root, rule):
    split = load_ptbxl_split(ptbxl_root, rule)
    assert all(r.label is Label.NORMAL for r in split.train)


def test_split_rejects_abnormal_train():
    r = EcgRecord(np.zeros((4, 1)), 100.0, "x", Label.ABNORMAL)
    with pytest.raises(DataIntegrityError):
        DatasetSplit([r], [], "synthetic")


class TestSynth:
    def test_deterministic(self):
        spec = SynthSpec(3, 2, 2)
        a, b = synth_dataset(spec, 7), synth_dataset(spec, 7)
        for ra, rb in zip(a.train + a.test, b.train + b.test):
            assert np.array_equal(ra.samples, rb.samples)
        c = synth_dataset(spec, 8)
        assert not np.array_equal(a.train[0].samples, c.train[0].samples)

    def test_labels_and_shapes(self):
        split = synth_dataset(SynthSpec(4, 3, 5), 0)
        assert [r.label for r in split.train] == [Label.NORMAL] * 4
        assert split.counts() == {"train_normal": 4, "test_normal": 3, "test_abnormal": 5}
        assert split.train[0].samples.shape == (1000, 12)
        split.check_test_mix()

    def test_amplitude_spike(self):
        split = synth_dataset(SynthSpec(0, 0, 20, anomaly_kinds=("amplitude_spike",)), 5)
        for r in split.test:
            ann = split.annotations[r.record_id]
            assert ann["anomaly"] == "amplitude_spike"
            amps = np.array(ann["r_amplitudes"])
            assert amps.max() >= 2 * np.median(amps)
            # re-detect the perturbation on lead II at the ground-truth peaks
            lead = r.samples[:, 1] - np.median(r.samples[:, 1])
            heights = lead[ann["r_peaks"]]
            assert heights.max() >= 2 * np.median(heights)

    def test_sixty_bpm_peak_count(self):
        split = synth_dataset(SynthSpec(30, 0, 0, heart_rate_bpm_range=(60, 60)), 2)
        for r in split.train:
            assert abs(len(split.annotations[r.record_id]["r_peaks"]) - 10) <= 1

    @pytest.mark.parametrize("kind", ["dropped_beat", "widened_qrs"])
    def test_other_kinds_detectable(self, kind):
        normal = synth_dataset(SynthSpec(0, 10, 0, heart_rate_bpm_range=(60, 60)), 1)
        abn = synth_dataset(SynthSpec(0, 0, 10, anomaly_kinds=(kind,), heart_rate_bpm_range=(60, 60)), 1)
        for r in abn.test:
            ann = abn.annotations[r.record_id]
            assert ann["anomaly"] == kind
            if kind == "dropped_beat":
                gaps = np.diff(ann["r_peaks"])
                assert gaps.max() > 1.6 * np.median(gaps)
            else:
                assert ann["qrs_width_factor"] >= 2.0
        assert all(normal.annotations[r.record_id]["anomaly"] is None for r in normal.test)

    def test_zero_duration_rejected(self):
        with pytest.raises(DataIntegrityError):
            SynthSpec(duration_s=0.0)

    def test_save_load_roundtrip(self, tmp_path):
        spec = SynthSpec(2, 1, 1)
        split = synth_dataset(spec, 4)
        save_dataset(split, tmp_path, spec)
        back = load_dataset(tmp_path)
        assert [r.record_id for r in back.train] == [r.record_id for r in split.train]
        assert [r.label for r in back.test] == [r.label for r in split.test]
        for a, b in zip(split.train + split.test, back.train + back.test):
            np.testing.assert_allclose(a.samples, b.samples, atol=0.5e-3 + 1e-12)
        assert back.annotations == split.annotations
