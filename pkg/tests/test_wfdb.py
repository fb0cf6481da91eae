import numpy as np
import pytest

from tsrnet.errors import LeadCountError, TruncatedSignalError, UnsupportedFormatError
from tsrnet.ingest.wfdb import parse_header, read_wfdb, write_wfdb


def _write_raw(tmp_path, name, header, digital):
    (tmp_path / f"{name}.hea").write_text(header)
    (tmp_path / f"{name}.dat").write_bytes(np.asarray(digital, dtype="<i2").tobytes())
    return tmp_path / f"{name}.hea"


def test_single_sample_conversion(tmp_path):
    hea = _write_raw(tmp_path, "one", "one 1 100 1\none.dat 16 1000(0)/mV 16 0 1000 0 0 II\n", [1000])
    r = read_wfdb(hea)
    assert r.samples.shape == (1, 1)
    assert r.samples[0, 0] == 1.0


def test_baseline_and_gain(tmp_path):
    hea = _write_raw(tmp_path, "b", "b 2 100 2\nb.dat 16 200(10)/mV 16 0 0 0 0 I\n"
                                    "b.dat 16 400(-20)/mV 16 0 0 0 0 II\n",
                     [[210, -20], [10, 380]])
    r = read_wfdb(tmp_path / "b")  # stem works too
    np.testing.assert_allclose(r.samples, [[1.0, 0.0], [0.0, 1.0]])
    assert r.lead_names == ("I", "II")


def test_baseline_defaults_to_adc_zero(tmp_path):
    hea = _write_raw(tmp_path, "z", "z 1 100 1\nz.dat 16 100/mV 16 5 0 0 0 I\n", [105])
    assert read_wfdb(hea).samples[0, 0] == pytest.approx(1.0)


def test_shape_passthrough_12_leads(tmp_path, rng):
    x = rng.normal(size=(1000, 12))
    hea = write_wfdb(tmp_path / "r12", x, 100.0)
    r = read_wfdb(hea)
    assert r.samples.shape == (1000, 12)
    assert r.sampling_rate_hz == 100.0
    np.testing.assert_allclose(r.samples, x, atol=0.5e-3 + 1e-12)


def test_truncated_signal(tmp_path):
    hea = _write_raw(tmp_path, "t", "t 2 100 10\nt.dat 16 1000(0)/mV 16 0 0 0 0 I\n"
                                    "t.dat 16 1000(0)/mV 16 0 0 0 0 II\n", np.zeros(19))
    with pytest.raises(TruncatedSignalError) as exc:
        read_wfdb(hea)
    assert "t" == exc.value.record_id


def test_unsupported_format(tmp_path):
    hea = _write_raw(tmp_path, "f", "f 1 100 4\nf.dat 212 1000(0)/mV 12 0 0 0 0 I\n", np.zeros(4))
    with pytest.raises(UnsupportedFormatError):
        read_wfdb(hea)


def test_lead_count_mismatch(tmp_path):
    hea = _write_raw(tmp_path, "m", "m 3 100 4\nm.dat 16 1000(0)/mV 16 0 0 0 0 I\n"
                                    "m.dat 16 1000(0)/mV 16 0 0 0 0 II\n", np.zeros(12))
    with pytest.raises(LeadCountError):
        read_wfdb(hea)


def test_header_roundtrip(tmp_path, rng):
    """D, N and gain re-derived from the output agree with the header."""
    x = rng.normal(size=(250, 3))
    hea = write_wfdb(tmp_path / "rt", x, 250.0, gain=500.0)
    header = parse_header(hea.read_text())
    r = read_wfdb(hea)
    assert r.samples.shape == (header.n_samples, header.n_sig)
    assert r.sampling_rate_hz == header.fs
    digital = np.frombuffer((tmp_path / "rt.dat").read_bytes(), "<i2").reshape(250, 3)
    np.testing.assert_allclose(r.samples * header.signals[0].gain, digital, atol=1e-9)


def test_ptbxl_style_header():
    text = ("00001_lr 12 100 1000 1984-11-09 09:17:34\n" +
            "".join(f"00001_lr.dat 16 1000.0(0)/mV 16 0 -119 1508 0 {n}\n"
                    for n in ["I", "II", "III", "AVR", "AVL", "AVF", "V1", "V2", "V3", "V4", "V5", "V6"]))
    h = parse_header(text)
    assert (h.n_sig, h.fs, h.n_samples) == (12, 100.0, 1000)
    assert h.signals[0].gain == 1000.0 and h.signals[0].baseline == 0
