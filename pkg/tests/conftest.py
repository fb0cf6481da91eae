import numpy as np
import pytest
import torch

from tsrnet.ingest import SynthSpec, synth_dataset
from tsrnet.ingest.wfdb import write_wfdb
from tsrnet.network import tiny_config

torch.set_num_threads(1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grad_cfg():
    """Gradient-check scale: D=64, 12 leads, 11x12 spectrogram (n_fft 20, hop 4)."""
    return tiny_config(enc2d_strides=((1, 1),) * 5).for_inputs(12, 64, 11, 12)


@pytest.fixture(scope="session")
def small_split():
    return synth_dataset(SynthSpec(n_normal_train=24, n_normal_test=6, n_abnormal_test=6), seed=3)


SCP_STATEMENTS = """,description,diagnostic,form,rhythm,diagnostic_class,diagnostic_subclass
NORM,normal ECG,1.0,,,NORM,NORM
IMI,inferior myocardial infarction,1.0,,,MI,IMI
NDT,non-diagnostic T abnormalities,1.0,1.0,,STTC,STTC
LVH,left ventricular hypertrophy,1.0,,,HYP,LVH
SR,sinus rhythm,,,1.0,,
"""


@pytest.fixture
def ptbxl_root(tmp_path):
    """A miniature PTB-XL tree: metadata tables plus 100 Hz WFDB records."""
    rows = [
        # ecg_id, scp_codes, fold
        (1, "{'NORM': 100.0, 'SR': 0.0}", 1),
        (2, "{'NORM': 80.0, 'IMI': 50.0}", 2),
        (3, "{'NDT': 100.0}", 3),
        (4, "{'NORM': 100.0}", 9),
        (5, "{'LVH': 100.0, 'SR': 0.0}", 10),
        (6, "{'XYZ': 100.0}", 4),  # unknown code
        (7, "{'SR': 0.0}", 5),  # no diagnostic superclass
        (8, "{'NORM': 100.0}", 8),
        (9, "{'IMI': 15.0}", 10),
    ]
    spec = SynthSpec(n_normal_train=len(rows), n_normal_test=0, n_abnormal_test=0)
    split = synth_dataset(spec, seed=0)
    lines = ["ecg_id,patient_id,scp_codes,strat_fold,filename_lr,filename_hr"]
    for (eid, codes, fold), rec in zip(rows, split.train):
        rel = f"records100/00000/{eid:05d}_lr"
        write_wfdb(tmp_path / rel, rec.samples, 100.0)
        lines.append(f'{eid},{eid + 100},"{codes}",{fold},{rel},records500/00000/{eid:05d}_hr')
    (tmp_path / "ptbxl_database.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "scp_statements.csv").write_text(SCP_STATEMENTS)
    return tmp_path
