from .ptbxl import NormalRule, classify, load_ptbxl_split
from .split import DatasetSplit
from .synth import SynthSpec, load_dataset, save_dataset, synth_dataset
from .wfdb import read_wfdb, write_wfdb

__all__ = [
    "DatasetSplit", "NormalRule", "SynthSpec", "classify", "load_dataset",
    "load_ptbxl_split", "read_wfdb", "save_dataset", "synth_dataset", "write_wfdb",
]
