"""Multimodal time-series + spectrogram restoration network for ECG anomaly detection."""

from .ingest import DatasetSplit, SynthSpec, load_ptbxl_split, read_wfdb, synth_dataset
from .network import NetworkConfig, TSRNet, desk_config, init_params, param_count, tiny_config
from .objective import loss_gradients, restoration_loss
from .peaks import build_peak_mask, detect_r_peaks
from .scoring import ScoringConfig, peak_error, roc_auc, score_split
from .signal import EcgRecord, Label, zscore_normalize
from .spectral import StftParams, stft_magnitude
from .trainer import TrainConfig, train

__version__ = "0.1.0"
