"""Run configuration: one YAML file per run, every key defaulted, unknown keys rejected."""
from __future__ import annotations

import copy
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .checkpoint import fingerprint
from .errors import ConfigError
from .ingest import NormalRule, SynthSpec
from .network import PRESETS, NetworkConfig
from .peaks import DetectorParams
from .scoring import ScoringConfig
from .spectral import StftParams
from .trainer import MaskConfig, TrainConfig


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SynthSection(_Section):
    n_normal_train: int = Field(500, ge=0)
    n_normal_test: int = Field(100, ge=0)
    n_abnormal_test: int = Field(100, ge=0)
    duration_s: float = Field(10.0, gt=0)
    sampling_rate_hz: float = Field(100.0, gt=0)
    heart_rate_bpm_range: tuple[float, float] = (55.0, 95.0)
    anomaly_kinds: tuple[Literal["amplitude_spike", "dropped_beat", "widened_qrs"], ...] = (
        "amplitude_spike", "dropped_beat", "widened_qrs")
    n_leads: int = Field(12, ge=1, le=12)
    noise_mv: float = Field(0.015, ge=0)


class NormalRuleSection(_Section):
    normal_superclass: str = "NORM"
    train_folds: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8)
    test_folds: tuple[int, ...] = (9, 10)
    min_likelihood: float = 0.0
    skip_undiagnosed: bool = False


class DatasetSection(_Section):
    kind: Literal["synth", "ptbxl"] = "synth"
    # synthetic data directory or PTB-XL root; env TSRNET_DATA_ROOT is the fallback
    root: Optional[str] = None
    limit: Optional[int] = Field(None, ge=1)
    synth: SynthSection = SynthSection()
    normal_rule: NormalRuleSection = NormalRuleSection()


class StftSection(_Section):
    n_fft: int = Field(64, gt=0)
    hop: int = Field(8, gt=0)
    window: Literal["hann", "rect"] = "hann"


class MaskSection(_Section):
    time_ratio: float = Field(0.3, ge=0.0, le=1.0)
    stripe_ratio: float = Field(0.2, ge=0.0, le=1.0)
    stripe_block: int = Field(1, ge=1)


class NetworkSection(_Section):
    preset: Literal["default", "desk", "tiny"] = "default"
    enc1d_channels: Optional[tuple[int, ...]] = None
    enc1d_kernels: Optional[tuple[int, ...]] = None
    enc1d_strides: Optional[tuple[int, ...]] = None
    enc2d_channels: Optional[tuple[int, ...]] = None
    enc2d_kernels: Optional[tuple[int, ...]] = None
    enc2d_strides: Optional[tuple[tuple[int, int], ...]] = None
    d_model: Optional[int] = Field(None, gt=0)
    n_heads: Optional[int] = Field(None, gt=0)
    decoder_channels: Optional[tuple[int, ...]] = None
    decoder_kernels: Optional[tuple[int, ...]] = None
    decoder_strides: Optional[tuple[int, ...]] = None
    leaky_slope: Optional[float] = None
    sigma_clamp: Optional[float] = Field(None, gt=0)
    modality: Literal["combined", "time_only", "spec_only"] = "combined"


class TrainSection(_Section):
    epochs: int = Field(50, ge=1)
    batch_size: int = Field(32, ge=1)
    base_lr: float = Field(1e-4, gt=0)
    weight_decay: float = Field(1e-5, ge=0)
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = Field(1e-8, gt=0)
    checkpoint_interval: int = Field(10, ge=0)
    val_fraction: float = Field(0.0, ge=0.0, lt=1.0)


class DetectorSection(_Section):
    lead: int = Field(1, ge=0)
    band_hz: tuple[float, float] = (5.0, 15.0)
    integration_s: float = Field(0.15, gt=0)
    refractory_s: float = Field(0.2, gt=0)
    search_s: float = Field(0.08, gt=0)
    threshold_frac: float = Field(0.25, ge=0.0, le=1.0)
    learning_s: float = Field(2.0, gt=0)


class ScoringSection(_Section):
    peak_based: bool = True
    window_halfwidth: int = Field(15, ge=0)
    inference_masks: int = Field(0, ge=0)
    detector: DetectorSection = DetectorSection()


class RunConfig(_Section):
    seed: int = 0
    output_dir: str = "runs/default"
    workers: int = Field(1, ge=1)
    dataset: DatasetSection = DatasetSection()
    stft: StftSection = StftSection()
    mask: MaskSection = MaskSection()
    network: NetworkSection = NetworkSection()
    train: TrainSection = TrainSection()
    scoring: ScoringSection = ScoringSection()

    def fingerprint(self) -> str:
        return fingerprint(self.model_dump(mode="json"))

    # conversions to the library's own parameter objects

    def stft_params(self) -> StftParams:
        return StftParams(**self.stft.model_dump())

    def mask_config(self) -> MaskConfig:
        return MaskConfig(**self.mask.model_dump())

    def synth_spec(self) -> SynthSpec:
        return SynthSpec(**self.dataset.synth.model_dump())

    def normal_rule(self) -> NormalRule:
        return NormalRule(**self.dataset.normal_rule.model_dump())

    def network_config(self) -> NetworkConfig:
        overrides = {k: v for k, v in self.network.model_dump().items()
                     if k != "preset" and v is not None}
        return PRESETS[self.network.preset](**overrides)

    def train_config(self) -> TrainConfig:
        return TrainConfig(seed=self.seed, n_threads=self.workers, **self.train.model_dump())

    def scoring_config(self) -> ScoringConfig:
        s = self.scoring.model_dump()
        det = DetectorParams(**s.pop("detector"))
        return ScoringConfig(detector=det, time_mask_ratio=self.mask.time_ratio,
                             stripe_mask_ratio=self.mask.stripe_ratio, seed=self.seed, **s)


def _format_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def _set_dotted(tree: dict, dotted: str, value):
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{dotted}: {k} is not a section")
    node[keys[-1]] = value


def config_from_dict(data: dict | None, overrides=()) -> RunConfig:
    data = copy.deepcopy(data or {})
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        key, raw = item.split("=", 1)
        _set_dotted(data, key.strip(), yaml.safe_load(raw))
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_error(exc)) from None


def parse_config(path=None, overrides=()) -> RunConfig:
    """Load a YAML run config (or defaults when ``path`` is None)."""
    data = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        try:
            data = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: malformed YAML: {exc}") from None
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, overrides)
