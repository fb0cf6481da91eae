"""TSRNet: 1D/2D convolutional encoders, shared-weight attention fusion, 1D decoder."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import torch
from torch import nn

from .errors import ConfigError, NonFiniteError

MODALITIES = ("combined", "time_only", "spec_only")


@dataclass(frozen=True)
class NetworkConfig:
    # input geometry, normally filled in from the data by ``for_inputs``
    n_leads: int = 12
    signal_length: int = 1000
    spec_bins: int = 33
    spec_frames: int = 118

    enc1d_channels: tuple[int, ...] = (64, 128, 256, 512, 512)
    enc1d_kernels: tuple[int, ...] = (7, 5, 5, 3, 3)
    enc1d_strides: tuple[int, ...] = (2, 2, 2, 2, 2)
    enc2d_channels: tuple[int, ...] = (32, 64, 96, 128, 128)
    enc2d_kernels: tuple[int, ...] = (3, 3, 3, 3, 3)
    # (frequency, time) strides; no padding is applied in this encoder
    enc2d_strides: tuple[tuple[int, int], ...] = ((2, 2), (2, 2), (1, 2), (1, 1), (1, 1))
    d_model: int = 512
    n_heads: int = 4
    decoder_channels: tuple[int, ...] = (512, 256, 128, 64, 24)
    decoder_kernels: tuple[int, ...] = (3, 3, 5, 5, 7)
    decoder_strides: tuple[int, ...] = (2, 2, 2, 2, 2)
    leaky_slope: float = 0.2
    sigma_clamp: float = 10.0
    modality: str = "combined"

    def __post_init__(self):
        for name in ("enc1d_channels", "enc1d_kernels", "enc1d_strides", "enc2d_channels",
                     "enc2d_kernels", "decoder_channels", "decoder_kernels", "decoder_strides"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        object.__setattr__(self, "enc2d_strides",
                           tuple((int(a), int(b)) for a, b in self.enc2d_strides))

    def for_inputs(self, n_leads: int, signal_length: int, spec_bins: int, spec_frames: int):
        cfg = replace(self, n_leads=n_leads, signal_length=signal_length,
                      spec_bins=spec_bins, spec_frames=spec_frames)
        if cfg.decoder_channels[-1] != 2 * n_leads:
            cfg = replace(cfg, decoder_channels=cfg.decoder_channels[:-1] + (2 * n_leads,))
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: [list(v) if isinstance(v, tuple) else v for v in val] if isinstance(val, tuple) else val
                for k, val in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


def tiny_config(**overrides) -> NetworkConfig:
    """Small network used for gradient checks and desk-scale experiments."""
    base = dict(
        enc1d_channels=(8, 8, 8, 8, 8),
        enc2d_channels=(8, 8, 8, 8, 8),
        enc2d_strides=((2, 2), (2, 2), (1, 2), (1, 1), (1, 1)),
        d_model=8, n_heads=2,
        decoder_channels=(8, 8, 8, 8, 24),
    )
    base.update(overrides)
    return NetworkConfig(**base)


def desk_config(**overrides) -> NetworkConfig:
    """Mid-sized network that trains to a useful detector in minutes on one CPU core."""
    base = dict(
        enc1d_channels=(32, 64, 64, 128, 128),
        enc2d_channels=(16, 16, 32, 32, 32),
        d_model=128, n_heads=4,
        decoder_channels=(128, 64, 64, 32, 24),
    )
    base.update(overrides)
    return NetworkConfig(**base)


PRESETS = {"default": NetworkConfig, "desk": desk_config, "tiny": tiny_config}


def conv_out(length: int, kernel: int, stride: int, padding: int = 0) -> int:
    return (length + 2 * padding - kernel) // stride + 1


def token_lengths(cfg: NetworkConfig) -> tuple[int, int]:
    """(L_ecg, L_spec) produced by the two encoders."""
    length = cfg.signal_length
    for k, s in zip(cfg.enc1d_kernels, cfg.enc1d_strides):
        length = conv_out(length, k, s, k // 2)
    h, w = cfg.spec_bins, cfg.spec_frames
    for k, (sh, sw) in zip(cfg.enc2d_kernels, cfg.enc2d_strides):
        h, w = conv_out(h, k, sh), conv_out(w, k, sw)
        if h < 1 or w < 1:
            raise ConfigError(
                f"2D encoder collapses the {cfg.spec_bins}x{cfg.spec_frames} spectrogram to nothing")
    return length, w


def _spec_height(cfg: NetworkConfig) -> int:
    h = cfg.spec_bins
    for k, (sh, _) in zip(cfg.enc2d_kernels, cfg.enc2d_strides):
        h = conv_out(h, k, sh)
    return h


def validate(cfg: NetworkConfig):
    lists = {
        "enc1d_channels": cfg.enc1d_channels, "enc1d_kernels": cfg.enc1d_kernels,
        "enc1d_strides": cfg.enc1d_strides, "enc2d_channels": cfg.enc2d_channels,
        "enc2d_kernels": cfg.enc2d_kernels, "enc2d_strides": cfg.enc2d_strides,
        "decoder_channels": cfg.decoder_channels, "decoder_kernels": cfg.decoder_kernels,
        "decoder_strides": cfg.decoder_strides,
    }
    for name, seq in lists.items():
        if len(seq) != 5:
            raise ConfigError(f"{name} must have exactly 5 entries, got {len(seq)}")
    flat = [v for name, seq in lists.items() for v in (np.ravel(seq))]
    if any(v <= 0 for v in flat):
        raise ConfigError("channel counts, kernels and strides must be positive")
    if cfg.decoder_channels[-1] != 2 * cfg.n_leads:
        raise ConfigError(
            f"inconsistent channel chain: decoder must end in 2*n_leads={2 * cfg.n_leads} "
            f"channels, got {cfg.decoder_channels[-1]}")
    if cfg.d_model % cfg.n_heads:
        raise ConfigError(f"d_model={cfg.d_model} not divisible by n_heads={cfg.n_heads}")
    if cfg.modality not in MODALITIES:
        raise ConfigError(f"modality must be one of {MODALITIES}")
    if cfg.sigma_clamp <= 0:
        raise ConfigError("sigma_clamp must be positive")
    l_ecg, _ = token_lengths(cfg)
    if l_ecg < 1:
        raise ConfigError("1D encoder leaves no tokens")
    if l_ecg * math.prod(cfg.decoder_strides) < cfg.signal_length // 2:
        raise ConfigError("decoder upsampling cannot reach the signal length")


def _block1d(cin, cout, k, s, slope):
    return nn.Sequential(nn.Conv1d(cin, cout, k, s, padding=k // 2), nn.LeakyReLU(slope),
                         nn.BatchNorm1d(cout))


def _block2d(cin, cout, k, s, slope):
    return nn.Sequential(nn.Conv2d(cin, cout, k, s, padding=0), nn.LeakyReLU(slope),
                         nn.BatchNorm2d(cout))


def _up_block(cin, cout, k, s, slope, last=False):
    conv = nn.ConvTranspose1d(cin, cout, k, s, padding=k // 2, output_padding=s - 1)
    if last:
        return nn.Sequential(conv)
    return nn.Sequential(conv, nn.LeakyReLU(slope), nn.BatchNorm1d(cout))


class TSRNet(nn.Module):
    """Restoration network returning ``(y, sigma)``, each shaped (B, N, D)."""

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        validate(cfg)
        self.cfg = cfg
        self.l_ecg, self.l_spec = token_lengths(cfg)
        slope = cfg.leaky_slope
        n = cfg.n_leads

        if cfg.modality != "spec_only":
            chans = (n,) + cfg.enc1d_channels
            self.enc1d = nn.Sequential(*[
                _block1d(chans[i], chans[i + 1], cfg.enc1d_kernels[i], cfg.enc1d_strides[i], slope)
                for i in range(5)])
            self.ecg_proj = (nn.Identity() if chans[-1] == cfg.d_model
                             else nn.Conv1d(chans[-1], cfg.d_model, 1))
        else:
            self.ecg_tokens = nn.Parameter(torch.zeros(self.l_ecg, cfg.d_model))

        if cfg.modality != "time_only":
            chans = (n,) + cfg.enc2d_channels
            self.enc2d = nn.Sequential(*[
                _block2d(chans[i], chans[i + 1], cfg.enc2d_kernels[i], cfg.enc2d_strides[i], slope)
                for i in range(5)])
            # collapses (channels x remaining frequency rows) per time step
            self.freq_collapse = nn.Conv1d(chans[-1] * _spec_height(cfg), cfg.d_model, 1)
        else:
            self.spec_tokens = nn.Parameter(torch.zeros(self.l_spec, cfg.d_model))

        self.attn = nn.MultiheadAttention(cfg.d_model, cfg.n_heads, batch_first=True)
        # no bias: a per-token constant would be cancelled by the LayerNorm below
        self.resample = nn.Linear(self.l_ecg + self.l_spec, self.l_ecg, bias=False)
        self.fuse_norm = nn.LayerNorm(cfg.d_model)

        chans = (cfg.d_model,) + cfg.decoder_channels
        self.decoder = nn.Sequential(*[
            _up_block(chans[i], chans[i + 1], cfg.decoder_kernels[i], cfg.decoder_strides[i],
                      slope, last=(i == 4))
            for i in range(5)])

    def _attend(self, f):
        out, _ = self.attn(f, f, f, need_weights=False)
        return out

    def features(self, ecg: torch.Tensor, spec: torch.Tensor) -> dict[str, torch.Tensor]:
        cfg = self.cfg
        b = ecg.shape[0]
        if ecg.shape[1:] != (cfg.n_leads, cfg.signal_length):
            raise ValueError(f"time-series input {tuple(ecg.shape)} does not match "
                             f"(B, {cfg.n_leads}, {cfg.signal_length})")
        if spec.shape[1:] != (cfg.n_leads, cfg.spec_bins, cfg.spec_frames) or spec.shape[0] != b:
            raise ValueError(f"spectrogram input {tuple(spec.shape)} does not match "
                             f"(B, {cfg.n_leads}, {cfg.spec_bins}, {cfg.spec_frames})")

        if cfg.modality == "spec_only":
            f_ecg = self.ecg_tokens.expand(b, -1, -1)
        else:
            f_ecg = self.ecg_proj(self.enc1d(ecg)).transpose(1, 2)
        if cfg.modality == "time_only":
            f_spec = self.spec_tokens.expand(b, -1, -1)
        else:
            z = self.enc2d(spec)
            z = z.reshape(b, -1, z.shape[-1])
            f_spec = self.freq_collapse(z).transpose(1, 2)

        f_concat = torch.cat([f_ecg, f_spec], dim=1)
        f_att1 = f_concat + self._attend(f_concat)
        f_att2 = f_att1 + self._attend(f_att1)
        # token-axis linear map down to L_ecg tokens, then norm + ReLU per token
        f_fused = self.resample(f_att2.transpose(1, 2)).transpose(1, 2)
        f_fused = torch.relu(self.fuse_norm(f_fused))
        return dict(f_ecg=f_ecg, f_spec=f_spec, f_concat=f_concat, f_att1=f_att1,
                    f_att2=f_att2, f_fused=f_fused)

    def decode(self, f_fused: torch.Tensor):
        out = self.decoder(f_fused.transpose(1, 2))
        d = self.cfg.signal_length
        if out.shape[-1] >= d:
            out = out[..., :d]
        else:
            out = nn.functional.pad(out, (0, d - out.shape[-1]), mode="replicate")
        n = self.cfg.n_leads
        y, sigma = out[:, :n], out[:, n:]
        sigma = sigma.clamp(-self.cfg.sigma_clamp, self.cfg.sigma_clamp)
        return y, sigma

    def forward(self, ecg: torch.Tensor, spec: torch.Tensor):
        y, sigma = self.decode(self.features(ecg, spec)["f_fused"])
        if not (torch.isfinite(y).all() and torch.isfinite(sigma).all()):
            raise NonFiniteError("network produced non-finite outputs")
        return y, sigma


def _fan_in(module: nn.Module) -> int:
    w = module.weight
    if isinstance(module, nn.ConvTranspose1d):
        return w.shape[0] * w.shape[2]
    return int(np.prod(w.shape[1:]))


@torch.no_grad()
def reset_parameters(model: nn.Module, seed: int) -> nn.Module:
    """Fan-in scaled uniform init for conv/linear weights and biases; norms at identity."""
    gen = torch.Generator().manual_seed(int(seed))

    def uniform_(t, bound):
        t.copy_((torch.rand(t.shape, generator=gen, dtype=torch.float64) * 2 - 1) * bound)

    for name, m in model.named_modules():
        if isinstance(m, (nn.Conv1d, nn.Conv2d, nn.ConvTranspose1d, nn.Linear)):
            bound = 1.0 / math.sqrt(_fan_in(m))
            uniform_(m.weight, bound)
            if m.bias is not None:
                uniform_(m.bias, bound)
        elif isinstance(m, nn.MultiheadAttention):
            bound = 1.0 / math.sqrt(m.embed_dim)
            uniform_(m.in_proj_weight, bound)
            uniform_(m.in_proj_bias, bound)
        elif isinstance(m, (nn.BatchNorm1d, nn.BatchNorm2d, nn.LayerNorm)):
            m.weight.fill_(1.0)
            m.bias.fill_(0.0)
            if isinstance(m, (nn.BatchNorm1d, nn.BatchNorm2d)):
                m.reset_running_stats()
    for attr in ("ecg_tokens", "spec_tokens"):
        if hasattr(model, attr):
            getattr(model, attr).zero_()
    return model


def init_params(cfg: NetworkConfig, seed: int = 0, dtype=torch.float32) -> TSRNet:
    model = TSRNet(cfg).to(dtype)
    return reset_parameters(model, seed)


def param_count(params) -> int:
    """Number of learnable scalars; tensors shared between layers count once."""
    if isinstance(params, nn.Module):
        tensors = list(params.parameters())
    elif isinstance(params, dict):
        tensors = list(params.values())
    else:
        tensors = list(params)
    seen, total = set(), 0
    for t in tensors:
        if id(t) in seen:
            continue
        seen.add(id(t))
        total += int(t.numel())
    return total


@dataclass(frozen=True, eq=False)
class Restoration:
    y: np.ndarray  # (D, N)
    sigma: np.ndarray  # (D, N)


def to_batch(ecg, spec, dtype=torch.float32):
    """(D, N) series and (N, H, W) spectrogram -> batched tensors (1, N, D), (1, N, H, W)."""
    e = torch.tensor(np.asarray(ecg).T[None], dtype=dtype)
    s = torch.tensor(np.asarray(spec)[None], dtype=dtype)
    return e, s


@torch.no_grad()
def restore(model: TSRNet, ecg: np.ndarray, spec: np.ndarray) -> Restoration:
    """Run one record through ``model`` in evaluation mode."""
    was_training = model.training
    model.eval()
    dtype = next(model.parameters()).dtype
    try:
        y, sigma = model(*to_batch(ecg, spec, dtype))
    finally:
        model.train(was_training)
    return Restoration(y[0].T.double().numpy(), sigma[0].T.double().numpy())
