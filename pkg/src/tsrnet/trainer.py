"""Inpainting training loop: AdamW with per-step cosine decay."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .checkpoint import save_model
from .errors import DataIntegrityError, NonFiniteError
from .masking import apply_masks, sample_masks
from .network import NetworkConfig, TSRNet, init_params
from .objective import torch_restoration_loss
from .preprocess import preprocess_records
from .signal import Label
from .spectral import StftParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    base_lr: float = 1e-4
    weight_decay: float = 1e-5
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    checkpoint_interval: int = 10
    # fraction of the normals held out to track a validation loss (0 = none)
    val_fraction: float = 0.0
    n_threads: int = 1
    check_finite: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.base_lr <= 0 or self.weight_decay < 0 or self.eps <= 0:
            raise ValueError("base_lr and eps must be positive, weight_decay non-negative")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class MaskConfig:
    time_ratio: float = 0.3
    stripe_ratio: float = 0.2
    stripe_block: int = 1


@dataclass
class TrainState:
    step: int = 0
    exp_avg: dict[str, torch.Tensor] = field(default_factory=dict)
    exp_avg_sq: dict[str, torch.Tensor] = field(default_factory=dict)
    best_loss: float = math.inf
    best_checkpoint: str | None = None
    history: list[dict] = field(default_factory=list)


def cosine_lr(step: int, total_steps: int, base_lr: float) -> float:
    if total_steps <= 0:
        raise ValueError("total_steps must be positive")
    step = min(max(step, 0), total_steps)
    return max(0.0, 0.5 * base_lr * (1.0 + math.cos(math.pi * step / total_steps)))


@torch.no_grad()
def adamw_step(params: dict[str, torch.Tensor], grads: dict[str, torch.Tensor],
               state: TrainState, lr: float, cfg: TrainConfig) -> TrainState:
    """One decoupled-weight-decay Adam update, in place on ``params``.

    Every gradient is checked before anything is touched, so a non-finite
    gradient leaves parameters and moments unchanged.
    """
    for name, g in grads.items():
        if not torch.isfinite(g).all():
            raise NonFiniteError(f"non-finite gradient for parameter {name!r}")
    b1, b2 = cfg.betas
    state.step += 1
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if name not in state.exp_avg:
            state.exp_avg[name] = torch.zeros_like(p)
            state.exp_avg_sq[name] = torch.zeros_like(p)
        m, v = state.exp_avg[name], state.exp_avg_sq[name]
        p.mul_(1.0 - lr * cfg.weight_decay)
        m.mul_(b1).add_(g, alpha=1.0 - b1)
        v.mul_(b2).addcmul_(g, g, value=1.0 - b2)
        denom = (v / bc2).sqrt_().add_(cfg.eps)
        p.addcdiv_(m, denom, value=-lr / bc1)
    return state


@dataclass
class TrainResult:
    model: TSRNet
    state: TrainState
    checkpoint: Path | None


def _masked_batch(ecg, spec, idx, seed, epoch, batch, masks: MaskConfig):
    """ecg (R, D, N) and spec (R, N, H, W) -> masked copies for ``idx``."""
    em, sm = [], []
    d, n = ecg.shape[1:]
    w = spec.shape[-1]
    for i, r in enumerate(idx):
        m = sample_masks(d, n, w, np.random.SeedSequence([seed, epoch, batch, i]),
                         masks.time_ratio, masks.stripe_ratio, masks.stripe_block)
        e, s = apply_masks(ecg[r], spec[r], m)
        em.append(e)
        sm.append(s)
    return np.stack(em), np.stack(sm)


def write_history(path, history, fingerprint: str = ""):
    lines = [f"# config_fingerprint: {fingerprint}", "epoch\tmean_loss\tlr" +
             ("\tval_loss" if history and "val_loss" in history[0] else "")]
    for h in history:
        row = f"{h['epoch']}\t{h['mean_loss']!r}\t{h['lr']!r}"
        if "val_loss" in h:
            row += f"\t{h['val_loss']!r}"
        lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n")


@torch.no_grad()
def _eval_loss(model, ecg, spec, dtype, batch_size=64):
    model.eval()
    total, count = 0.0, 0
    for s in range(0, len(ecg), batch_size):
        e = torch.as_tensor(ecg[s:s + batch_size].transpose(0, 2, 1), dtype=dtype)
        sp = torch.as_tensor(spec[s:s + batch_size], dtype=dtype)
        y, sigma = model(e, sp)
        total += float(torch_restoration_loss(y, sigma, e)) * len(e)
        count += len(e)
    model.train()
    return total / count


def train(split, net_cfg: NetworkConfig = NetworkConfig(), cfg: TrainConfig = TrainConfig(),
          stft: StftParams = StftParams(), masks: MaskConfig = MaskConfig(),
          out_dir=None, fingerprint: str = "", dtype=torch.float32,
          records=None) -> TrainResult:
    """Train on the split's normal records; writes checkpoints if ``out_dir`` is given."""
    records = split.train if records is None else records
    if not records:
        raise DataIntegrityError("empty training set")
    if any(r.label is not Label.NORMAL for r in records):
        raise DataIntegrityError("training records must all be normal")
    if cfg.n_threads:
        torch.set_num_threads(cfg.n_threads)

    np_dtype = np.float64 if dtype == torch.float64 else np.float32
    ecg_all, spec_all = preprocess_records(records, stft, np_dtype)
    n_val = int(round(cfg.val_fraction * len(records)))
    if n_val:
        perm = np.random.default_rng([cfg.seed, 99]).permutation(len(records))
        val_idx, tr_idx = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        ecg_val, spec_val = ecg_all[val_idx], spec_all[val_idx]
        ecg, spec = ecg_all[tr_idx], spec_all[tr_idx]
    else:
        ecg, spec = ecg_all, spec_all
    n_rec, d, n = ecg.shape
    net_cfg = net_cfg.for_inputs(n, d, spec.shape[2], spec.shape[3])
    model = init_params(net_cfg, cfg.seed, dtype)
    model.train()
    params = dict(model.named_parameters())
    state = TrainState()

    steps_per_epoch = math.ceil(n_rec / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    meta = {"config_fingerprint": fingerprint, "stft": vars(stft)}
    ckpt = None

    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n_rec)
        loss_sum, lr = 0.0, cfg.base_lr
        for b in range(steps_per_epoch):
            idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            em, sm = _masked_batch(ecg, spec, idx, cfg.seed, epoch, b, masks)
            target = torch.as_tensor(ecg[idx].transpose(0, 2, 1), dtype=dtype)
            y, sigma = model(torch.as_tensor(em.transpose(0, 2, 1), dtype=dtype),
                             torch.as_tensor(sm, dtype=dtype))
            loss = torch_restoration_loss(y, sigma, target)
            if not torch.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at epoch {epoch + 1}, batch {b}")
            model.zero_grad(set_to_none=True)
            loss.backward()
            lr = cosine_lr(state.step, total_steps, cfg.base_lr)
            grads = {k: p.grad for k, p in params.items() if p.grad is not None}
            adamw_step(params, grads, state, lr, cfg)
            if cfg.check_finite and not all(torch.isfinite(p).all() for p in params.values()):
                raise NonFiniteError(f"parameters became non-finite at step {state.step}")
            loss_sum += loss.item() * len(idx)

        entry = {"epoch": epoch + 1, "mean_loss": loss_sum / n_rec, "lr": lr}
        if n_val:
            entry["val_loss"] = _eval_loss(model, ecg_val, spec_val, dtype)
        state.history.append(entry)
        log.info("epoch %d/%d loss %.5f lr %.3g", epoch + 1, cfg.epochs, entry["mean_loss"], lr)

        if out is not None:
            if n_val and entry["val_loss"] < state.best_loss:
                state.best_loss = entry["val_loss"]
                state.best_checkpoint = str(save_model(model, out / "best.ckpt", {**meta, "epoch": epoch + 1}))
            if cfg.checkpoint_interval and (epoch + 1) % cfg.checkpoint_interval == 0:
                save_model(model, out / f"checkpoint_epoch{epoch + 1:03d}.ckpt", {**meta, "epoch": epoch + 1})
            write_history(out / "loss_history.tsv", state.history, fingerprint)

    if out is not None:
        ckpt = save_model(model, out / "model.ckpt", {**meta, "epoch": cfg.epochs})
    model.eval()
    return TrainResult(model, state, ckpt)
