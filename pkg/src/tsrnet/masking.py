"""Masking-out for inpainting: random points on the series, time stripes on the spectrogram."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _check_ratio(ratio):
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"mask ratio must lie in [0, 1], got {ratio}")


def step_seed(seed: int, epoch: int, batch: int, item: int = 0) -> np.random.SeedSequence:
    """Per-step seed material derived from the global seed and loop position."""
    return np.random.SeedSequence([seed, epoch, batch, item])


def sample_time_mask(n_samples: int, n_leads: int, ratio: float, seed) -> np.ndarray:
    """Sorted masked sample indices, shape (N, floor(ratio * D)); leads drawn independently."""
    _check_ratio(ratio)
    k = math.floor(ratio * n_samples)
    rng = np.random.default_rng(seed)
    out = np.empty((n_leads, k), dtype=np.int64)
    for lead in range(n_leads):
        out[lead] = np.sort(rng.choice(n_samples, size=k, replace=False))
    return out


def sample_stripe_mask(n_frames: int, ratio: float, seed, block: int = 1) -> np.ndarray:
    """Sorted masked frame indices, exactly floor(ratio * W) of them.

    With ``block > 1`` frames are taken in aligned runs of ``block``; the
    last chosen run is truncated so the count stays exact.
    """
    _check_ratio(ratio)
    if block < 1:
        raise ValueError("block must be >= 1")
    k = math.floor(ratio * n_frames)
    rng = np.random.default_rng(seed)
    if block == 1:
        return np.sort(rng.choice(n_frames, size=k, replace=False))
    starts = rng.permutation(np.arange(0, n_frames, block))
    chosen = []
    for s in starts:
        if len(chosen) >= k:
            break
        run = list(range(s, min(s + block, n_frames)))
        chosen.extend(run[: k - len(chosen)])
    return np.sort(np.array(chosen, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class MaskSpec:
    time_mask: np.ndarray  # (N, k) sample indices per lead
    stripe_mask: np.ndarray  # frame indices shared by every lead
    seed: int | None = None

    def time_bool(self, n_samples: int) -> np.ndarray:
        m = np.zeros((n_samples, self.time_mask.shape[0]), dtype=bool)
        for lead, idx in enumerate(self.time_mask):
            m[idx, lead] = True
        return m


def sample_masks(n_samples, n_leads, n_frames, seed, time_ratio=0.3, stripe_ratio=0.2,
                 stripe_block=1) -> MaskSpec:
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    t_seed, s_seed = ss.spawn(2)
    return MaskSpec(
        sample_time_mask(n_samples, n_leads, time_ratio, t_seed),
        sample_stripe_mask(n_frames, stripe_ratio, s_seed, stripe_block),
        seed if isinstance(seed, int) else None,
    )


def apply_masks(ecg: np.ndarray, spec: np.ndarray, masks: MaskSpec):
    """Zero the masked positions; returns new arrays ``(ecg (D, N), spec (N, H, W))``."""
    d, n = ecg.shape
    if masks.time_mask.shape[0] != n:
        raise IndexError(f"time mask covers {masks.time_mask.shape[0]} leads, signal has {n}")
    if masks.time_mask.size and (masks.time_mask.min() < 0 or masks.time_mask.max() >= d):
        raise IndexError("time mask index out of bounds")
    w = spec.shape[-1]
    if masks.stripe_mask.size and (masks.stripe_mask.min() < 0 or masks.stripe_mask.max() >= w):
        raise IndexError("stripe mask index out of bounds")
    ecg_out = np.array(ecg, copy=True)
    ecg_out[masks.time_bool(d)] = 0.0
    spec_out = np.array(spec, copy=True)
    spec_out[..., masks.stripe_mask] = 0.0
    return ecg_out, spec_out
