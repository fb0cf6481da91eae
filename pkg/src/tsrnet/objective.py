"""Uncertainty-aware restoration loss and its analytic gradients.

Per point the loss is ``exp(-sigma) * (y - x)**2 + sigma``; the total is the
mean over every (sample, lead) entry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .errors import DataIntegrityError


@dataclass(frozen=True, eq=False)
class LossValue:
    total: float
    per_point: np.ndarray


def _check(y, sigma, x):
    y, sigma, x = (np.asarray(a, dtype=np.float64) for a in (y, sigma, x))
    if not (y.shape == sigma.shape == x.shape):
        raise DataIntegrityError(f"shape mismatch: y{y.shape} sigma{sigma.shape} x{x.shape}")
    for name, a in (("y", y), ("sigma", sigma), ("x", x)):
        if not np.all(np.isfinite(a)):
            raise DataIntegrityError(f"non-finite values in {name}")
    return y, sigma, x


def per_point_terms(y, sigma, x) -> np.ndarray:
    y, sigma, x = _check(y, sigma, x)
    return np.exp(-sigma) * (y - x) ** 2 + sigma


def restoration_loss(y, sigma, x) -> LossValue:
    terms = per_point_terms(y, sigma, x)
    return LossValue(float(np.mean(terms, dtype=np.float64)), terms)


def loss_gradients(y, sigma, x):
    """Return ``(dL/dy, dL/dsigma)`` for the mean-reduced loss."""
    y, sigma, x = _check(y, sigma, x)
    n = y.size
    w = np.exp(-sigma)
    r = y - x
    return 2.0 * w * r / n, (1.0 - w * r * r) / n


def torch_restoration_loss(y: torch.Tensor, sigma: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Differentiable batch loss, averaged over every entry of the batch."""
    terms = torch.exp(-sigma) * (y - x) ** 2 + sigma
    return terms.to(torch.float64).mean()
