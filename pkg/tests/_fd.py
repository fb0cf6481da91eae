"""Finite-difference helpers for network gradient checks."""
import copy

import torch

from tsrnet.network import init_params
from tsrnet.objective import torch_restoration_loss


def batch(seed, dtype, shape_ecg=(2, 12, 64), shape_spec=(2, 12, 11, 12)):
    g = torch.Generator().manual_seed(1000 + seed)
    x = torch.randn(shape_ecg, generator=g, dtype=torch.float64)
    s = torch.randn(shape_spec, generator=g, dtype=torch.float64)
    t = torch.randn(shape_ecg, generator=g, dtype=torch.float64)
    return x.to(dtype), s.to(dtype), t.to(dtype)


def loss_fn(model, x, s, t):
    y, sigma = model(x, s)
    return torch_restoration_loss(y, sigma, t)


def rel_err(a, b, floor):
    return abs(a - b) / (max(abs(a), abs(b)) + floor)


def directional_check(cfg, seed, grad_dtype, h=1e-6):
    """Per parameter tensor: analytic directional derivative (model in ``grad_dtype``)
    versus a central difference of the same parameters evaluated in float64.

    Returns {name: relative error}.
    """
    model = init_params(cfg, seed, grad_dtype)
    model.train()
    x, s, t = batch(seed, grad_dtype)
    model.zero_grad()
    loss_fn(model, x, s, t).backward()

    ref = copy.deepcopy(model).double()
    xr, sr, tr = x.double(), s.double(), t.double()
    ref_params = dict(ref.named_parameters())
    floor = 100 * torch.finfo(grad_dtype).eps
    gen = torch.Generator().manual_seed(seed)
    out = {}
    for name, p in model.named_parameters():
        d = torch.randn(p.shape, generator=gen, dtype=torch.float64)
        d /= d.norm()
        q = ref_params[name]
        with torch.no_grad():
            q.add_(h * d)
            lp = loss_fn(ref, xr, sr, tr).item()
            q.sub_(2 * h * d)
            lm = loss_fn(ref, xr, sr, tr).item()
            q.add_(h * d)
        fd = (lp - lm) / (2 * h)
        an = float((p.grad.double() * d).sum())
        out[name] = rel_err(fd, an, floor)
    return out
