"""Flat binary checkpoint container of named arrays.

Layout: 8-byte magic, u32 version, u64 header length, UTF-8 JSON header
(config, fingerprint, array table), then the raw little-endian array bytes.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import CheckpointError
from .network import NetworkConfig, TSRNet

MAGIC = b"TSRNCKPT"
VERSION = 1


def fingerprint(obj) -> str:
    """Stable short hash of a JSON-serialisable object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def network_fingerprint(cfg: NetworkConfig) -> str:
    return fingerprint(cfg.to_dict())


def write_arrays(path, arrays: dict[str, np.ndarray], header: dict) -> Path:
    path = Path(path)
    table, offset, blobs = [], 0, []
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr)
        a = a.astype(a.dtype.newbyteorder("<"), copy=False)
        blob = a.tobytes()
        table.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape),
                      "offset": offset, "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    head = json.dumps({**header, "arrays": table}, sort_keys=True).encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)
    return path


def read_arrays(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"missing checkpoint {path}")
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file")
    if len(data) < 20:
        raise CheckpointError(f"{path}: truncated header")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        header = json.loads(data[20:20 + hlen])
    except ValueError as exc:
        raise CheckpointError(f"{path}: unreadable header ({exc})") from None
    body = memoryview(data)[20 + hlen:]
    arrays = {}
    for entry in header.pop("arrays"):
        chunk = body[entry["offset"]: entry["offset"] + entry["nbytes"]]
        if len(chunk) != entry["nbytes"]:
            raise CheckpointError(f"{path}: truncated array {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype=entry["dtype"]).reshape(entry["shape"]).copy()
    return header, arrays


def save_model(model: TSRNet, path, meta: dict | None = None) -> Path:
    # state_dict also carries BatchNorm running statistics
    arrays = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    header = {"network_config": model.cfg.to_dict(),
              "fingerprint": network_fingerprint(model.cfg),
              "meta": meta or {}}
    return write_arrays(path, arrays, header)


def load_model(path, expected_fingerprint: str | None = None) -> tuple[TSRNet, dict]:
    header, arrays = read_arrays(path)
    cfg = NetworkConfig.from_dict(header["network_config"])
    if network_fingerprint(cfg) != header["fingerprint"]:
        raise CheckpointError(f"{path}: stored config does not match its fingerprint")
    if expected_fingerprint is not None and header["fingerprint"] != expected_fingerprint:
        raise CheckpointError(
            f"{path}: checkpoint fingerprint {header['fingerprint']} != expected {expected_fingerprint}")
    model = TSRNet(cfg)
    floats = [a.dtype for a in arrays.values() if a.dtype.kind == "f"]
    model = model.to(torch.float64 if floats and floats[0] == np.float64 else torch.float32)
    state = {k: torch.from_numpy(v) for k, v in arrays.items()}
    model.load_state_dict(state)
    model.eval()
    return model, header.get("meta", {})
