"""Portable binary checkpoint container for per-agent policy parameters.

Layout: 8-byte magic, uint32 little-endian format version, uint32 header
length, UTF-8 JSON header, then the raw tensors as little-endian float64 in
header order. The header records every tensor's name, shape and shared/head
partition plus free-form metadata.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .policy import HEAD_KEYS, SHARED_KEYS, PolicyParams

MAGIC = b"SWRMCKPT"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable, corrupt, or incompatible checkpoint file."""


def save_checkpoint(path, params_list, meta=None) -> None:
    arrays = []
    entries = []
    for agent, params in enumerate(params_list):
        for key in SHARED_KEYS + HEAD_KEYS:
            tensor = np.ascontiguousarray(params[key], dtype="<f8")
            entries.append({
                "name": f"agent{agent}/{key}",
                "shape": list(tensor.shape),
                "partition": "shared" if key in SHARED_KEYS else "head",
            })
            arrays.append(tensor)
    header = {
        "version": VERSION,
        "n_agents": len(params_list),
        "tensors": entries,
        "meta": dict(meta or {}),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for tensor in arrays:
            fh.write(tensor.tobytes())


def load_checkpoint(path):
    """Returns (params_list, meta); validates magic, version and sizes."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < len(MAGIC) + 8 or raw[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    version, header_len = struct.unpack_from("<II", raw, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {version}")
    start = len(MAGIC) + 8
    try:
        header = json.loads(raw[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint header") from exc

    offset = start + header_len
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated tensor data")
        tensors[entry["name"]] = np.frombuffer(
            raw[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{path}: trailing bytes after tensor data")

    params_list = []
    for agent in range(header["n_agents"]):
        agent_tensors = {}
        for key in SHARED_KEYS + HEAD_KEYS:
            name = f"agent{agent}/{key}"
            if name not in tensors:
                raise CheckpointError(f"{path}: missing tensor {name}")
            agent_tensors[key] = tensors[name]
        params_list.append(PolicyParams(agent_tensors))
    return params_list, header["meta"]
