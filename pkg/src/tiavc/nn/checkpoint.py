"""Checkpoint file format (.avck).

Layout: a 4-byte little-endian unsigned header length, a UTF-8 JSON
header mapping tensor name -> {"shape": [...], "offset": bytes into the
data section}, then the raw little-endian float32 data of all tensors
back to back. One file per model.
"""

import json
import struct

import numpy as np

from ..errors import ValidationError

EXTENSION = ".avck"


def save_tensors(path, tensors):
    """Write an ordered {name: ndarray} mapping to a .avck file."""
    header = {}
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        header[name] = {"shape": list(arr.shape), "offset": offset}
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        for blob in blobs:
            fh.write(blob)


def load_tensors(path):
    """Read a .avck file back into {name: float32 ndarray}."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise ValidationError(f"{path}: truncated checkpoint")
    (head_len,) = struct.unpack("<I", raw[:4])
    if len(raw) < 4 + head_len:
        raise ValidationError(f"{path}: truncated checkpoint header")
    header = json.loads(raw[4:4 + head_len].decode("utf-8"))
    data = raw[4 + head_len:]
    out = {}
    for name, meta in header.items():
        shape = tuple(meta["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        start = meta["offset"]
        end = start + 4 * count
        if end > len(data):
            raise ValidationError(f"{path}: truncated data for tensor '{name}'")
        out[name] = np.frombuffer(data[start:end], dtype="<f4").reshape(shape).copy()
    return out


def _param_list(model):
    # layers and towers expose params(), assembled models parameters()
    getter = getattr(model, "parameters", None)
    return getter() if getter is not None else model.params()


def save_model_params(path, model):
    save_tensors(path, {p.name: p.value for p in _param_list(model)})


def load_model_params(path, model):
    tensors = load_tensors(path)
    for p in _param_list(model):
        if p.name not in tensors:
            raise ValidationError(f"{path}: missing tensor '{p.name}'")
        if tensors[p.name].shape != p.value.shape:
            raise ValidationError(
                f"{path}: tensor '{p.name}' has shape {tensors[p.name].shape}, "
                f"model expects {p.value.shape}"
            )
        p.value = tensors[p.name].astype(p.value.dtype)
        p.grad = np.zeros_like(p.value)
