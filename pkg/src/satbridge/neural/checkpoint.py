"""Versioned binary checkpoint container.

Byte layout (all integers little-endian)::

    0        8 bytes   magic  b"SATBCKPT"
    8        uint32    format version (currently 1)
    12       uint64    H = length of the JSON header in bytes
    20       H bytes   UTF-8 JSON header, keys sorted, separators (",", ":")
    20+H     ...       tensor blob: every tensor listed in header["tensors"],
                       in that order, C-contiguous, little-endian, no padding
    end-32   32 bytes  SHA-256 of every preceding byte

Header keys: ``config`` (TrainConfig fields), ``tensors`` (list of
``{group, name, dtype, shape, offset, nbytes}``, offsets relative to the
blob start; groups are ``param``, ``adam_m``, ``adam_v``), ``optimizer``
(``{"step": int}``), ``rng`` (numpy bit-generator state) and ``meta``.
See docs/checkpoint-format.md.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .optim import AdamState

MAGIC = b"SATBCKPT"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: TrainConfig
    params: dict
    opt: AdamState = field(default_factory=AdamState)
    rng_state: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_bytes(self) -> bytes:
        entries = []
        blobs = []
        offset = 0
        groups = (("param", self.params), ("adam_m", self.opt.m), ("adam_v", self.opt.v))
        for group, tensors in groups:
            for name, arr in tensors.items():
                a = np.ascontiguousarray(arr)
                a = a.astype(a.dtype.newbyteorder("<"), copy=False)
                raw = a.tobytes()
                entries.append({"group": group, "name": name, "dtype": a.dtype.name,
                                "shape": list(a.shape), "offset": offset, "nbytes": len(raw)})
                blobs.append(raw)
                offset += len(raw)
        header = {
            "config": self.config.to_dict(),
            "tensors": entries,
            "optimizer": {"step": int(self.opt.step)},
            "rng": self.rng_state,
            "meta": self.meta,
        }
        hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
        body = _PREFIX.pack(MAGIC, VERSION, len(hbytes)) + hbytes + b"".join(blobs)
        return body + hashlib.sha256(body).digest()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Checkpoint":
        if len(data) < _PREFIX.size + 32:
            raise CheckpointError("file too short")
        body, digest = data[:-32], data[-32:]
        if hashlib.sha256(body).digest() != digest:
            raise CheckpointError("checksum mismatch: file is corrupt")
        magic, version, hlen = _PREFIX.unpack_from(body)
        if magic != MAGIC:
            raise CheckpointError("not a satbridge checkpoint")
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint format version {version}")
        header = json.loads(body[_PREFIX.size:_PREFIX.size + hlen])
        blob = memoryview(body)[_PREFIX.size + hlen:]
        groups = {"param": {}, "adam_m": {}, "adam_v": {}}
        for e in header["tensors"]:
            chunk = blob[e["offset"]:e["offset"] + e["nbytes"]]
            arr = np.frombuffer(chunk, dtype=np.dtype(e["dtype"]).newbyteorder("<"))
            groups[e["group"]][e["name"]] = arr.reshape(e["shape"]).astype(e["dtype"]).copy()
        opt = AdamState(header["optimizer"]["step"], groups["adam_m"], groups["adam_v"])
        return cls(TrainConfig.from_dict(header["config"]), groups["param"], opt,
                   header["rng"], header["meta"])

    def save(self, path) -> Path:
        path = Path(path)
        path.write_bytes(self.to_bytes())
        return path

    @classmethod
    def load(cls, path) -> "Checkpoint":
        return cls.from_bytes(Path(path).read_bytes())

    @property
    def checksum(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    @property
    def has_target_head(self) -> bool:
        return "head_t.w1" in self.params
