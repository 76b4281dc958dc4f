"""Versioned model container (format srr-model-v1).

Layout, byte for byte:

    magic line      b"srr-model-v1\\n"
    header length   8-byte little-endian unsigned integer
    header          canonical JSON (sorted keys, compact separators, UTF-8):
                    {"kind", "seed", "hyper", "standardization",
                     "config_hash", "tensors": [{"name", "rows", "cols"}, ...]}
    payload         each tensor's C-order float64 little-endian bytes,
                    in header order

Every numeric parameter lives in a named tensor; forest trees are packed as
(n_nodes x 7) node tables (see baselines). Serialization round-trips
bit-exactly: deserialize(serialize(s)) compares equal array by array.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError

MODEL_FORMAT = "srr-model-v1"

KINDS = ("logistic", "forest", "gcn", "temporal")

__all__ = ["ModelState", "MODEL_FORMAT", "KINDS", "serialize", "deserialize", "parameter_count"]


@dataclass
class ModelState:
    """A trained (or freshly initialized) model of any supported kind."""

    kind: str
    params: dict[str, np.ndarray]
    hyper: dict
    seed: int
    standardization: dict | None = None
    config_hash: str | None = None
    bookkeeping: tuple[str, ...] = field(default=())  # tensors that are not trainable weights

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown model kind {self.kind!r}, expected one of {KINDS}")
        self.params = {
            name: np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
            for name, arr in self.params.items()
        }

    def trainable(self) -> dict[str, np.ndarray]:
        skip = set(self.bookkeeping)
        return {k: v for k, v in self.params.items() if k not in skip}


def parameter_count(state: ModelState) -> int:
    """Number of trainable scalar parameters (bookkeeping tensors excluded)."""
    return int(sum(v.size for v in state.trainable().values()))


def serialize(state: ModelState) -> bytes:
    names = sorted(state.params)
    tensors = []
    payload = bytearray()
    for name in names:
        arr = state.params[name]
        mat = arr.reshape(1, -1) if arr.ndim == 1 else arr
        if mat.ndim != 2:
            raise DataError(f"tensor {name} has rank {arr.ndim}; only 1-D/2-D supported")
        tensors.append({"name": name, "rows": int(mat.shape[0]), "cols": int(mat.shape[1]),
                        "vector": arr.ndim == 1})
        payload.extend(np.ascontiguousarray(mat, dtype="<f8").tobytes())
    header = {
        "format": MODEL_FORMAT,
        "kind": state.kind,
        "seed": int(state.seed),
        "hyper": state.hyper,
        "standardization": state.standardization,
        "config_hash": state.config_hash,
        "bookkeeping": sorted(state.bookkeeping),
        "tensors": tensors,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out = bytearray()
    out.extend(MODEL_FORMAT.encode("ascii") + b"\n")
    out.extend(struct.pack("<Q", len(head)))
    out.extend(head)
    out.extend(payload)
    return bytes(out)


def deserialize(blob: bytes) -> ModelState:
    magic = MODEL_FORMAT.encode("ascii") + b"\n"
    if not blob.startswith(magic):
        raise DataError(f"not an {MODEL_FORMAT} container (bad magic)")
    off = len(magic)
    if len(blob) < off + 8:
        raise DataError("truncated model container (no header length)")
    (head_len,) = struct.unpack_from("<Q", blob, off)
    off += 8
    if len(blob) < off + head_len:
        raise DataError("truncated model container (header)")
    header = json.loads(blob[off:off + head_len].decode("utf-8"))
    off += head_len
    if header.get("format") != MODEL_FORMAT:
        raise DataError(f"container declares format {header.get('format')!r}")
    params = {}
    for entry in header["tensors"]:
        rows, cols = entry["rows"], entry["cols"]
        nbytes = rows * cols * 8
        if len(blob) < off + nbytes:
            raise DataError(f"truncated model container (tensor {entry['name']})")
        arr = np.frombuffer(blob[off:off + nbytes], dtype="<f8").astype(np.float64).reshape(rows, cols)
        if entry.get("vector"):
            arr = arr.reshape(-1)
        params[entry["name"]] = arr.copy()
        off += nbytes
    if off != len(blob):
        raise DataError("trailing bytes after the last tensor")
    return ModelState(
        kind=header["kind"],
        params=params,
        hyper=header["hyper"],
        seed=header["seed"],
        standardization=header.get("standardization"),
        config_hash=header.get("config_hash"),
        bookkeeping=tuple(header.get("bookkeeping", ())),
    )
