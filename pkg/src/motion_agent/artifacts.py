"""Tagged binary container for trained artifacts (codec weights, LM weights, adapters).

Layout, all little-endian:

    magic   4 bytes  b"MAGA"
    version u32      container format version (currently 1)
    mlen    u32      length of the JSON metadata blob
    meta    mlen bytes of UTF-8 JSON
    payload concatenated raw tensor bytes, in metadata order

The metadata blob is ``{"kind": ..., "config": {...}, "tensors": [...]}`` where each
tensor entry records name, dtype string and shape. Hash stamping uses the SHA-256 of
the whole file so loaders can refuse artifacts that changed on disk.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"MAGA"
VERSION = 1

_HEADER = struct.Struct("<4sII")


def write_artifact(path: str | Path, kind: str, config: dict, tensors: dict[str, np.ndarray]) -> str:
    """Write an artifact file and return its SHA-256 hex digest."""
    entries = []
    blobs = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        dtype = arr.dtype.newbyteorder("<")
        blob = arr.astype(dtype, copy=False).tobytes()
        entries.append({"name": name, "dtype": dtype.str, "shape": list(arr.shape)})
        blobs.append(blob)
    meta = json.dumps({"kind": kind, "config": config, "tensors": entries}, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, len(meta)))
        f.write(meta)
        for blob in blobs:
            f.write(blob)
    return file_sha256(path)


def read_artifact(path: str | Path, expect_kind: str | None = None) -> tuple[str, dict, dict[str, np.ndarray]]:
    """Read an artifact file back into (kind, config, tensors)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header", offset=len(raw))
    magic, version, mlen = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported container version {version}", offset=4)
    off = _HEADER.size
    if len(raw) < off + mlen:
        raise FormatError(f"{path}: truncated metadata", offset=len(raw))
    meta = json.loads(raw[off : off + mlen].decode("utf-8"))
    off += mlen
    kind = meta["kind"]
    if expect_kind is not None and kind != expect_kind:
        raise FormatError(f"{path}: expected kind {expect_kind!r}, found {kind!r}")
    tensors: dict[str, np.ndarray] = {}
    for entry in meta["tensors"]:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
        if len(raw) < off + nbytes:
            raise FormatError(f"{path}: truncated tensor {entry['name']!r}", offset=len(raw))
        arr = np.frombuffer(raw[off : off + nbytes], dtype=dtype).reshape(shape)
        tensors[entry["name"]] = arr.copy()
        off += nbytes
    return kind, meta["config"], tensors


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def tensors_sha256(tensors: dict[str, np.ndarray]) -> str:
    """Order-independent digest of named arrays; used for frozen-weight stamps."""
    h = hashlib.sha256()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        h.update(name.encode("utf-8"))
        h.update(str(arr.dtype.str).encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()
