"""MOTA on-disk motion format.

Binary layout, little-endian:

    magic   4 bytes  b"MOTA"
    version u32      1
    T       u32      frame count
    D       u32      feature width
    fps     f32
    J       u32      joint count
    parent  J x u32
    offsets J x 3 x f32 (rest-pose bone offsets)
    frames  T x D x f32

A JSON sidecar variant with the same field names (version, T, D, fps, J, parent,
bone_offsets, frames) is accepted for human-edited fixtures; ``read_motion``
dispatches on the leading byte.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .motion import MotionSequence
from .skeleton import SkeletonSpec

MAGIC = b"MOTA"
VERSION = 1


def write_motion(seq: MotionSequence, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sk = seq.skeleton
    t, d = seq.frames.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", VERSION, t, d))
        f.write(struct.pack("<f", float(seq.fps)))
        f.write(struct.pack("<I", sk.joint_count))
        f.write(sk.parent.astype("<u4").tobytes())
        f.write(sk.bone_offsets.astype("<f4").tobytes())
        f.write(seq.frames.astype("<f4").tobytes())


def write_motion_json(seq: MotionSequence, path: str | Path) -> None:
    """JSON sidecar variant, same field names as the binary header."""
    doc = {
        "version": VERSION,
        "T": seq.num_frames,
        "D": seq.feature_dim,
        "fps": float(seq.fps),
        "J": seq.skeleton.joint_count,
        "parent": seq.skeleton.parent.tolist(),
        "bone_offsets": seq.skeleton.bone_offsets.tolist(),
        "frames": seq.frames.astype(float).tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def read_motion(path: str | Path, skeleton: SkeletonSpec | None = None) -> MotionSequence:
    """Read either the binary or the JSON sidecar form.

    When ``skeleton`` is given its topology must match the file and its joint
    names are kept; otherwise placeholder names are synthesized.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw[:1] == b"{":
        return _from_json(raw, path, skeleton)
    return _from_binary(raw, path, skeleton)


def _from_binary(raw: bytes, path: Path, skeleton: SkeletonSpec | None) -> MotionSequence:
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated magic", offset=len(raw))
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {raw[:4]!r}", offset=0)
    if len(raw) < 20:
        raise FormatError(f"{path}: truncated header", offset=len(raw))
    version, t, d = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}", offset=4)
    (fps,) = struct.unpack_from("<f", raw, 16)
    (j,) = struct.unpack_from("<I", raw, 20)
    off = 24
    need = j * 4
    if len(raw) < off + need:
        raise FormatError(f"{path}: truncated parent array", offset=len(raw))
    parent = np.frombuffer(raw, dtype="<u4", count=j, offset=off).astype(np.int64)
    off += need
    need = j * 3 * 4
    if len(raw) < off + need:
        raise FormatError(f"{path}: truncated bone offsets", offset=len(raw))
    offsets = np.frombuffer(raw, dtype="<f4", count=j * 3, offset=off).reshape(j, 3).astype(np.float64)
    off += need
    need = t * d * 4
    if len(raw) < off + need:
        raise FormatError(f"{path}: truncated frames (header says T={t}, D={d})", offset=len(raw))
    frames = np.frombuffer(raw, dtype="<f4", count=t * d, offset=off).reshape(t, d).copy()
    return _assemble(frames, fps, j, d, parent, offsets, path, skeleton)


def _from_json(raw: bytes, path: Path, skeleton: SkeletonSpec | None) -> MotionSequence:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: invalid JSON sidecar: {exc}") from exc
    if doc.get("version") != VERSION:
        raise FormatError(f"{path}: unsupported version {doc.get('version')}")
    frames = np.asarray(doc["frames"], dtype=np.float32)
    if frames.shape != (doc["T"], doc["D"]):
        raise FormatError(f"{path}: frames shape {frames.shape} disagrees with header (T={doc['T']}, D={doc['D']})")
    parent = np.asarray(doc["parent"], dtype=np.int64)
    offsets = np.asarray(doc["bone_offsets"], dtype=np.float64)
    return _assemble(frames, float(doc["fps"]), int(doc["J"]), int(doc["D"]), parent, offsets, path, skeleton)


def _assemble(frames, fps, j, d, parent, offsets, path, skeleton):
    if d != 4 + 3 * (j - 1):
        raise FormatError(f"{path}: D={d} inconsistent with J={j}")
    if skeleton is not None:
        if skeleton.joint_count != j or not np.array_equal(skeleton.parent, parent):
            raise FormatError(f"{path}: skeleton topology does not match the expected one")
        sk = skeleton
    else:
        names = tuple(f"joint_{i}" for i in range(j))
        sk = SkeletonSpec(names, parent, offsets)
    return MotionSequence(frames=frames, fps=fps, skeleton=sk)
