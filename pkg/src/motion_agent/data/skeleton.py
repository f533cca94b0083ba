"""Skeleton topology: a small fixed joint tree used by the whole pipeline."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class SkeletonSpec:
    """Joint tree with rest-pose bone offsets.

    ``parent[j]`` is the parent joint index; the root (joint 0) is its own parent.
    ``bone_offsets`` are rest-pose offsets in meters, root offset zero.
    """

    joint_names: tuple[str, ...]
    parent: np.ndarray            # (J,) int
    bone_offsets: np.ndarray      # (J, 3) float

    def __post_init__(self):
        parent = np.asarray(self.parent, dtype=np.int64)
        offsets = np.asarray(self.bone_offsets, dtype=np.float64)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "bone_offsets", offsets)
        j = self.joint_count
        if parent.shape != (j,) or offsets.shape != (j, 3):
            raise ValidationError("skeleton arrays inconsistent with joint count")
        if parent[0] != 0:
            raise ValidationError("root joint must be its own parent")
        if not np.isfinite(offsets).all():
            raise ValidationError("bone offsets must be finite")
        if np.any(offsets[0] != 0.0):
            raise ValidationError("root bone offset must be zero")
        # Walking up from every joint must reach the root without revisits.
        for start in range(j):
            seen = set()
            cur = start
            while cur != 0:
                if cur in seen or not (0 <= parent[cur] < j):
                    raise ValidationError("parent array does not encode a tree rooted at joint 0")
                seen.add(cur)
                if parent[cur] == cur:
                    raise ValidationError("only the root may be its own parent")
                cur = int(parent[cur])

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    @property
    def feature_dim(self) -> int:
        """Width of the motion feature layout this skeleton implies."""
        return 4 + 3 * (self.joint_count - 1)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update("|".join(self.joint_names).encode())
        h.update(self.parent.tobytes())
        h.update(self.bone_offsets.astype("<f8").tobytes())
        return h.hexdigest()


def default_skeleton() -> SkeletonSpec:
    """Desk-scale 8-joint body: enough structure to tell the archetypes apart."""
    names = ("root", "spine", "neck", "head", "l_hand", "r_hand", "l_foot", "r_foot")
    parent = np.array([0, 0, 1, 2, 1, 1, 0, 0])
    offsets = np.array(
        [
            [0.0, 0.0, 0.0],     # root (pelvis)
            [0.0, 0.45, 0.0],    # spine
            [0.0, 0.25, 0.0],    # neck
            [0.0, 0.15, 0.0],    # head
            [-0.45, 0.10, 0.0],  # left hand (from spine)
            [0.45, 0.10, 0.0],   # right hand
            [-0.12, -0.90, 0.0], # left foot (from root)
            [0.12, -0.90, 0.0],  # right foot
        ]
    )
    return SkeletonSpec(names, parent, offsets)


def rest_local_positions(skeleton: SkeletonSpec) -> np.ndarray:
    """Rest-pose joint positions relative to the root, accumulated down the tree."""
    j = skeleton.joint_count
    pos = np.zeros((j, 3))
    for jt in range(1, j):
        pos[jt] = pos[skeleton.parent[jt]] + skeleton.bone_offsets[jt]
    return pos
