"""Continuous motion representation and forward kinematics.

A motion is a (T, D) feature matrix with a velocity-based root so that two motions
can be concatenated in feature space and the second one keeps moving from wherever
the first one ended. Layout, with J the skeleton's joint count and D = 4 + 3(J-1):

    col 0        root yaw angular velocity, rad/frame
    col 1..2     root linear velocity (x, z), m/frame, in the heading-local frame
    col 3        root height (y), m
    col 4..      (J-1) x 3 joint positions relative to the root, heading-local frame
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import ValidationError
from .skeleton import SkeletonSpec


@dataclass(frozen=True)
class MotionSequence:
    frames: np.ndarray        # (T, D) float32
    fps: float
    skeleton: SkeletonSpec

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        object.__setattr__(self, "frames", frames)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ValidationError("frames must be a (T, D) matrix with T >= 1")
        if frames.shape[1] != self.skeleton.feature_dim:
            raise ValidationError(
                f"feature width {frames.shape[1]} inconsistent with skeleton "
                f"(expected {self.skeleton.feature_dim})"
            )
        if not np.isfinite(frames).all():
            raise ValidationError("frames contain non-finite values")
        if self.fps <= 0:
            raise ValidationError("fps must be positive")
        if np.any(frames[:, 3] < 0):
            raise ValidationError("root height must be non-negative in every frame")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class JointPositions:
    """World-frame joint tracks, (T, J, 3) in meters."""

    positions: np.ndarray
    fps: float

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        object.__setattr__(self, "positions", pos)
        if pos.ndim != 3 or pos.shape[2] != 3:
            raise ValidationError("positions must have shape (T, J, 3)")
        if not np.isfinite(pos).all():
            raise ValidationError("positions contain non-finite values")


def rot_y(theta: torch.Tensor) -> torch.Tensor:
    """Rotation matrices about the vertical (y) axis; theta shape (...,) -> (..., 3, 3)."""
    c, s = torch.cos(theta), torch.sin(theta)
    zero = torch.zeros_like(c)
    one = torch.ones_like(c)
    rows = [
        torch.stack([c, zero, s], dim=-1),
        torch.stack([zero, one, zero], dim=-1),
        torch.stack([-s, zero, c], dim=-1),
    ]
    return torch.stack(rows, dim=-2)


def _exclusive_cumsum(x: torch.Tensor, dim: int) -> torch.Tensor:
    out = torch.cumsum(x, dim=dim)
    return torch.cat([torch.zeros_like(out.narrow(dim, 0, 1)), out.narrow(dim, 0, out.shape[dim] - 1)], dim=dim)


def forward_kinematics_torch(frames: torch.Tensor, joint_count: int) -> torch.Tensor:
    """Differentiable FK on feature frames.

    ``frames`` is (T, D) or (B, T, D); returns world joint positions (T, J, 3)
    or (B, T, J, 3). Root velocities integrate from the origin with heading 0,
    so this also defines the canonical world framing of a sequence.
    """
    squeeze = frames.ndim == 2
    if squeeze:
        frames = frames.unsqueeze(0)
    b, t, d = frames.shape
    if d != 4 + 3 * (joint_count - 1):
        raise ValidationError(f"feature width {d} inconsistent with {joint_count} joints")

    yaw_vel = frames[:, :, 0]
    vel_local = frames[:, :, 1:3]          # (B, T, 2) = (vx, vz)
    height = frames[:, :, 3]
    local = frames[:, :, 4:].reshape(b, t, joint_count - 1, 3)

    heading = _exclusive_cumsum(yaw_vel, dim=1)          # heading at each frame
    c, s = torch.cos(heading), torch.sin(heading)
    # R_y(h) applied to (vx, 0, vz): x' = c*vx + s*vz ; z' = -s*vx + c*vz
    world_vx = c * vel_local[:, :, 0] + s * vel_local[:, :, 1]
    world_vz = -s * vel_local[:, :, 0] + c * vel_local[:, :, 1]
    root_x = _exclusive_cumsum(world_vx, dim=1)
    root_z = _exclusive_cumsum(world_vz, dim=1)
    root = torch.stack([root_x, height, root_z], dim=-1)  # (B, T, 3)

    rot = rot_y(heading)                                  # (B, T, 3, 3)
    world_local = torch.einsum("btij,btkj->btki", rot, local)
    joints = torch.cat([root.unsqueeze(2), root.unsqueeze(2) + world_local], dim=2)
    return joints.squeeze(0) if squeeze else joints


def forward_kinematics(seq: MotionSequence) -> JointPositions:
    """Integrate a motion's root channels into world joint tracks."""
    frames = torch.from_numpy(seq.frames).to(torch.float64)
    joints = forward_kinematics_torch(frames, seq.skeleton.joint_count)
    return JointPositions(joints.numpy(), fps=seq.fps)


def heading_track(seq: MotionSequence) -> np.ndarray:
    """Per-frame integrated heading (rad), heading 0 at frame 0."""
    yaw = seq.frames[:, 0].astype(np.float64)
    out = np.concatenate([[0.0], np.cumsum(yaw)[:-1]])
    return out
