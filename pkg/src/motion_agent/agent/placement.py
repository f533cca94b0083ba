"""Two-person scene placement: person 1 at the origin, person 2 placed by (theta, x, z)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.motion import JointPositions, MotionSequence, forward_kinematics
from ..errors import ValidationError
from .plan import PlacementTuple


@dataclass(frozen=True)
class ScenePair:
    person1: JointPositions
    person2: JointPositions
    relative: PlacementTuple


def rotation_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def place_second_person(m1: MotionSequence, m2: MotionSequence, r: PlacementTuple) -> ScenePair:
    """World joints for both people; person 2 is rotated by theta about the vertical
    axis and translated by (x, z). Track lengths may differ."""
    if m1.skeleton.content_hash() != m2.skeleton.content_hash():
        raise ValidationError("both motions must share one skeleton")
    p1 = forward_kinematics(m1)
    p2 = forward_kinematics(m2)
    rot = rotation_y(r.theta)
    placed = p2.positions @ rot.T + np.array([r.x, 0.0, r.z])
    return ScenePair(person1=p1, person2=JointPositions(placed, fps=m2.fps), relative=r)


def apply_placement(joints: JointPositions, placement: tuple[float, float, float]) -> JointPositions:
    """Rotate-and-translate a world joint track by a placement tuple."""
    r = PlacementTuple(*placement)
    placed = joints.positions @ rotation_y(r.theta).T + np.array([r.x, 0.0, r.z])
    return JointPositions(placed, fps=joints.fps)
