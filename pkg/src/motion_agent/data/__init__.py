from .motion import JointPositions, MotionSequence, forward_kinematics, forward_kinematics_torch, heading_track, rot_y
from .motafile import read_motion, write_motion, write_motion_json
from .skeleton import SkeletonSpec, default_skeleton, rest_local_positions
from .synth import (
    ARCHETYPES,
    CorpusConfig,
    CorpusItem,
    PairedCorpus,
    TextAnnotation,
    classify_archetype,
    load_corpus,
    normalize_caption,
    save_corpus,
    synth_corpus,
)

__all__ = [
    "ARCHETYPES",
    "CorpusConfig",
    "CorpusItem",
    "JointPositions",
    "MotionSequence",
    "PairedCorpus",
    "SkeletonSpec",
    "TextAnnotation",
    "classify_archetype",
    "default_skeleton",
    "forward_kinematics",
    "forward_kinematics_torch",
    "heading_track",
    "load_corpus",
    "normalize_caption",
    "read_motion",
    "rest_local_positions",
    "rot_y",
    "save_corpus",
    "synth_corpus",
    "write_motion",
    "write_motion_json",
]
