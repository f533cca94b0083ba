"""Procedural paired corpus: parametric motions with templated captions.

Each item is generated from one of four archetypes (walk, turn, wave, crouch)
with parameters sampled from a seeded RNG. Captions are built from templates so
every qualitative word in a caption maps back to a parameter range, which keeps
caption-metric ground truth unambiguous and lets a rule-based classifier act as
an oracle for generated motions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, ValidationError
from .motafile import read_motion, write_motion
from .motion import MotionSequence, forward_kinematics
from .skeleton import SkeletonSpec, default_skeleton, rest_local_positions

ARCHETYPES = ("walk", "turn", "wave", "crouch")

ROOT_HEIGHT = 0.95

# thresholds used both by the caption templates and the classifier
SLOW_MAX = 0.8
FAST_MIN = 1.3
DEEP_MIN = 0.42

_PUNCT = re.compile(r"[^\w\s]")


def normalize_caption(text: str) -> list[str]:
    """Deterministic normalization: lowercase, punctuation-stripped, whitespace-split."""
    return _PUNCT.sub(" ", text.lower()).split()


@dataclass(frozen=True)
class TextAnnotation:
    text: str
    tokens: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("caption text must be non-empty")
        object.__setattr__(self, "tokens", tuple(normalize_caption(self.text)))


@dataclass(frozen=True)
class CorpusItem:
    item_id: str
    seq: MotionSequence
    annotations: tuple[TextAnnotation, ...]
    archetype: str
    params: dict


@dataclass(frozen=True)
class PairedCorpus:
    items: tuple[CorpusItem, ...]
    split: dict[str, str]          # item_id -> train | val | test
    seed: int
    skeleton: SkeletonSpec

    def subset(self, split_name: str) -> list[CorpusItem]:
        return [it for it in self.items if self.split[it.item_id] == split_name]


@dataclass(frozen=True)
class CorpusConfig:
    archetypes: tuple[str, ...] = ARCHETYPES
    samples_per_archetype: int = 50
    frame_range: tuple[int, int] = (48, 96)
    fps: float = 20.0
    captions_per_item: int = 2
    split_fractions: tuple[float, float] = (0.7, 0.1)   # train, val; rest is test

    def validate(self) -> None:
        if not self.archetypes:
            raise ConfigError("archetype list is empty")
        missing = [a for a in ARCHETYPES if a not in self.archetypes]
        if missing:
            raise ConfigError(f"config must include archetypes {ARCHETYPES}, missing {missing}")
        unknown = [a for a in self.archetypes if a not in ARCHETYPES]
        if unknown:
            raise ConfigError(f"unknown archetypes {unknown}")
        lo, hi = self.frame_range
        if not (1 <= lo <= hi):
            raise ConfigError("bad frame range")
        if self.samples_per_archetype < 1 or self.fps <= 0:
            raise ConfigError("bad corpus config")


def _speed_word(speed: float) -> str:
    if speed < SLOW_MAX:
        return "slowly"
    if speed >= FAST_MIN:
        return "quickly"
    return "steadily"


def _walk(rng: np.random.Generator, t: int, fps: float, rest: np.ndarray) -> tuple[np.ndarray, dict, list[str]]:
    speed = float(rng.uniform(0.5, 1.8))
    step_hz = 1.2 + 0.5 * speed
    swing = 0.10 + 0.10 * speed
    frames = _base_frames(t, rest)
    ts = np.arange(t) / fps
    phase = 2 * np.pi * step_hz * ts
    frames[:, 2] = speed / fps                              # forward velocity (+z)
    frames[:, 3] = ROOT_HEIGHT + 0.02 * np.sin(2 * phase)
    loc = frames[:, 4:].reshape(t, -1, 3)
    loc[:, 5, 2] = swing * np.sin(phase)                    # l_foot strides
    loc[:, 6, 2] = -swing * np.sin(phase)                   # r_foot counter-strides
    loc[:, 3, 2] = -0.5 * swing * np.sin(phase)             # arms counter-swing
    loc[:, 4, 2] = 0.5 * swing * np.sin(phase)
    word = _speed_word(speed)
    captions = [
        f"a person walks forward {word}",
        f"a person is walking {word} in a straight line",
        f"someone {word} walks ahead",
    ]
    return frames, {"speed": speed, "speed_word": word}, captions


def _turn(rng: np.random.Generator, t: int, fps: float, rest: np.ndarray) -> tuple[np.ndarray, dict, list[str]]:
    direction = "right" if rng.uniform() < 0.5 else "left"
    total = float(rng.uniform(np.pi / 2, np.pi))
    sign = 1.0 if direction == "right" else -1.0           # +yaw turns the facing toward +x
    frames = _base_frames(t, rest)
    frames[:, 0] = sign * total / t
    frames[:, 3] = ROOT_HEIGHT
    loc = frames[:, 4:].reshape(t, -1, 3)
    for upper in (0, 1, 2):                                 # lean into the turn: breaks the
        loc[:, upper, 0] += 0.10 * sign                     # left/right mirror symmetry
    loc[:, 3 if sign > 0 else 4, 1] += 0.08
    captions = [
        f"a person turns to the {direction}",
        f"a person rotates to the {direction} on the spot",
        f"someone turns {direction} while standing",
    ]
    return frames, {"direction": direction, "total_angle": total}, captions


def _wave(rng: np.random.Generator, t: int, fps: float, rest: np.ndarray) -> tuple[np.ndarray, dict, list[str]]:
    side = "right" if rng.uniform() < 0.5 else "left"
    freq = float(rng.uniform(0.8, 1.6))
    hand = 4 if side == "right" else 3                      # local-joint index (skips root)
    frames = _base_frames(t, rest)
    frames[:, 3] = ROOT_HEIGHT
    ts = np.arange(t) / fps
    osc = np.sin(2 * np.pi * freq * ts)
    loc = frames[:, 4:].reshape(t, -1, 3)
    loc[:, hand, 1] = 1.0 + 0.18 * osc                      # hand raised overhead, oscillating
    loc[:, hand, 0] *= 0.5
    captions = [
        f"a person waves with their {side} hand",
        f"a person raises the {side} hand and waves",
        f"someone waves the {side} hand in the air",
    ]
    return frames, {"side": side, "freq": freq}, captions


def _crouch(rng: np.random.Generator, t: int, fps: float, rest: np.ndarray) -> tuple[np.ndarray, dict, list[str]]:
    depth = float(rng.uniform(0.25, 0.55))
    frames = _base_frames(t, rest)
    down, hold = int(0.4 * t), int(0.2 * t)
    dip = np.zeros(t)
    dip[:down] = np.linspace(0.0, 1.0, down, endpoint=False)
    dip[down : down + hold] = 1.0
    rise = t - down - hold
    if rise > 0:
        dip[down + hold :] = np.linspace(1.0, 0.0, rise)
    dip *= depth
    frames[:, 3] = ROOT_HEIGHT - dip
    loc = frames[:, 4:].reshape(t, -1, 3)
    for foot in (5, 6):
        loc[:, foot, 1] = rest[foot + 1, 1] + dip            # feet stay grounded as the root dips
    word = "deeply" if depth >= DEEP_MIN else "briefly"
    captions = [
        f"a person crouches down {word}",
        f"a person {word} squats down and stands back up",
        f"someone bends down into a {('deep ' if word == 'deeply' else '')}crouch",
    ]
    return frames, {"depth": depth, "depth_word": word}, captions


_GENERATORS = {"walk": _walk, "turn": _turn, "wave": _wave, "crouch": _crouch}


def _base_frames(t: int, rest: np.ndarray) -> np.ndarray:
    d = 4 + 3 * (rest.shape[0] - 1)
    frames = np.zeros((t, d), dtype=np.float64)
    frames[:, 3] = ROOT_HEIGHT
    frames[:, 4:] = np.tile(rest[1:].reshape(-1), (t, 1))
    return frames


def synth_corpus(config: CorpusConfig, seed: int) -> PairedCorpus:
    """Deterministic procedural corpus; bit-identical for equal (config, seed)."""
    config.validate()
    rng = np.random.default_rng(seed)
    skeleton = default_skeleton()
    rest = rest_local_positions(skeleton)
    items: list[CorpusItem] = []
    for archetype in config.archetypes:
        gen = _GENERATORS[archetype]
        for k in range(config.samples_per_archetype):
            t = int(rng.integers(config.frame_range[0], config.frame_range[1] + 1))
            frames, params, caption_pool = gen(rng, t, config.fps, rest)
            n_cap = min(config.captions_per_item, len(caption_pool))
            chosen = rng.choice(len(caption_pool), size=n_cap, replace=False)
            annotations = tuple(TextAnnotation(caption_pool[int(c)]) for c in sorted(chosen))
            seq = MotionSequence(frames=frames.astype(np.float32), fps=config.fps, skeleton=skeleton)
            items.append(CorpusItem(f"{archetype}_{k:04d}", seq, annotations, archetype, params))

    split = _assign_splits(items, config, seed)
    return PairedCorpus(tuple(items), split, seed, skeleton)


def _assign_splits(items: list[CorpusItem], config: CorpusConfig, seed: int) -> dict[str, str]:
    # stratified by archetype so every split sees every archetype
    rng = np.random.default_rng(seed + 1)
    tr_frac, val_frac = config.split_fractions
    split: dict[str, str] = {}
    for archetype in config.archetypes:
        ids = [it.item_id for it in items if it.archetype == archetype]
        order = rng.permutation(len(ids))
        n_tr = int(round(tr_frac * len(ids)))
        n_val = int(round(val_frac * len(ids)))
        for rank, idx in enumerate(order):
            if rank < n_tr:
                split[ids[idx]] = "train"
            elif rank < n_tr + n_val:
                split[ids[idx]] = "val"
            else:
                split[ids[idx]] = "test"
    return split


def classify_archetype(seq: MotionSequence) -> str:
    """Rule-based archetype oracle on world-joint statistics.

    Decision thresholds mirror the generator's parameter ranges; on ambiguous
    input the strongest normalized signal wins, so every motion gets a label.
    """
    joints = forward_kinematics(seq).positions
    duration = seq.num_frames / seq.fps
    root = joints[:, 0]
    net_yaw = abs(float(seq.frames[:, 0].sum()))
    disp = float(np.linalg.norm(root[-1, [0, 2]] - root[0, [0, 2]]))
    speed = disp / max(duration, 1e-9)
    dip = float(root[0, 1] - root[:, 1].min())
    hand_rel = joints[:, 4:6, 1] - root[:, 1:2]            # hand heights relative to the root
    hand_p2p = float((hand_rel.max(axis=0) - hand_rel.min(axis=0)).max())

    scores = {
        "crouch": dip / 0.18,
        "turn": net_yaw / 0.6,
        "wave": hand_p2p / 0.20,
        "walk": speed / 0.25,
    }
    for name in ("crouch", "turn", "wave", "walk"):
        if scores[name] >= 1.0:
            return name
    return max(scores, key=scores.get)


def save_corpus(corpus: PairedCorpus, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    (out_dir / "motions").mkdir(parents=True, exist_ok=True)
    manifest = {
        "seed": corpus.seed,
        "skeleton": {
            "joint_names": list(corpus.skeleton.joint_names),
            "parent": corpus.skeleton.parent.tolist(),
            "bone_offsets": corpus.skeleton.bone_offsets.tolist(),
        },
        "items": [],
    }
    for item in corpus.items:
        rel = f"motions/{item.item_id}.mota"
        write_motion(item.seq, out_dir / rel)
        manifest["items"].append(
            {
                "id": item.item_id,
                "archetype": item.archetype,
                "params": item.params,
                "captions": [a.text for a in item.annotations],
                "split": corpus.split[item.item_id],
                "file": rel,
            }
        )
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_corpus(in_dir: str | Path) -> PairedCorpus:
    in_dir = Path(in_dir)
    manifest = json.loads((in_dir / "manifest.json").read_text())
    sk = manifest["skeleton"]
    skeleton = SkeletonSpec(tuple(sk["joint_names"]), np.asarray(sk["parent"]), np.asarray(sk["bone_offsets"]))
    items = []
    split = {}
    for entry in manifest["items"]:
        seq = read_motion(in_dir / entry["file"], skeleton=skeleton)
        annotations = tuple(TextAnnotation(c) for c in entry["captions"])
        items.append(CorpusItem(entry["id"], seq, annotations, entry["archetype"], entry["params"]))
        split[entry["id"]] = entry["split"]
    return PairedCorpus(tuple(items), split, manifest["seed"], skeleton)
