"""Deterministic synthetic clip generator.

Parametric stand-in corpus on a 22-joint humanoid: sinusoidal gaits for
walk/run, an arm oscillation for wave, low-amplitude sway for idle. The
style names double as the stitcher's condition vocabulary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AnnotatedMotion, MotionSequence, Segment, Skeleton, TimedScript

STYLES = ("walk", "run", "wave", "idle")

_JOINT_NAMES = (
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
)

_PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19)

# rest pose, y up, forward along +x
_REST = np.array([
    (0.00, 0.95, 0.00),    # pelvis
    (0.00, 0.90, 0.10),    # left_hip
    (0.00, 0.90, -0.10),   # right_hip
    (0.00, 1.05, 0.00),    # spine1
    (0.00, 0.50, 0.10),    # left_knee
    (0.00, 0.50, -0.10),   # right_knee
    (0.00, 1.20, 0.00),    # spine2
    (-0.05, 0.10, 0.10),   # left_ankle
    (-0.05, 0.10, -0.10),  # right_ankle
    (0.00, 1.35, 0.00),    # spine3
    (0.05, 0.00, 0.10),    # left_foot
    (0.05, 0.00, -0.10),   # right_foot
    (0.00, 1.50, 0.00),    # neck
    (0.00, 1.45, 0.08),    # left_collar
    (0.00, 1.45, -0.08),   # right_collar
    (0.00, 1.65, 0.00),    # head
    (0.00, 1.45, 0.18),    # left_shoulder
    (0.00, 1.45, -0.18),   # right_shoulder
    (0.00, 1.18, 0.20),    # left_elbow
    (0.00, 1.18, -0.20),   # right_elbow
    (0.00, 0.92, 0.22),    # left_wrist
    (0.00, 0.92, -0.22),   # right_wrist
])


def default_skeleton() -> Skeleton:
    """The 22-joint humanoid layout used throughout the toolkit."""
    return Skeleton(
        joint_names=_JOINT_NAMES,
        parent=_PARENTS,
        root_idx=0, neck_idx=12, head_idx=15,
        left_foot_idx=10, right_foot_idx=11,
    )


@dataclass(frozen=True)
class SyntheticRecipe:
    style: str
    n_frames: int
    seed: int
    ground_y: float = 0.0

    def __post_init__(self):
        if self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}, expected one of {STYLES}")
        if self.n_frames < 10:
            raise ValueError("n_frames must be >= 10")


_L_FOOT, _R_FOOT = 10, 11
_L_ANKLE, _R_ANKLE = 7, 8
_L_ELBOW, _R_ELBOW = 18, 19
_L_WRIST, _R_WRIST = 20, 21
_ANKLE_OFF = _REST[_L_ANKLE] - _REST[_L_FOOT]


def generate_clip(recipe: SyntheticRecipe, fps: float = 20.0) -> AnnotatedMotion:
    rng = np.random.default_rng(recipe.seed)
    n = recipe.n_frames
    t = np.arange(n) / fps
    frames = np.repeat(_REST[None, :, :], n, axis=0)
    frames[:, :, 1] += recipe.ground_y

    if recipe.style in ("walk", "run"):
        speed = 1.2 if recipe.style == "walk" else 2.6
        freq = 1.6 if recipe.style == "walk" else 2.8
        step_h = 0.07 if recipe.style == "walk" else 0.12
        phase0 = rng.uniform(0, 2 * np.pi)
        phase = 2 * np.pi * freq * t + phase0
        root_x = speed * t
        frames[:, :, 0] += root_x[:, None]
        # torso bob; root and feet excluded so the root path stays straight
        # and stance feet stay on the ground
        bob = 0.02 * np.sin(2 * phase)
        body = [i for i in range(1, 22) if i not in (_L_FOOT, _R_FOOT, _L_ANKLE, _R_ANKLE)]
        frames[:, body, 1] += bob[:, None]
        stride = speed / (2 * np.pi * freq)
        for foot, ankle, ph in ((_L_FOOT, _L_ANKLE, phase),
                                (_R_FOOT, _R_ANKLE, phase + np.pi)):
            lift = step_h * np.maximum(0.0, np.sin(ph))
            frames[:, foot, 0] = root_x + _REST[foot, 0] - stride * np.cos(ph)
            frames[:, foot, 1] = recipe.ground_y + lift
            frames[:, ankle] = frames[:, foot] + _ANKLE_OFF
        # counter-swinging arms
        swing = 0.12 * np.sin(phase)
        frames[:, [_L_WRIST, _L_ELBOW], 0] += swing[:, None]
        frames[:, [_R_WRIST, _R_ELBOW], 0] -= swing[:, None]
    elif recipe.style == "wave":
        phase0 = rng.uniform(0, 2 * np.pi)
        osc = np.sin(2 * np.pi * 1.5 * t + phase0)
        frames[:, _R_ELBOW] += np.array([0.05, 0.35, 0.0])
        frames[:, _R_WRIST] += np.array([0.10, 0.70, 0.05])
        frames[:, _R_WRIST, 0] += 0.22 * osc
        frames[:, _R_ELBOW, 0] += 0.08 * osc
    else:  # idle
        phase0 = rng.uniform(0, 2 * np.pi)
        sway = 0.01 * np.sin(2 * np.pi * 1.0 * t + phase0)
        body = [i for i in range(1, 22) if i not in (_L_FOOT, _R_FOOT, _L_ANKLE, _R_ANKLE)]
        frames[:, body, 0] += sway[:, None]

    motion = MotionSequence(default_skeleton(), frames, fps)
    script = TimedScript((Segment(recipe.style, 0, n),))
    return AnnotatedMotion(motion, script)


def clip_style(clip: AnnotatedMotion) -> str | None:
    """Style label of a single-segment synthetic clip, if recognizable."""
    if len(clip.script.segments) == 1 and clip.script.segments[0].text in STYLES:
        return clip.script.segments[0].text
    return None


def make_training_windows(clips: list[AnnotatedMotion], n_windows: int,
                          tail: int, transition: int, head: int,
                          rng: np.random.Generator,
                          ) -> tuple[np.ndarray, list[str | None]]:
    """Junction-shaped training windows with linearly blended gaps.

    Each window is [last `tail` frames of clip A | `transition` interpolated
    frames | first `head` frames of root-aligned clip B], localized to the
    window's first-frame root position. Labels are the target clip's style.
    """
    if not clips:
        raise ValueError("need at least one clip")
    root = clips[0].motion.skeleton.root_idx
    windows = []
    labels: list[str | None] = []
    for _ in range(n_windows):
        a = clips[int(rng.integers(len(clips)))]
        b = clips[int(rng.integers(len(clips)))]
        if a.F < tail or b.F < head:
            continue
        tail_f = a.motion.frames[-tail:]
        offset = tail_f[-1, root] - b.motion.frames[0, root]
        head_f = b.motion.frames[:head] + offset
        p, q = tail_f[-1], head_f[0]
        w = (np.arange(1, transition + 1) / (transition + 1))[:, None, None]
        gap = (1.0 - w) * p + w * q
        window = np.concatenate([tail_f, gap, head_f])
        window = window - window[0, root]
        windows.append(window)
        labels.append(clip_style(b))
    if not windows:
        raise ValueError("no clip pair was long enough for the window")
    return np.stack(windows), labels
