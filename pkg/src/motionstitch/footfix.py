"""Foot-skate cleanup for transition windows.

Linear blending drags planted feet across the ground. Each foot's trajectory
through the window is rewritten as a quadratic Bezier arc, one foot at a time
while the other stays put, mimicking an actual step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MotionError, MotionSequence


class WindowOutOfRange(MotionError):
    pass


@dataclass(frozen=True)
class BezierArc:
    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        for name in ("p0", "p1", "p2"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (3,) or not np.isfinite(v).all():
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class FootRefineConfig:
    clearance: float = 0.05
    split_ratio: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.split_ratio < 1.0):
            raise ValueError("split_ratio must be in (0, 1)")
        if self.clearance < 0:
            raise ValueError("clearance must be >= 0")


def bezier_eval(arc: BezierArc, t: float) -> np.ndarray:
    """(1-t)^2 p0 + 2(1-t)t p1 + t^2 p2 for t in [0, 1]."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t={t} outside [0, 1]")
    u = 1.0 - t
    return u * u * arc.p0 + 2.0 * u * t * arc.p1 + t * t * arc.p2


def _arc_between(p0: np.ndarray, p2: np.ndarray, clearance: float) -> BezierArc:
    p1 = (p0 + p2) / 2.0 + np.array([0.0, clearance, 0.0])
    return BezierArc(p0, p1, p2)


def refine_transition_feet(seq: MotionSequence, junction: int, window: int,
                           cfg: FootRefineConfig = FootRefineConfig()) -> MotionSequence:
    """Rewrite both feet across [junction, junction+window) with Bezier steps.

    The foot with the larger entry-to-exit displacement arcs to its final
    position during the first phase while the other is pinned; then roles
    swap. Ankles (the feet's parent joints) follow by the same per-frame
    delta; all other joints are untouched. Window endpoints are preserved.
    """
    if junction < 0 or window < 4 or junction + window > seq.F:
        raise WindowOutOfRange(
            f"window [{junction}, {junction + window}) invalid for {seq.F} frames")
    len_a = math.ceil(cfg.split_ratio * window)
    len_b = window - len_a
    if len_a < 2 or len_b < 2:
        raise WindowOutOfRange(f"phase lengths {len_a}/{len_b} too short to arc")

    sk = seq.skeleton
    feet = (sk.left_foot_idx, sk.right_foot_idx)
    w0, w1 = junction, junction + window
    orig = seq.frames
    disp = [float(np.linalg.norm(orig[w1 - 1, f] - orig[w0, f])) for f in feet]
    # larger movers steps first; tie goes to the left foot
    first, second = (feet[0], feet[1]) if disp[0] >= disp[1] else (feet[1], feet[0])

    frames = np.array(orig)
    arc_first = _arc_between(orig[w0, first], orig[w1 - 1, first], cfg.clearance)
    arc_second = _arc_between(orig[w0, second], orig[w1 - 1, second], cfg.clearance)

    # phase A: first foot travels its full arc, second pinned at entry
    for i in range(len_a):
        frames[w0 + i, first] = bezier_eval(arc_first, i / (len_a - 1))
        frames[w0 + i, second] = arc_second.p0
    # phase B: first pinned at its target, second travels
    for i in range(len_b):
        frames[w0 + len_a + i, first] = arc_first.p2
        frames[w0 + len_a + i, second] = bezier_eval(arc_second, i / (len_b - 1))

    # drag each ankle by its foot's delta so the leg does not stretch
    for f in feet:
        ankle = sk.parent[f]
        if ankle >= 0:
            delta = frames[w0:w1, f] - orig[w0:w1, f]
            frames[w0:w1, ankle] = orig[w0:w1, ankle] + delta

    return seq.with_frames(frames)


def foot_slide_score(seq: MotionSequence, start: int, length: int,
                     stance_tol: float = 0.005) -> float:
    """Mean horizontal foot speed (m/s) over stance frames in the window.

    A frame counts as stance for a foot when that foot's height is within
    stance_tol of its window minimum. Lower is better; a pinned foot scores 0.
    """
    if start < 0 or length < 2 or start + length > seq.F:
        raise WindowOutOfRange(f"window [{start}, {start + length}) invalid")
    sk = seq.skeleton
    speeds: list[float] = []
    for f in (sk.left_foot_idx, sk.right_foot_idx):
        pos = seq.frames[start:start + length, f]
        stance = pos[:, 1] <= pos[:, 1].min() + stance_tol
        horiz = pos[:, [0, 2]]
        step = np.linalg.norm(np.diff(horiz, axis=0), axis=1) * seq.fps
        speeds.extend(step[stance[:-1]].tolist())
    return float(np.mean(speeds)) if speeds else 0.0
