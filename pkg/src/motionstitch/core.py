"""Core domain types: skeleton topology, motion sequences, timed text scripts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MotionError(Exception):
    """Base class for all domain errors raised by this package."""


class DegenerateDirection(MotionError):
    """Head and neck coincide; the facing direction is undefined."""


@dataclass(frozen=True)
class Skeleton:
    """Joint topology plus the named indices every operation needs.

    parent[i] is the parent joint index, -1 for the root. Exactly one joint
    may be parentless and it must be ``root_idx``.
    """

    joint_names: tuple[str, ...]
    parent: tuple[int, ...]
    root_idx: int
    neck_idx: int
    head_idx: int
    left_foot_idx: int
    right_foot_idx: int

    def __post_init__(self):
        n = len(self.joint_names)
        if n < 1:
            raise ValueError("skeleton needs at least one joint")
        if len(self.parent) != n:
            raise ValueError("parent list length != joint count")
        roots = [i for i, p in enumerate(self.parent) if p < 0]
        if roots != [self.root_idx]:
            raise ValueError(f"exactly one parentless joint expected at root_idx, got {roots}")
        for i, p in enumerate(self.parent):
            if p >= n:
                raise ValueError(f"joint {i}: parent index {p} out of range")
        special = (self.root_idx, self.neck_idx, self.head_idx,
                   self.left_foot_idx, self.right_foot_idx)
        if len(set(special)) != 5 or any(s < 0 or s >= n for s in special):
            raise ValueError("special joint indices must be distinct and in range")
        # acyclicity: walking up from any joint must reach the root
        for i in range(n):
            seen = set()
            j = i
            while self.parent[j] >= 0:
                if j in seen:
                    raise ValueError(f"parent chain of joint {i} contains a cycle")
                seen.add(j)
                j = self.parent[j]

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class MotionSequence:
    """F x J x 3 global joint positions in meters, sampled at ``fps``."""

    skeleton: Skeleton
    frames: np.ndarray
    fps: float = 20.0

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise ValueError(f"frames must be F x J x 3, got {frames.shape}")
        if frames.shape[0] < 1:
            raise ValueError("motion needs at least one frame")
        if frames.shape[1] != self.skeleton.joint_count:
            raise ValueError("frame joint count does not match skeleton")
        if not np.isfinite(frames).all():
            raise ValueError("frames contain non-finite coordinates")
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        object.__setattr__(self, "frames", _freeze(frames))

    @property
    def F(self) -> int:
        return self.frames.shape[0]

    @property
    def J(self) -> int:
        return self.frames.shape[1]

    def with_frames(self, frames: np.ndarray) -> "MotionSequence":
        return MotionSequence(self.skeleton, frames, self.fps)


@dataclass(frozen=True)
class Segment:
    text: str
    start_frame: int
    end_frame: int


@dataclass(frozen=True)
class TimedScript:
    """Ordered, contiguous (text, start, end) segments covering [0, F)."""

    segments: tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            return
        if segs[0].start_frame != 0:
            raise ValueError("first segment must start at frame 0")
        for k, s in enumerate(segs):
            if s.end_frame <= s.start_frame:
                raise ValueError(f"segment {k} has non-positive length")
            if k > 0 and s.start_frame != segs[k - 1].end_frame:
                raise ValueError(
                    f"segments {k - 1} and {k} are not contiguous "
                    f"(end {segs[k - 1].end_frame} vs start {s.start_frame})")

    @property
    def total_frames(self) -> int:
        return self.segments[-1].end_frame if self.segments else 0

    def shifted(self, offset: int) -> "TimedScript":
        if not self.segments:
            return self
        if offset == 0:
            return self
        # bypass the start-at-0 check: a shifted script is an internal
        # intermediate, only ever concatenated after another script
        segs = tuple(Segment(s.text, s.start_frame + offset, s.end_frame + offset)
                     for s in self.segments)
        out = object.__new__(TimedScript)
        object.__setattr__(out, "segments", segs)
        return out


@dataclass(frozen=True)
class AnnotatedMotion:
    motion: MotionSequence
    script: TimedScript

    def __post_init__(self):
        if self.script.segments and self.script.total_frames != self.motion.F:
            raise ValueError(
                f"script covers {self.script.total_frames} frames, motion has {self.motion.F}")

    @property
    def F(self) -> int:
        return self.motion.F


def facing_direction(seq: MotionSequence, frame: int) -> np.ndarray:
    """Unit vector from the neck joint to the head joint at ``frame``."""
    if frame < 0 or frame >= seq.F:
        raise IndexError(f"frame {frame} out of range [0, {seq.F})")
    sk = seq.skeleton
    d = seq.frames[frame, sk.head_idx] - seq.frames[frame, sk.neck_idx]
    n = np.linalg.norm(d)
    if n < 1e-9:
        raise DegenerateDirection(f"head and neck coincide at frame {frame}")
    return d / n


def facing_direction_horizontal(seq: MotionSequence, frame: int) -> np.ndarray:
    """Ground-plane (xz) projection of the facing direction, renormalized."""
    if frame < 0 or frame >= seq.F:
        raise IndexError(f"frame {frame} out of range [0, {seq.F})")
    sk = seq.skeleton
    d = seq.frames[frame, sk.head_idx] - seq.frames[frame, sk.neck_idx]
    d = np.array([d[0], 0.0, d[2]])
    n = np.linalg.norm(d)
    if n < 1e-9:
        raise DegenerateDirection(f"facing has no horizontal component at frame {frame}")
    return d / n


def duration_seconds(seq: MotionSequence) -> float:
    return seq.F / seq.fps


def root_trajectory(seq: MotionSequence) -> np.ndarray:
    """F x 3 positions of the root joint."""
    return np.array(seq.frames[:, seq.skeleton.root_idx, :])
