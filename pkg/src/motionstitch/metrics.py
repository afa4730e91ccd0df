"""Geometric evaluation: transition distance, APE/AVE, corpus statistics."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import AnnotatedMotion, MotionSequence


@dataclass(frozen=True)
class ApeAveReport:
    root_joint: float
    global_traj: float
    mean_local: float
    mean_global: float

    def as_dict(self) -> dict[str, float]:
        return {
            "root_joint": self.root_joint,
            "global_traj": self.global_traj,
            "mean_local": self.mean_local,
            "mean_global": self.mean_global,
        }


def transition_distance(seq: MotionSequence, junction: int) -> float:
    """Root-local pose distance between frames junction and junction+1."""
    if junction < 0 or junction + 1 >= seq.F:
        raise IndexError(f"junction {junction} out of range for {seq.F} frames")
    r = seq.skeleton.root_idx
    a = seq.frames[junction] - seq.frames[junction, r]
    b = seq.frames[junction + 1] - seq.frames[junction + 1, r]
    return float(np.linalg.norm(a - b))


def _check_shapes(gt: MotionSequence, gen: MotionSequence) -> None:
    if gt.frames.shape != gen.frames.shape:
        raise ValueError(f"shape mismatch: {gt.frames.shape} vs {gen.frames.shape}")


def ape(gt: MotionSequence, gen: MotionSequence) -> ApeAveReport:
    """Average positional error in the four Table-style decompositions."""
    _check_shapes(gt, gen)
    r = gt.skeleton.root_idx
    root_gt = gt.frames[:, r]
    root_gen = gen.frames[:, r]
    root_joint = float(np.linalg.norm(root_gt - root_gen, axis=1).mean())
    # global trajectory = ground-plane (xz) projection of the root path
    global_traj = float(np.linalg.norm(
        root_gt[:, [0, 2]] - root_gen[:, [0, 2]], axis=1).mean())
    local_gt = gt.frames - root_gt[:, None, :]
    local_gen = gen.frames - root_gen[:, None, :]
    mean_local = float(np.linalg.norm(local_gt - local_gen, axis=2).mean())
    mean_global = float(np.linalg.norm(gt.frames - gen.frames, axis=2).mean())
    return ApeAveReport(root_joint, global_traj, mean_local, mean_global)


def _var(x: np.ndarray) -> np.ndarray:
    # population variance over the time axis
    return x.var(axis=0)


def ave(gt: MotionSequence, gen: MotionSequence) -> ApeAveReport:
    """Average variance error: mean |temporal-variance difference| per joint
    coordinate, under the same four decompositions as APE."""
    _check_shapes(gt, gen)
    r = gt.skeleton.root_idx
    root_gt = gt.frames[:, r]
    root_gen = gen.frames[:, r]
    root_joint = float(np.abs(_var(root_gt) - _var(root_gen)).mean())
    global_traj = float(np.abs(
        _var(root_gt[:, [0, 2]]) - _var(root_gen[:, [0, 2]])).mean())
    local_gt = gt.frames - root_gt[:, None, :]
    local_gen = gen.frames - root_gen[:, None, :]
    mean_local = float(np.abs(_var(local_gt) - _var(local_gen)).mean())
    mean_global = float(np.abs(_var(gt.frames) - _var(gen.frames)).mean())
    return ApeAveReport(root_joint, global_traj, mean_local, mean_global)


@dataclass(frozen=True)
class CorpusStats:
    n_motions: int
    n_texts: int
    total_hours: float
    max_duration_s: float
    min_duration_s: float
    frame_histogram: dict[int, int]
    words_mean: float
    words_median: float
    actions_per_sequence_histogram: dict[int, int]


def corpus_stats(corpus: list[AnnotatedMotion]) -> CorpusStats:
    """Aggregate counts, durations and text-length statistics of a corpus."""
    if not corpus:
        return CorpusStats(0, 0, 0.0, 0.0, 0.0, {}, 0.0, 0.0, {})
    durations = [m.F / m.motion.fps for m in corpus]
    total_hours = sum(m.F / (m.motion.fps * 3600.0) for m in corpus)
    word_counts = [len(seg.text.split())
                   for m in corpus for seg in m.script.segments]
    frame_hist = Counter(m.F for m in corpus)
    action_hist = Counter(len(m.script.segments) for m in corpus)
    return CorpusStats(
        n_motions=len(corpus),
        n_texts=sum(len(m.script.segments) for m in corpus),
        total_hours=float(total_hours),
        max_duration_s=float(max(durations)),
        min_duration_s=float(min(durations)),
        frame_histogram=dict(sorted(frame_hist.items())),
        words_mean=float(np.mean(word_counts)) if word_counts else 0.0,
        words_median=float(np.median(word_counts)) if word_counts else 0.0,
        actions_per_sequence_histogram=dict(sorted(action_hist.items())),
    )


def mean_frames_from_totals(n_motions: int, total_hours: float, fps: float) -> float:
    """Invert the total-hours bookkeeping to a mean clip length in frames."""
    return total_hours * 3600.0 * fps / n_motions
