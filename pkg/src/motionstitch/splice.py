"""Chain short annotated clips into long sequences.

Pipeline: length filter -> facing compatibility -> root alignment ->
10-frame linear transition window -> timestamp insertion, repeated until the
chain reaches the target length band.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (AnnotatedMotion, MotionError, MotionSequence, TimedScript,
                   facing_direction)


class ClipTooShort(MotionError):
    pass


class IncompatibleFacing(MotionError):
    pass


class ExhaustedCorpus(MotionError):
    """No compatible continuation exists before the chain reached min length."""


@dataclass(frozen=True)
class SpliceConfig:
    min_clip_frames: int = 10
    facing_cos_threshold: float = 0.98
    tail_frames: int = 5
    head_frames: int = 5
    min_output_frames: int = 600
    max_output_frames: int | None = 935
    rng_seed: int = 0

    def __post_init__(self):
        if self.tail_frames < 1 or self.head_frames < 1:
            raise ValueError("tail_frames and head_frames must be >= 1")
        if (self.max_output_frames is not None
                and self.min_output_frames > self.max_output_frames):
            raise ValueError("min_output_frames > max_output_frames")

    @property
    def window(self) -> int:
        return self.tail_frames + self.head_frames


@dataclass(frozen=True)
class SpliceTrace:
    source_clip_ids: tuple = ()
    junction_frames: tuple[int, ...] = ()

    def __post_init__(self):
        if self.source_clip_ids and len(self.junction_frames) != len(self.source_clip_ids) - 1:
            raise ValueError("junction count must be clip count - 1")


def filter_min_length(corpus: list[AnnotatedMotion], cfg: SpliceConfig) -> list[AnnotatedMotion]:
    """Drop clips shorter than cfg.min_clip_frames; order preserved."""
    return [c for c in corpus if c.F >= cfg.min_clip_frames]


def compatible(prev: MotionSequence, next_: MotionSequence, cfg: SpliceConfig) -> bool:
    """True when the facing at prev's last frame matches next's first frame."""
    d_end = facing_direction(prev, prev.F - 1)
    d_start = facing_direction(next_, 0)
    return float(np.dot(d_end, d_start)) >= cfg.facing_cos_threshold


def root_align(prev: MotionSequence, next_: MotionSequence) -> MotionSequence:
    """Translate next so its first-frame root lands on prev's last-frame root."""
    if prev.skeleton is not next_.skeleton and prev.skeleton != next_.skeleton:
        raise ValueError("clips use different skeletons")
    r = prev.skeleton.root_idx
    offset = prev.frames[-1, r] - next_.frames[0, r]
    return next_.with_frames(next_.frames + offset)


def build_transition(prev: MotionSequence, aligned_next: MotionSequence,
                     cfg: SpliceConfig) -> np.ndarray:
    """Linear blend replacing the consumed tail+head boundary frames.

    Frame i of the W-frame window is (1 - i/(W-1)) * I_s + (i/(W-1)) * I_e
    with I_s the first consumed tail frame and I_e the last consumed head frame.
    """
    if prev.F < cfg.tail_frames:
        raise ClipTooShort(f"prev has {prev.F} frames, needs >= {cfg.tail_frames}")
    if aligned_next.F < cfg.head_frames:
        raise ClipTooShort(f"next has {aligned_next.F} frames, needs >= {cfg.head_frames}")
    w = cfg.window
    i_s = prev.frames[prev.F - cfg.tail_frames]
    i_e = aligned_next.frames[cfg.head_frames - 1]
    t = np.arange(w, dtype=np.float64)[:, None, None] / (w - 1)
    return (1.0 - t) * i_s + t * i_e


def insert_timestamps(script_a: TimedScript, script_b: TimedScript,
                      len_a: int) -> TimedScript:
    """Append script_b shifted by len_a frames; markers become prefix sums."""
    return TimedScript(script_a.segments + script_b.shifted(len_a).segments)


def splice_pair(prev: AnnotatedMotion, next_: AnnotatedMotion,
                cfg: SpliceConfig) -> tuple[AnnotatedMotion, int]:
    """Join two annotated clips; returns the result and the junction frame.

    Output length is F_prev + F_next: the 10-frame blend window replaces the
    boundary frames it consumed.
    """
    if not compatible(prev.motion, next_.motion, cfg):
        raise IncompatibleFacing("facing directions differ at the boundary")
    aligned = root_align(prev.motion, next_.motion)
    window = build_transition(prev.motion, aligned, cfg)
    junction = prev.F - cfg.tail_frames
    frames = np.concatenate([
        prev.motion.frames[:junction],
        window,
        aligned.frames[cfg.head_frames:],
    ])
    motion = MotionSequence(prev.motion.skeleton, frames, prev.motion.fps)
    script = insert_timestamps(prev.script, next_.script, prev.F)
    return AnnotatedMotion(motion, script), junction


def max_interframe_displacement(frames: np.ndarray) -> float:
    """Largest per-joint displacement between any two consecutive frames."""
    if frames.shape[0] < 2:
        return 0.0
    d = np.linalg.norm(np.diff(frames, axis=0), axis=2)
    return float(d.max())


@dataclass
class AssemblySummary:
    chains_attempted: int = 0
    chains_emitted: int = 0
    exhausted: int = 0
    exhausted_chain_indices: list[int] = field(default_factory=list)


def assemble_long(corpus: list[AnnotatedMotion], cfg: SpliceConfig,
                  n_chains: int,
                  clip_ids: list | None = None,
                  ) -> tuple[list[tuple[AnnotatedMotion, SpliceTrace]], AssemblySummary]:
    """Grow n_chains random chains of compatible clips into long sequences.

    Each chain draws clips uniformly (seeded per chain index, so results do
    not depend on scheduling) until its length enters
    [min_output_frames, max_output_frames]. Chains that run out of
    compatible continuations are discarded and counted in the summary.
    """
    if clip_ids is None:
        clip_ids = list(range(len(corpus)))
    summary = AssemblySummary(chains_attempted=n_chains)
    out: list[tuple[AnnotatedMotion, SpliceTrace]] = []
    max_out = cfg.max_output_frames

    def fits(extra: int, cur_len: int) -> bool:
        return max_out is None or cur_len + extra <= max_out

    for k in range(n_chains):
        rng = np.random.default_rng([cfg.rng_seed, k])
        starts = [i for i, c in enumerate(corpus) if fits(c.F, 0)]
        if not starts:
            summary.exhausted += 1
            summary.exhausted_chain_indices.append(k)
            continue
        i0 = starts[int(rng.integers(len(starts)))]
        chain = corpus[i0]
        ids = [clip_ids[i0]]
        junctions: list[int] = []
        ok = True
        while chain.F < cfg.min_output_frames:
            cands = []
            for i, c in enumerate(corpus):
                if not fits(c.F, chain.F):
                    continue
                try:
                    if compatible(chain.motion, c.motion, cfg):
                        cands.append(i)
                except MotionError:
                    continue
            if not cands:
                ok = False
                break
            j = cands[int(rng.integers(len(cands)))]
            chain, junction = splice_pair(chain, corpus[j], cfg)
            ids.append(clip_ids[j])
            junctions.append(junction)
        if not ok:
            summary.exhausted += 1
            summary.exhausted_chain_indices.append(k)
            continue
        out.append((chain, SpliceTrace(tuple(ids), tuple(junctions))))
        summary.chains_emitted += 1
    return out, summary
