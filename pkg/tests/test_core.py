import numpy as np
import pytest

from motionstitch import (DegenerateDirection, MotionSequence, Segment,
                          Skeleton, TimedScript, duration_seconds,
                          facing_direction, facing_direction_horizontal,
                          root_trajectory)
from motionstitch.synthetic import SyntheticRecipe, default_skeleton, generate_clip


def make_seq(head, neck, fps=20.0):
    """Two-joint-special skeleton collapsed onto a minimal 5-joint rig."""
    sk = Skeleton(("root", "neck", "head", "lf", "rf"),
                  (-1, 0, 1, 0, 0), 0, 1, 2, 3, 4)
    frame = np.zeros((1, 5, 3))
    frame[0, 1] = neck
    frame[0, 2] = head
    return MotionSequence(sk, frame, fps)


class TestSkeleton:
    def test_default_layout_valid(self):
        sk = default_skeleton()
        assert sk.joint_count == 22
        assert sk.parent[sk.root_idx] == -1

    def test_rejects_two_roots(self):
        with pytest.raises(ValueError):
            Skeleton(("a", "b", "c", "d", "e"), (-1, -1, 0, 0, 0), 0, 1, 2, 3, 4)

    def test_rejects_duplicate_special(self):
        with pytest.raises(ValueError):
            Skeleton(("a", "b", "c", "d", "e"), (-1, 0, 0, 0, 0), 0, 1, 1, 3, 4)

    def test_rejects_cycle(self):
        with pytest.raises(ValueError):
            Skeleton(("a", "b", "c", "d", "e"), (-1, 2, 1, 0, 0), 0, 1, 2, 3, 4)


class TestFacingDirection:
    def test_axis_aligned(self):
        seq = make_seq(head=(0, 1.7, 0), neck=(0, 1.5, 0))
        assert np.allclose(facing_direction(seq, 0), (0, 1, 0))

    def test_horizontal_pair(self):
        seq = make_seq(head=(1, 1, 0), neck=(0, 1, 0))
        assert np.allclose(facing_direction(seq, 0), (1, 0, 0))

    def test_degenerate(self):
        seq = make_seq(head=(0, 1, 0), neck=(0, 1, 0))
        with pytest.raises(DegenerateDirection):
            facing_direction(seq, 0)

    def test_unit_norm(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            seq = make_seq(head=rng.normal(size=3), neck=rng.normal(size=3))
            try:
                d = facing_direction(seq, 0)
            except DegenerateDirection:
                continue
            assert abs(np.linalg.norm(d) - 1.0) <= 1e-12

    def test_translation_invariant(self):
        seq = make_seq(head=(0.3, 1.7, 0.1), neck=(0.1, 1.5, 0.0))
        shifted = seq.with_frames(seq.frames + np.array([4.0, -2.0, 7.0]))
        a = facing_direction(seq, 0)
        b = facing_direction(shifted, 0)
        assert np.abs(a - b).max() <= 1e-12

    def test_horizontal_variant_projects(self):
        seq = make_seq(head=(1, 2, 0), neck=(0, 1, 0))
        assert np.allclose(facing_direction_horizontal(seq, 0), (1, 0, 0))

    def test_horizontal_variant_degenerate_for_vertical(self):
        seq = make_seq(head=(0, 1.7, 0), neck=(0, 1.5, 0))
        with pytest.raises(DegenerateDirection):
            facing_direction_horizontal(seq, 0)


class TestDuration:
    @pytest.mark.parametrize("frames,fps,expected",
                             [(600, 20, 30.0), (920, 20, 46.0), (1, 20, 0.05)])
    def test_values(self, frames, fps, expected):
        sk = default_skeleton()
        seq = MotionSequence(sk, np.zeros((frames, 22, 3)) + [0, 1, 0], fps)
        assert duration_seconds(seq) == pytest.approx(expected)


class TestRootTrajectory:
    def test_constant_pose(self):
        clip = generate_clip(SyntheticRecipe("idle", 60, 5))
        traj = root_trajectory(clip.motion)
        assert np.array_equal(traj, np.repeat(traj[:1], 60, axis=0))

    def test_translation_equivariance(self):
        clip = generate_clip(SyntheticRecipe("walk", 60, 5))
        shifted = clip.motion.with_frames(clip.motion.frames + np.array([1.0, 0, 0]))
        assert np.array_equal(root_trajectory(shifted),
                              root_trajectory(clip.motion) + np.array([1.0, 0, 0]))

    def test_walk_root_is_straight_line(self):
        # oracle: least-squares line fit, residual must vanish
        traj = root_trajectory(generate_clip(SyntheticRecipe("walk", 100, 11)).motion)
        p0 = traj.mean(axis=0)
        centered = traj - p0
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        resid = centered - np.outer(centered @ vt[0], vt[0])
        assert np.linalg.norm(resid, axis=1).max() < 1e-9


class TestTimedScript:
    def test_contiguity_enforced(self):
        with pytest.raises(ValueError):
            TimedScript((Segment("a", 0, 10), Segment("b", 12, 20)))

    def test_must_start_at_zero(self):
        with pytest.raises(ValueError):
            TimedScript((Segment("a", 5, 10),))

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            TimedScript((Segment("a", 0, 10), Segment("b", 8, 20)))

    def test_empty_ok(self):
        assert TimedScript().total_frames == 0


class TestMotionSequence:
    def test_rejects_nonfinite(self):
        sk = default_skeleton()
        frames = np.zeros((2, 22, 3))
        frames[1, 3, 0] = np.nan
        with pytest.raises(ValueError):
            MotionSequence(sk, frames)

    def test_frames_immutable(self):
        clip = generate_clip(SyntheticRecipe("idle", 20, 0))
        with pytest.raises(ValueError):
            clip.motion.frames[0, 0, 0] = 1.0
