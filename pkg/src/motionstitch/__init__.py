"""motionstitch: long skeletal-motion assembly and diffusion-based stitching."""

from .core import (AnnotatedMotion, DegenerateDirection, MotionError,
                   MotionSequence, Segment, Skeleton, TimedScript,
                   duration_seconds, facing_direction,
                   facing_direction_horizontal, root_trajectory)
from .diffusion import (Denoiser, DiffusionSchedule, MaskTooSmall, StitchJob,
                        cfg_predict, forward_sample, load_checkpoint,
                        make_schedule, mask_middle, reverse_step,
                        save_checkpoint, stitch, train_stitcher)
from .footfix import (BezierArc, FootRefineConfig, WindowOutOfRange,
                      bezier_eval, foot_slide_score, refine_transition_feet)
from .metrics import (ApeAveReport, CorpusStats, ape, ave, corpus_stats,
                      transition_distance)
from .motionfile import ParseError
from .splice import (ClipTooShort, ExhaustedCorpus, IncompatibleFacing,
                     SpliceConfig, SpliceTrace, assemble_long,
                     build_transition, compatible, filter_min_length,
                     insert_timestamps, root_align, splice_pair)
from .synthetic import (STYLES, SyntheticRecipe, default_skeleton,
                        generate_clip, make_training_windows)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
