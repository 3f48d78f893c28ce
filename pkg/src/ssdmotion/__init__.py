"""Long motion synthesis by segment score distillation over a short-window prior."""

from .diffusion import GaussianPrior, NoiseSchedule, ddpm_sample, forward_diffuse, guided_predict, make_schedule
from .errors import (
    CheckpointError,
    ConfigError,
    DimensionError,
    LayoutError,
    OptimizationError,
    SSDError,
    TrainingDivergence,
)
from .layout import UNCOND, SequenceLayout, Span, SpanKind
from .metrics import (
    TransitionReport,
    boundary_velocity_gap,
    gaussian_feature_distance,
    overlap_consistency,
    transition_report,
)
from .motion import (
    FeatureNormalizer,
    MotionSequence,
    PoseVector,
    Skeleton,
    compute_foot_contacts,
    finite_difference,
    fk,
    toy_skeleton,
)
from .sampler import WindowSample, WindowSpec, extract, overlapped_motions, select_condition, window_starts
from .seqinit import build_gradient_mask, init_sequence, interpolate_boundaries
from .ssd import (
    AdamW,
    LossBreakdown,
    SSDConfig,
    apply_update,
    optimize,
    optimize_single_prompt,
    ssd_gradient,
)
from .toyprior import ToyDenoiser, generate_dataset, load_checkpoint, save_checkpoint, train_denoiser

__version__ = "0.1.0"
