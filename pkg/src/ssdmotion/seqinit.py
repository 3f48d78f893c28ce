"""Initial long sequence: sampled sub-motions, random transitions, blended seams."""

from __future__ import annotations

import numpy as np

from .diffusion import ddpm_sample
from .errors import LayoutError
from .layout import SequenceLayout, SpanKind
from .motion import MotionSequence


def init_sequence(
    layout: SequenceLayout,
    denoiser,
    schedule=None,
    init_guidance: float = 2.5,
    rng: np.random.Generator | None = None,
    fps: int = 20,
) -> MotionSequence:
    """Fill the whole sequence with N(0, I), then sample every motion span.

    Frames are in the denoiser's feature space. No boundary blending is done
    here; see :func:`interpolate_boundaries`.
    """
    rng = rng if rng is not None else np.random.default_rng()
    for i in layout.motion_indices():
        if layout.spans[i].length > denoiser.max_window:
            raise LayoutError(
                f"motion span {i} has {layout.spans[i].length} frames; "
                f"denoiser supports at most {denoiser.max_window}"
            )
    frames = rng.standard_normal((layout.total_length, denoiser.dim))
    for (a, b), span in zip(layout.bounds, layout.spans):
        if span.kind is SpanKind.MOTION:
            frames[a:b] = ddpm_sample(
                denoiser, span.condition, span.length, init_guidance, rng, schedule
            )
    return MotionSequence(frames, layout, fps, getattr(denoiser, "normalizer", None))


def blend_windows(layout: SequenceLayout) -> list[tuple[int, int]]:
    """``(start, stop)`` of every 2n-frame blend window, validated."""
    n = layout.interp_width
    if n == 0:
        return []
    bounds = layout.bounds
    last = len(bounds) - 1
    for i, (a, b) in enumerate(bounds):
        # frames untouched by either seam must remain to anchor both blends
        need = n + 1 if i in (0, last) else 2 * n + 1
        if last and b - a < need:
            raise LayoutError(
                f"interp_width {n} too large for span {i} of length {b - a} (need {need})"
            )
    return [(b - n, b + n) for b in layout.boundaries()]


def interpolate_boundaries(seq: MotionSequence) -> MotionSequence:
    """Replace the 2n frames around each seam with a straight line.

    With ``A`` the last untouched frame before the window and ``B`` the first
    untouched frame after it, frame ``k`` of the window becomes
    ``(1 - l) A + l B`` with ``l = (k + 1) / (2n + 1)``.
    """
    src = seq.frames
    out = src.copy()
    n = seq.layout.interp_width
    lam = (np.arange(2 * n) + 1.0) / (2 * n + 1)
    for lo, hi in blend_windows(seq.layout):
        A, B = src[lo - 1], src[hi]
        out[lo:hi] = (1.0 - lam)[:, None] * A + lam[:, None] * B
    return MotionSequence(out, seq.layout, seq.fps, seq.normalizer)


def build_gradient_mask(layout: SequenceLayout, mask_l: float = 0.1, mask_h: float = 0.8) -> np.ndarray:
    """Per-frame gradient scale: ``mask_l`` on motion frames, ``mask_h`` on transitions."""
    for name, v in (("mask_l", mask_l), ("mask_h", mask_h)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return np.where(layout.frame_kinds(), float(mask_h), float(mask_l))
