"""Sliding windows over a long sequence and the per-window condition rule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SSDError
from .layout import UNCOND, SequenceLayout, SpanKind
from .motion import MotionSequence


@dataclass(frozen=True)
class WindowSpec:
    window: int = 120
    stride: int = 30

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise SSDError("window and stride must be >= 1")


@dataclass(eq=False)
class WindowSample:
    start: int
    frames: np.ndarray
    condition: Optional[int]
    overlapped_motions: tuple[int, ...]

    @property
    def stop(self) -> int:
        return self.start + self.frames.shape[0]


def window_starts(length: int, spec: WindowSpec) -> list[int]:
    """Grid ``0, S, 2S, ...`` up to ``T - W``, plus ``T - W`` for tail coverage."""
    if spec.window > length:
        raise SSDError(f"window {spec.window} longer than sequence {length}")
    last = length - spec.window
    starts = list(range(0, last + 1, spec.stride))
    if starts[-1] != last:
        starts.append(last)
    return starts


def uncovered_frames(length: int, spec: WindowSpec) -> np.ndarray:
    """Frames no window ever touches (nonempty only when stride > window)."""
    covered = np.zeros(length, dtype=bool)
    for s in window_starts(length, spec):
        covered[s : s + spec.window] = True
    return np.flatnonzero(~covered)


def overlapped_motions(start: int, stop: int, layout: SequenceLayout) -> tuple[int, ...]:
    """1-based ordinals of motion spans intersecting ``[start, stop)``."""
    out = []
    ordinal = 0
    for (a, b), span in zip(layout.bounds, layout.spans):
        if span.kind is not SpanKind.MOTION:
            continue
        ordinal += 1
        if a < stop and start < b:
            out.append(ordinal)
    return tuple(out)


def select_condition(start: int, stop: int, layout: SequenceLayout, rng: np.random.Generator):
    """Label for window ``[start, stop)``.

    One intersecting motion span gives its label; ``n > 1`` spans give each
    label with probability ``1/n``; a window inside a transition gets the
    unconditional label.
    """
    motions = overlapped_motions(start, stop, layout)
    if not motions:
        return UNCOND
    labels = [layout.spans[2 * (k - 1)].condition for k in motions]
    if len(labels) == 1:
        return labels[0]
    return labels[int(rng.integers(len(labels)))]


def extract(
    seq: MotionSequence, start: int, spec: WindowSpec, rng: np.random.Generator | None = None
) -> WindowSample:
    if not 0 <= start <= seq.length - spec.window:
        raise SSDError(f"window start {start} invalid for length {seq.length}")
    stop = start + spec.window
    rng = rng if rng is not None else np.random.default_rng()
    return WindowSample(
        start=start,
        frames=seq.frames[start:stop].copy(),
        condition=select_condition(start, stop, seq.layout, rng),
        overlapped_motions=overlapped_motions(start, stop, seq.layout),
    )
