"""Segment layout of a long motion: alternating motion and transition spans."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import LayoutError

#: Sentinel condition meaning "no condition" (classifier-free guidance null label).
UNCOND = None


class SpanKind(str, Enum):
    MOTION = "motion"
    TRANSITION = "transition"


@dataclass(frozen=True)
class Span:
    kind: SpanKind
    length: int
    condition: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SpanKind(self.kind))
        if self.length < 1:
            raise LayoutError(f"span length must be >= 1, got {self.length}")
        if self.kind is SpanKind.MOTION and self.condition is None:
            raise LayoutError("motion span requires a condition label")
        if self.kind is SpanKind.TRANSITION and self.condition is not None:
            raise LayoutError("transition span cannot carry a condition label")
        if self.condition is not None and self.condition < 0:
            raise LayoutError(f"condition labels are nonnegative, got {self.condition}")


@dataclass(frozen=True)
class SequenceLayout:
    """Ordered spans ``m1, t1, m2, ..., mn`` plus the boundary blend width."""

    spans: tuple[Span, ...]
    interp_width: int = 3

    def __post_init__(self):
        spans = tuple(self.spans)
        object.__setattr__(self, "spans", spans)
        if not spans:
            raise LayoutError("layout needs at least one span")
        for i, span in enumerate(spans):
            want = SpanKind.MOTION if i % 2 == 0 else SpanKind.TRANSITION
            if span.kind is not want:
                raise LayoutError(
                    f"span {i} is {span.kind.value}; spans must alternate "
                    "motion, transition, ..., motion"
                )
        if spans[-1].kind is not SpanKind.MOTION:
            raise LayoutError("layout must end with a motion span")
        if self.interp_width < 0:
            raise LayoutError("interp_width must be >= 0")
        if len(spans) > 1:
            shortest = min(s.length for s in spans)
            if self.interp_width > shortest:
                raise LayoutError(
                    f"interp_width {self.interp_width} exceeds shortest span {shortest}"
                )

    @classmethod
    def from_motions(
        cls,
        conditions: Sequence[int],
        motion_length: int | Sequence[int] = 60,
        transition_length: int = 30,
        interp_width: int = 3,
    ) -> "SequenceLayout":
        """Build ``m1, t1, ..., mn`` with uniform transition lengths."""
        if isinstance(motion_length, int):
            motion_length = [motion_length] * len(conditions)
        spans = []
        for i, (c, length) in enumerate(zip(conditions, motion_length)):
            if i:
                spans.append(Span(SpanKind.TRANSITION, transition_length))
            spans.append(Span(SpanKind.MOTION, length, int(c)))
        return cls(tuple(spans), interp_width)

    @property
    def total_length(self) -> int:
        return sum(s.length for s in self.spans)

    @property
    def bounds(self) -> list[tuple[int, int]]:
        """Half-open ``[start, end)`` frame range of every span."""
        out, pos = [], 0
        for s in self.spans:
            out.append((pos, pos + s.length))
            pos += s.length
        return out

    def motion_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.spans) if s.kind is SpanKind.MOTION]

    def transition_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.spans) if s.kind is SpanKind.TRANSITION]

    def frame_kinds(self) -> np.ndarray:
        """Boolean vector, True on transition frames."""
        out = np.zeros(self.total_length, dtype=bool)
        for (a, b), s in zip(self.bounds, self.spans):
            if s.kind is SpanKind.TRANSITION:
                out[a:b] = True
        return out

    def transition_frames(self) -> np.ndarray:
        return np.flatnonzero(self.frame_kinds())

    def motion_frames(self) -> np.ndarray:
        return np.flatnonzero(~self.frame_kinds())

    def boundaries(self) -> list[int]:
        """First frame index of every span after the first."""
        return [a for a, _ in self.bounds[1:]]

    def with_conditions(self, conditions: Sequence[int]) -> "SequenceLayout":
        """Copy with motion labels replaced, in motion order."""
        it = iter(conditions)
        spans = tuple(
            Span(s.kind, s.length, int(next(it))) if s.kind is SpanKind.MOTION else s
            for s in self.spans
        )
        return SequenceLayout(spans, self.interp_width)
