"""Smoothness, continuity, overlap-consistency and feature-distance metrics.

Jerk and velocity metrics run on decoded pose frames by default
(``space="frames"``); ``space="fk"`` uses flattened joint positions instead.
Both are differences, so the normalizer's mean drops out and every metric is
homogeneous of degree one in the stored features.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .diffusion import forward_diffuse
from .errors import SSDError
from .layout import UNCOND
from .motion import MotionSequence, Skeleton, fk
from .sampler import WindowSpec, window_starts


@dataclass(frozen=True)
class TransitionMetrics:
    index: int  # span index in the layout
    peak_jerk: float
    area_under_jerk: float
    boundary_velocity_gap: float


@dataclass(frozen=True)
class TransitionReport:
    transitions: tuple[TransitionMetrics, ...]

    @property
    def mean_peak_jerk(self) -> float:
        return float(np.mean([t.peak_jerk for t in self.transitions]))

    @property
    def mean_area_under_jerk(self) -> float:
        return float(np.mean([t.area_under_jerk for t in self.transitions]))

    @property
    def mean_boundary_velocity_gap(self) -> float:
        return float(np.mean([t.boundary_velocity_gap for t in self.transitions]))

    def rows(self):
        """``(transition, metric, value)`` triples, aggregates under ``"mean"``."""
        for i, t in enumerate(self.transitions):
            yield i, "peak_jerk", t.peak_jerk
            yield i, "area_under_jerk", t.area_under_jerk
            yield i, "boundary_velocity_gap", t.boundary_velocity_gap
        yield "mean", "peak_jerk", self.mean_peak_jerk
        yield "mean", "area_under_jerk", self.mean_area_under_jerk
        yield "mean", "boundary_velocity_gap", self.mean_boundary_velocity_gap

    def table(self) -> str:
        lines = [f"{'transition':>10} {'peak_jerk':>14} {'auj':>14} {'vel_gap':>14}"]
        for i, t in enumerate(self.transitions):
            lines.append(
                f"{i:>10} {t.peak_jerk:14.6g} {t.area_under_jerk:14.6g} {t.boundary_velocity_gap:14.6g}"
            )
        lines.append(
            f"{'mean':>10} {self.mean_peak_jerk:14.6g} {self.mean_area_under_jerk:14.6g} "
            f"{self.mean_boundary_velocity_gap:14.6g}"
        )
        return "\n".join(lines)


def _signal(seq: MotionSequence, space: str, skeleton: Optional[Skeleton]) -> np.ndarray:
    if space == "frames":
        return seq.poses()
    if space == "fk":
        if skeleton is None:
            raise SSDError("space='fk' needs a skeleton")
        pos = fk(skeleton, seq.poses())
        return pos.reshape(pos.shape[0], -1)
    raise SSDError(f"unknown metric space {space!r}")


def _seam_gaps(x: np.ndarray, boundaries: Sequence[int]) -> np.ndarray:
    gaps = []
    for b in boundaries:
        before = np.linalg.norm(x[b - 1] - x[b - 2]) if b >= 2 else 0.0
        after = np.linalg.norm(x[b + 1] - x[b]) if b + 1 < x.shape[0] else 0.0
        gaps.append(abs(after - before))
    return np.asarray(gaps, dtype=np.float64)


def boundary_velocity_gap(
    seq: MotionSequence, space: str = "frames", skeleton: Optional[Skeleton] = None
) -> np.ndarray:
    """``| |v_after| - |v_before| |`` at every span boundary, in layout order.

    ``v_before`` is the last one-frame velocity inside the earlier span and
    ``v_after`` the first one inside the later span.
    """
    return _seam_gaps(_signal(seq, space, skeleton), seq.layout.boundaries())


def transition_report(
    seq: MotionSequence, space: str = "frames", skeleton: Optional[Skeleton] = None
) -> TransitionReport:
    """Peak and area-under jerk per transition, plus its worse seam gap.

    Each transition is padded by ``interp_width`` frames on both sides; a jerk
    row counts when its four-frame stencil touches the padded span.
    """
    layout = seq.layout
    if not layout.transition_indices():
        raise SSDError("sequence has no transition spans")
    if seq.length < 4:
        raise SSDError(f"need at least 4 frames for jerk, got {seq.length}")
    x = _signal(seq, space, skeleton)
    jerk = np.linalg.norm(np.diff(x, n=3, axis=0), axis=1)
    pad = layout.interp_width
    bounds = layout.bounds
    gaps = _seam_gaps(x, layout.boundaries())
    out = []
    for k, idx in enumerate(layout.transition_indices()):
        a, b = bounds[idx]
        lo, hi = max(0, a - pad - 3), min(jerk.shape[0], b + pad)
        rows = jerk[lo:hi]
        # boundaries alternate motion->transition, transition->motion
        gap = max(gaps[2 * k], gaps[2 * k + 1])
        out.append(
            TransitionMetrics(
                idx,
                float(rows.max()) if rows.size else 0.0,
                float(rows.sum() / seq.fps),
                float(gap),
            )
        )
    return TransitionReport(tuple(out))


def write_report_csv(reports: dict, path) -> None:
    """``file,transition,metric,value`` rows for ``{name: TransitionReport}``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "transition", "metric", "value"])
        for name, rep in reports.items():
            for tr, metric, value in rep.rows():
                w.writerow([name, tr, metric, repr(float(value))])


def sequence_features(x: np.ndarray) -> np.ndarray:
    """Mean speed, speed variance, mean jerk norm, then per-coordinate means."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 4:
        raise SSDError("feature extraction needs a (T >= 4, D) array")
    speed = np.linalg.norm(np.diff(x, axis=0), axis=1)
    jerk = np.linalg.norm(np.diff(x, n=3, axis=0), axis=1)
    return np.concatenate([[speed.mean(), speed.var(), jerk.mean()], x.mean(axis=0)])


def _as_frames(s) -> np.ndarray:
    return s.poses() if isinstance(s, MotionSequence) else np.asarray(s, dtype=np.float64)


def gaussian_feature_distance(set_a, set_b) -> float:
    """Squared 2-Wasserstein distance between diagonal Gaussian feature fits.

    A cheap desk-scale distributional distance; its values are not comparable
    with learned-feature FID scores.
    """
    if len(set_a) < 2 or len(set_b) < 2:
        raise SSDError("each set needs at least 2 sequences")
    fa = np.stack([sequence_features(_as_frames(s)) for s in set_a])
    fb = np.stack([sequence_features(_as_frames(s)) for s in set_b])
    if fa.shape[1] != fb.shape[1]:
        raise SSDError(f"feature sizes differ: {fa.shape[1]} vs {fb.shape[1]}")
    mu = np.sum((fa.mean(0) - fb.mean(0)) ** 2)
    sd = np.sum((np.sqrt(fa.var(0)) - np.sqrt(fb.var(0))) ** 2)
    return float(mu + sd)


def overlap_consistency(
    seq: MotionSequence,
    denoiser,
    schedule=None,
    spec: WindowSpec = WindowSpec(),
    probe_t: int = 100,
    probe_seed: int = 0,
) -> float:
    """Mean squared disagreement of adjacent windows' x0 predictions on their overlap.

    Noise is drawn once per absolute frame so both windows see the same
    ``x_t`` on shared frames. Predictions are unconditional, so the value
    reflects how well the sequence itself agrees with the prior.
    """
    if spec.stride >= spec.window:
        raise SSDError(f"stride {spec.stride} >= window {spec.window}: windows never overlap")
    schedule = schedule or denoiser.schedule
    starts = window_starts(seq.length, spec)
    if len(starts) < 2:
        raise SSDError("sequence fits in a single window; no overlaps")
    eps = np.random.default_rng(probe_seed).standard_normal(seq.frames.shape)
    x_t = forward_diffuse(seq.frames, probe_t, eps, schedule)
    preds = {s: denoiser.predict(x_t[s : s + spec.window], probe_t, UNCOND) for s in starts}
    errs = []
    for a, b in zip(starts[:-1], starts[1:]):
        lo, hi = b, a + spec.window
        errs.append(np.mean((preds[a][lo - a : hi - a] - preds[b][: hi - b]) ** 2))
    return float(np.mean(errs))
