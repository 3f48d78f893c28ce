"""Segment score distillation: losses, gradient, masked AdamW and the outer loop."""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import kernels
from .diffusion import NoiseSchedule, forward_diffuse, guided_predict
from .errors import DimensionError, OptimizationError, SSDError
from .layout import UNCOND, SequenceLayout, Span, SpanKind
from .motion import MotionSequence, Skeleton, compute_foot_contacts, fk, fk_jacobian
from .sampler import WindowSample, WindowSpec, extract, window_starts
from .seqinit import build_gradient_mask

logger = logging.getLogger(__name__)

MASK_MODES = ("update", "gradient")

PROFILES = {
    "humanml": dict(lambda_pos=0.0, lambda_foot=0.0, lambda_vel=0.0),
    "babel": dict(lambda_pos=0.1, lambda_foot=0.1, lambda_vel=0.1),
}


@dataclass(frozen=True)
class SSDConfig:
    window: int = 120
    stride: int = 30
    iterations: int = 20000
    lr: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t_min: int = 20
    t_max: int = 980
    guidance: float = 7.5
    lambda_pos: float = 0.0
    lambda_foot: float = 0.0
    lambda_vel: float = 0.0
    mask_l: float = 0.1
    mask_h: float = 0.8
    interp_width: int = 3
    seed: int = 0
    # predict with the null label as the align loss is written, ignoring guidance
    strict_uncond: bool = False
    # straight-through d x0_hat / d x0 = I for the foot term and x0_hat side of pos
    soft_chain: bool = False
    log_every: int = 10
    mask_mode: str = "update"
    height_eps: float = 0.05
    vel_eps: float = 0.01

    @classmethod
    def profile(cls, name: str, **overrides) -> "SSDConfig":
        if name not in PROFILES:
            raise SSDError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
        return cls(**{**PROFILES[name], **overrides})

    @property
    def window_spec(self) -> WindowSpec:
        return WindowSpec(self.window, self.stride)

    def validate(self, schedule: NoiseSchedule) -> None:
        if not 0 <= self.t_min <= self.t_max < schedule.num_steps:
            raise SSDError(
                f"need 0 <= t_min <= t_max < {schedule.num_steps}, "
                f"got {self.t_min}, {self.t_max}"
            )
        if min(self.lambda_pos, self.lambda_foot, self.lambda_vel) < 0:
            raise SSDError("loss weights must be nonnegative")
        if self.lr <= 0:
            raise SSDError("learning rate must be positive")
        if self.iterations < 0:
            raise SSDError("iterations must be nonnegative")
        if self.log_every < 1:
            raise SSDError("log_every must be >= 1")
        if self.mask_mode not in MASK_MODES:
            raise SSDError(f"mask_mode must be one of {MASK_MODES}, got {self.mask_mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LossBreakdown:
    align: float
    pos: float
    foot: float
    vel: float
    total: float

    @classmethod
    def combine(cls, align, pos, foot, vel, config: SSDConfig) -> "LossBreakdown":
        total = (
            align
            + config.lambda_pos * pos
            + config.lambda_foot * foot
            + config.lambda_vel * vel
        )
        return cls(float(align), float(pos), float(foot), float(vel), float(total))


@dataclass(frozen=True)
class LogRecord:
    iteration: int
    t: int
    loss: LossBreakdown


# ---------------------------------------------------------------- losses


def _check_pair(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError("loss inputs", a.shape, b.shape)
    return a, b


def _poses(x, normalizer):
    return x if normalizer is None else normalizer.decode(x)


def align_loss(x_hat, x0, wt: float) -> float:
    x_hat, x0 = _check_pair(x_hat, x0)
    return float(wt * np.mean((x_hat - x0) ** 2))


def pos_loss(skeleton: Optional[Skeleton], x_hat, x0, normalizer=None) -> float:
    """Mean over frames of squared joint-position error; raw frames if no skeleton."""
    x_hat, x0 = _check_pair(x_hat, x0)
    if skeleton is None:
        return float(np.sum((x_hat - x0) ** 2) / x0.shape[0])
    diff = fk(skeleton, _poses(x_hat, normalizer)) - fk(skeleton, _poses(x0, normalizer))
    return float(np.sum(diff**2) / x0.shape[0])


def foot_loss(skeleton: Optional[Skeleton], x_hat, contacts, normalizer=None) -> float:
    """Squared foot velocity of the prediction where the contact mask is set.

    Sums the ``W - 1`` frame steps and divides by ``W - 1``.
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    width = x_hat.shape[0]
    if width < 2:
        raise SSDError("foot loss needs at least 2 frames")
    if skeleton is None or not skeleton.foot_joints:
        return 0.0
    feet = fk(skeleton, _poses(x_hat, normalizer))[:, list(skeleton.foot_joints)]
    vel = np.diff(feet, axis=0)  # (W-1, F, 3)
    c = np.asarray(contacts, dtype=np.float64)[: width - 1]
    return float(np.sum(c[..., None] * vel**2) / (width - 1))


def vel_loss(x_hat, x0) -> float:
    x_hat, x0 = _check_pair(x_hat, x0)
    width = x0.shape[0]
    if width < 2:
        raise SSDError("velocity loss needs at least 2 frames")
    r = np.diff(x_hat, axis=0) - np.diff(x0, axis=0)
    return float(np.sum(r**2) / (width - 1))


def _diff_adjoint(r: np.ndarray) -> np.ndarray:
    """Adjoint of the forward difference: ``out[k] = r[k-1] - r[k]``."""
    out = np.zeros((r.shape[0] + 1,) + r.shape[1:])
    out[1:] += r
    out[:-1] -= r
    return out


def _pos_grads(skeleton, x_hat, x0, normalizer, want_hat: bool):
    """Gradient of the pos loss w.r.t. ``x0`` and (optionally) ``x_hat``."""
    width = x0.shape[0]
    if skeleton is None:
        g = 2.0 / width * (x0 - x_hat)
        return g, -g
    p0, j0 = fk_jacobian(skeleton, _poses(x0, normalizer))
    ph = fk(skeleton, _poses(x_hat, normalizer))
    err = ph - p0  # (W, J, 3)
    g0 = -2.0 / width * np.einsum("wjc,wjcd->wd", err, j0)
    gh = None
    if want_hat:
        _, jh = fk_jacobian(skeleton, _poses(x_hat, normalizer))
        gh = 2.0 / width * np.einsum("wjc,wjcd->wd", err, jh)
    if normalizer is not None:
        g0 = g0 * normalizer.std
        gh = None if gh is None else gh * normalizer.std
    return g0, gh


def _foot_grad_hat(skeleton, x_hat, contacts, normalizer):
    """Gradient of the foot loss w.r.t. the prediction."""
    width = x_hat.shape[0]
    feet_idx = list(skeleton.foot_joints)
    pos, jac = fk_jacobian(skeleton, _poses(x_hat, normalizer))
    feet, jfeet = pos[:, feet_idx], jac[:, feet_idx]  # (W, F, 3), (W, F, 3, D)
    c = np.asarray(contacts, dtype=np.float64)[: width - 1, :, None]
    dq = _diff_adjoint(2.0 / (width - 1) * c * np.diff(feet, axis=0))
    g = np.einsum("wfc,wfcd->wd", dq, jfeet)
    return g if normalizer is None else g * normalizer.std


def ssd_loss_terms(x_hat, x0, wt, config: SSDConfig, skeleton=None, normalizer=None, contacts=None):
    """Evaluate every term at fixed ``x_hat``; returns a :class:`LossBreakdown`."""
    align = align_loss(x_hat, x0, wt)
    pos = pos_loss(skeleton, x_hat, x0, normalizer)
    foot = 0.0
    if skeleton is not None and skeleton.foot_joints:
        if contacts is None:
            contacts = compute_foot_contacts(
                skeleton, _poses(x0, normalizer), config.height_eps, config.vel_eps
            )
        foot = foot_loss(skeleton, x_hat, contacts, normalizer)
    vel = vel_loss(x_hat, x0)
    return LossBreakdown.combine(align, pos, foot, vel, config)


def loss_gradient(x_hat, x0, wt, config: SSDConfig, skeleton=None, normalizer=None, contacts=None):
    """Gradient of the total loss w.r.t. ``x0`` with ``x_hat`` held constant.

    In soft-chain mode the foot term and the prediction side of the pos term
    are added as if ``d x_hat / d x0`` were the identity.
    """
    x_hat, x0 = _check_pair(x_hat, x0)
    width, dim = x0.shape
    grad = wt * 2.0 / (width * dim) * (x0 - x_hat)
    if config.lambda_vel:
        r = np.diff(x0, axis=0) - np.diff(x_hat, axis=0)
        grad += config.lambda_vel * 2.0 / (width - 1) * _diff_adjoint(r)
    if config.lambda_pos:
        g0, gh = _pos_grads(skeleton, x_hat, x0, normalizer, config.soft_chain)
        grad += config.lambda_pos * g0
        if config.soft_chain:
            grad += config.lambda_pos * gh
    if config.lambda_foot and config.soft_chain and skeleton is not None and skeleton.foot_joints:
        if contacts is None:
            contacts = compute_foot_contacts(
                skeleton, _poses(x0, normalizer), config.height_eps, config.vel_eps
            )
        grad += config.lambda_foot * _foot_grad_hat(skeleton, x_hat, contacts, normalizer)
    return grad


def ssd_gradient(
    seq: MotionSequence,
    window: WindowSample,
    denoiser,
    schedule: NoiseSchedule,
    config: SSDConfig,
    rng: np.random.Generator,
    skeleton: Optional[Skeleton] = None,
):
    """One stochastic SSD gradient for a window.

    Draws ``t ~ U{t_min..t_max}`` and ``eps``, predicts ``x_hat`` and treats it
    as a constant. Returns ``(grad, breakdown, t, eps)``.
    """
    x0 = window.frames
    t = int(rng.integers(config.t_min, config.t_max + 1))
    eps = rng.standard_normal(x0.shape)
    x_t = forward_diffuse(x0, t, eps, schedule)
    cond = UNCOND if config.strict_uncond else window.condition
    x_hat = guided_predict(denoiser, x_t, t, cond, config.guidance)
    wt = schedule.weight(t)
    normalizer = seq.normalizer
    contacts = None
    if skeleton is not None and skeleton.foot_joints:
        contacts = compute_foot_contacts(
            skeleton, _poses(x0, normalizer), config.height_eps, config.vel_eps
        )
    breakdown = ssd_loss_terms(x_hat, x0, wt, config, skeleton, normalizer, contacts)
    grad = loss_gradient(x_hat, x0, wt, config, skeleton, normalizer, contacts)
    return grad, breakdown, t, eps


# ------------------------------------------------------------- optimizer


class AdamW:
    """AdamW with moment state over a fixed-shape parameter array.

    ``step`` applies a dense gradient; ``step_window`` applies a gradient that
    is zero outside rows ``[start, start + W)`` and scaled per row.
    """

    def __init__(self, shape, lr=0.002, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.steps = 0

    @classmethod
    def from_config(cls, shape, config: SSDConfig) -> "AdamW":
        return cls(shape, config.lr, config.beta1, config.beta2, config.eps, config.weight_decay)

    def _consts(self):
        self.steps += 1
        return (
            self.lr,
            self.beta1,
            self.beta2,
            self.eps,
            self.weight_decay,
            1.0 - self.beta1**self.steps,
            1.0 - self.beta2**self.steps,
        )

    def step(self, param: np.ndarray, grad: np.ndarray) -> None:
        kernels.adamw_step(
            param.reshape(-1), np.ascontiguousarray(grad, dtype=np.float64).reshape(-1),
            self.m.reshape(-1), self.v.reshape(-1), *self._consts(),
        )

    def step_window(
        self, param: np.ndarray, grad_window: np.ndarray, start: int, scale: np.ndarray,
        scale_step: bool = True,
    ) -> None:
        kernels.masked_window_adamw_step(
            param, self.m, self.v, np.ascontiguousarray(grad_window, dtype=np.float64),
            int(start), np.ascontiguousarray(scale, dtype=np.float64), bool(scale_step),
            *self._consts(),
        )


def apply_update(seq: MotionSequence, window_start: int, gradient, mask, state: AdamW, config=None) -> MotionSequence:
    """Scatter the window gradient over the full sequence and step AdamW in place.

    ``config.mask_mode == "gradient"`` multiplies the gradient by the frame
    mask before the moment update. Adam's normalisation cancels a constant
    per-frame factor there, so the default ``"update"`` scales each frame's
    step instead. Either way a zero mask leaves its frames untouched.
    """
    gradient = np.asarray(gradient)
    if gradient.ndim != 2 or gradient.shape[1] != seq.dim:
        raise DimensionError("window gradient", ("W", seq.dim), gradient.shape)
    if not seq.frames.flags.c_contiguous:
        seq.frames = np.ascontiguousarray(seq.frames)
    mode = config.mask_mode if config is not None else "update"
    if mode not in MASK_MODES:
        raise SSDError(f"mask_mode must be one of {MASK_MODES}, got {mode!r}")
    state.step_window(seq.frames, gradient, window_start, mask, scale_step=mode == "update")
    return seq


def optimize(
    seq: MotionSequence,
    denoiser,
    schedule: Optional[NoiseSchedule] = None,
    config: SSDConfig = SSDConfig(),
    skeleton: Optional[Skeleton] = None,
    mask: Optional[np.ndarray] = None,
    callback: Optional[Callable[[int, MotionSequence, LossBreakdown], None]] = None,
):
    """Refine ``seq`` for ``config.iterations`` SSD steps.

    Each iteration picks a window start uniformly, re-draws the window's
    condition, computes the SSD gradient and takes one masked AdamW step.
    Returns the refined copy and the loss history (every ``log_every``-th
    iteration, starting at 0).
    """
    schedule = schedule or denoiser.schedule
    config.validate(schedule)
    if denoiser.max_window < config.window:
        raise SSDError(f"denoiser max_window {denoiser.max_window} < window {config.window}")
    seq = seq.copy()
    seq.frames = np.ascontiguousarray(seq.frames)
    spec = config.window_spec
    starts = np.asarray(window_starts(seq.length, spec))
    if mask is None:
        mask = build_gradient_mask(seq.layout, config.mask_l, config.mask_h)
    state = AdamW.from_config(seq.frames.shape, config)
    rng = np.random.default_rng(config.seed)
    history: list[LogRecord] = []
    for it in range(config.iterations):
        start = int(starts[rng.integers(len(starts))])
        window = extract(seq, start, spec, rng)
        with np.errstate(all="ignore"):
            grad, loss, t, _ = ssd_gradient(seq, window, denoiser, schedule, config, rng, skeleton)
        if not np.isfinite(loss.total) or not np.all(np.isfinite(grad)):
            raise OptimizationError(it, f"non-finite loss {loss.total} at t={t}")
        apply_update(seq, start, grad, mask, state, config)
        if it % config.log_every == 0:
            history.append(LogRecord(it, t, loss))
            logger.debug("iter %d t=%d total=%.6g", it, t, loss.total)
        if callback is not None:
            callback(it, seq, loss)
    return seq, history


SINGLE_PROMPT = dict(guidance=10.0, lr=0.005)


def single_prompt_config(base: SSDConfig = SSDConfig()) -> SSDConfig:
    return replace(base, **SINGLE_PROMPT)


def optimize_single_prompt(
    length: int,
    condition,
    denoiser,
    schedule: Optional[NoiseSchedule] = None,
    config: Optional[SSDConfig] = None,
    skeleton: Optional[Skeleton] = None,
    fps: int = 20,
    callback=None,
):
    """Long motion from one label: random start, no sub-motion stage.

    The whole sequence is one motion span and every frame gets the ``mask_h``
    gradient scale. ``config`` defaults to guidance 10 and lr 0.005.
    Returns ``(sequence, history)``.
    """
    config = config if config is not None else single_prompt_config()
    layout = SequenceLayout((Span(SpanKind.MOTION, length, condition),), interp_width=0)
    rng = np.random.default_rng([config.seed, 1])
    frames = rng.standard_normal((length, denoiser.dim))
    seq = MotionSequence(frames, layout, fps, getattr(denoiser, "normalizer", None))
    mask = np.full(length, config.mask_h)
    return optimize(seq, denoiser, schedule, config, skeleton, mask=mask, callback=callback)


def write_loss_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "t", "align", "pos", "foot", "vel", "total"])
        for rec in history:
            l = rec.loss
            w.writerow([rec.iteration, rec.t] + [repr(v) for v in (l.align, l.pos, l.foot, l.vel, l.total)])
