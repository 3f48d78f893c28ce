"""DDPM schedule, forward process, x0-predicting denoisers and sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Protocol, runtime_checkable

import numpy as np

from .errors import DimensionError, SSDError
from .layout import UNCOND


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    beta: np.ndarray
    alpha_bar: np.ndarray

    @property
    def num_steps(self) -> int:
        return self.beta.shape[0]

    @property
    def alpha(self) -> np.ndarray:
        return 1.0 - self.beta

    @property
    def alpha_bar_prev(self) -> np.ndarray:
        return np.concatenate([[1.0], self.alpha_bar[:-1]])

    def check_t(self, t) -> int:
        t = int(t)
        if not 0 <= t < self.num_steps:
            raise SSDError(f"timestep {t} outside [0, {self.num_steps})")
        return t

    def weight(self, t) -> float:
        """SDS weighting ``w(t) = 1 - alpha_bar_t``."""
        return 1.0 - self.alpha_bar[self.check_t(t)]


def make_schedule(
    num_steps: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02
) -> NoiseSchedule:
    """Linear-beta DDPM schedule."""
    if num_steps < 2:
        raise SSDError("num_steps must be >= 2")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise SSDError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    beta = np.linspace(beta_start, beta_end, num_steps, dtype=np.float64)
    alpha_bar = np.cumprod(1.0 - beta)
    return NoiseSchedule(beta, alpha_bar)


def forward_diffuse(x0, t, eps, schedule: NoiseSchedule) -> np.ndarray:
    """``x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps``."""
    t = schedule.check_t(t)
    ab = schedule.alpha_bar[t]
    return np.sqrt(ab) * np.asarray(x0) + np.sqrt(1.0 - ab) * np.asarray(eps)


@runtime_checkable
class Denoiser(Protocol):
    """Anything that maps a noised window to a clean-window estimate.

    ``predict`` must be reentrant: no observable interior mutation.
    ``cond`` is an integer label below ``conditions`` or ``None`` for the
    unconditional branch.
    """

    max_window: int
    dim: int
    conditions: int
    schedule: NoiseSchedule

    def predict(self, x_t: np.ndarray, t: int, cond: Optional[int]) -> np.ndarray: ...


@dataclass(eq=False)
class GaussianPrior:
    """Frames i.i.d. ``N(mean, diag(cov_diag))``; its MMSE denoiser is exact.

    Every condition label maps to the same prior, so guidance is a no-op.
    """

    mean: np.ndarray
    cov_diag: np.ndarray
    schedule: NoiseSchedule = field(default_factory=make_schedule)
    conditions: int = 8
    max_window: int = 1 << 30
    normalizer = None

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        self.cov_diag = np.broadcast_to(
            np.asarray(self.cov_diag, dtype=np.float64), self.mean.shape
        ).copy()
        if np.any(self.cov_diag <= 0):
            raise SSDError("GaussianPrior variances must be positive")

    @classmethod
    def isotropic(cls, dim: int, mean: float = 0.0, var: float = 1.0, **kw) -> "GaussianPrior":
        return cls(np.full(dim, float(mean)), np.full(dim, float(var)), **kw)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def predict(self, x_t, t, cond=UNCOND):
        return gaussian_posterior_mean(self, x_t, t, self.schedule)

    def shrinkage(self, t) -> np.ndarray:
        """Per-coordinate ``d x0_hat / d x_t``."""
        ab = self.schedule.alpha_bar[self.schedule.check_t(t)]
        return np.sqrt(ab) * self.cov_diag / (ab * self.cov_diag + 1.0 - ab)


def gaussian_posterior_mean(prior: GaussianPrior, x_t, t, schedule: NoiseSchedule):
    """``E[x0 | x_t]`` for Gaussian data under the variance-preserving forward process."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape[-1] != prior.dim:
        raise DimensionError("x_t", prior.dim, x_t.shape[-1])
    ab = schedule.alpha_bar[schedule.check_t(t)]
    gain = np.sqrt(ab) * prior.cov_diag / (ab * prior.cov_diag + 1.0 - ab)
    return prior.mean + gain * (x_t - np.sqrt(ab) * prior.mean)


def check_condition(denoiser, cond) -> None:
    if cond is UNCOND:
        return
    if not 0 <= int(cond) < denoiser.conditions:
        raise SSDError(
            f"condition {cond} unknown to denoiser with {denoiser.conditions} conditions"
        )


def guided_predict(denoiser, x_t, t, cond, guidance: float) -> np.ndarray:
    """Classifier-free guidance on the x0 prediction.

    ``uncond + s * (cond - uncond)``. ``s == 1``, ``s == 0`` and ``cond is None``
    each need a single predict call.
    """
    check_condition(denoiser, cond)
    if cond is UNCOND or guidance == 0.0:
        return denoiser.predict(x_t, t, UNCOND)
    if guidance == 1.0:
        return denoiser.predict(x_t, t, cond)
    uncond = denoiser.predict(x_t, t, UNCOND)
    return uncond + guidance * (denoiser.predict(x_t, t, cond) - uncond)


def ddpm_sample(
    denoiser,
    cond,
    length: int,
    guidance: float,
    rng: np.random.Generator,
    schedule: Optional[NoiseSchedule] = None,
) -> np.ndarray:
    """Ancestral DDPM sampling of a ``(length, D)`` segment.

    Each step plugs the guided x0 estimate into the Gaussian posterior
    ``q(x_{t-1} | x_t, x0)``; the final step returns the x0 estimate.
    Denoisers with ``fixed_window`` set are sampled at full width and cropped.
    """
    schedule = schedule or denoiser.schedule
    if length < 1 or length > denoiser.max_window:
        raise SSDError(f"length {length} outside [1, {denoiser.max_window}]")
    check_condition(denoiser, cond)
    width = denoiser.max_window if getattr(denoiser, "fixed_window", False) else length

    beta, ab = schedule.beta, schedule.alpha_bar
    ab_prev = schedule.alpha_bar_prev
    x = rng.standard_normal((width, denoiser.dim))
    x0 = x
    for t in range(schedule.num_steps - 1, -1, -1):
        x0 = guided_predict(denoiser, x, t, cond, guidance)
        if t == 0:
            break
        c0 = np.sqrt(ab_prev[t]) * beta[t] / (1.0 - ab[t])
        ct = np.sqrt(1.0 - beta[t]) * (1.0 - ab_prev[t]) / (1.0 - ab[t])
        var = beta[t] * (1.0 - ab_prev[t]) / (1.0 - ab[t])
        x = c0 * x0 + ct * x + np.sqrt(var) * rng.standard_normal(x.shape)
    return np.array(x0[:length])
