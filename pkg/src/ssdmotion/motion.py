"""Pose representation, skeleton, forward kinematics and temporal differences.

A pose frame is the flat vector ``[root_xyz, rotvec_0, ..., rotvec_{J-1}]``
(dimension ``3 + 3J``). Joint rotations are axis-angle, local to the parent.
The y axis points up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from ._pykernels import SMALL_ANGLE, rodrigues
from .errors import DimensionError, SSDError
from .layout import SequenceLayout

UP_AXIS = 1
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class Skeleton:
    parents: tuple[int, ...]
    offsets: np.ndarray
    foot_joints: tuple[int, ...] = ()
    names: tuple[str, ...] = ()

    def __post_init__(self):
        parents = tuple(int(p) for p in self.parents)
        offsets = np.array(self.offsets, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "foot_joints", tuple(int(f) for f in self.foot_joints))
        if not parents:
            raise SSDError("skeleton needs at least one joint")
        if parents[0] >= 0:
            raise SSDError("joint 0 is the root and must have a negative parent")
        for j, p in enumerate(parents[1:], start=1):
            if not 0 <= p < j:
                raise SSDError(
                    f"joint {j} has parent {p}; parents must precede children"
                )
        if offsets.shape[0] != len(parents):
            raise DimensionError("skeleton offsets", len(parents), offsets.shape[0])
        for f in self.foot_joints:
            if not 0 <= f < len(parents):
                raise SSDError(f"foot joint {f} out of range")

    @property
    def joint_count(self) -> int:
        return len(self.parents)

    @property
    def dim(self) -> int:
        return 3 + 3 * self.joint_count

    @property
    def parent_array(self) -> np.ndarray:
        return np.asarray(self.parents, dtype=np.int64)

    def ancestors(self, j: int) -> list[int]:
        """Strict ancestors of joint ``j``, nearest first."""
        out = []
        p = self.parents[j]
        while p >= 0:
            out.append(p)
            p = self.parents[p]
        return out

    def to_dict(self) -> dict:
        return {
            "parents": list(self.parents),
            "offsets": self.offsets.tolist(),
            "foot_joints": list(self.foot_joints),
            "names": list(self.names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Skeleton":
        return cls(
            parents=d["parents"],
            offsets=d["offsets"],
            foot_joints=d.get("foot_joints", ()),
            names=tuple(d.get("names", ())),
        )


def toy_skeleton() -> Skeleton:
    """Pelvis, two hips and two feet. Legs are 0.9 m long."""
    return Skeleton(
        parents=(-1, 0, 0, 1, 2),
        offsets=[
            [0.0, 0.0, 0.0],
            [0.1, 0.0, 0.0],
            [-0.1, 0.0, 0.0],
            [0.0, -0.9, 0.0],
            [0.0, -0.9, 0.0],
        ],
        foot_joints=(3, 4),
        names=("pelvis", "l_hip", "r_hip", "l_foot", "r_foot"),
    )


def canonical_rotvec(rotvec: np.ndarray) -> np.ndarray:
    """Wrap axis-angle vectors so that their norm lies in ``[0, 2*pi)``."""
    rotvec = np.asarray(rotvec, dtype=np.float64)
    theta = np.linalg.norm(rotvec, axis=-1, keepdims=True)
    wrapped = np.mod(theta, TWO_PI)
    scale = np.divide(wrapped, theta, out=np.ones_like(theta), where=theta > 0)
    return rotvec * scale


@dataclass(frozen=True, eq=False)
class PoseVector:
    root_position: np.ndarray
    joint_rotations: np.ndarray

    def __post_init__(self):
        root = np.array(self.root_position, dtype=np.float64).reshape(3)
        rots = np.array(self.joint_rotations, dtype=np.float64).reshape(-1, 3)
        if not (np.all(np.isfinite(root)) and np.all(np.isfinite(rots))):
            raise SSDError("pose entries must be finite")
        object.__setattr__(self, "root_position", root)
        object.__setattr__(self, "joint_rotations", canonical_rotvec(rots))

    @classmethod
    def from_flat(cls, x) -> "PoseVector":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.size < 3 or (x.size - 3) % 3:
            raise DimensionError("pose vector", "3 + 3J", x.size)
        return cls(x[:3], x[3:].reshape(-1, 3))

    @property
    def dim(self) -> int:
        return 3 + self.joint_rotations.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.root_position, self.joint_rotations.ravel()])


@dataclass(frozen=True, eq=False)
class FeatureNormalizer:
    """Per-coordinate affine map between pose space and model feature space."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=np.float64))
        if self.mean.shape != self.std.shape:
            raise DimensionError("normalizer std", self.mean.shape, self.std.shape)
        if np.any(self.std <= 0):
            raise SSDError("normalizer std must be positive")

    def encode(self, poses):
        return (np.asarray(poses) - self.mean) / self.std

    def decode(self, features):
        return np.asarray(features) * self.std + self.mean


@dataclass(eq=False)
class MotionSequence:
    """A long motion: ``T x D`` frames with a segment layout.

    ``frames`` live in the denoiser's feature space. When ``normalizer`` is set
    the pose-space frames are ``normalizer.decode(frames)``.
    """

    frames: np.ndarray
    layout: SequenceLayout
    fps: int = 20
    normalizer: Optional[FeatureNormalizer] = field(default=None)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise DimensionError("motion frames ndim", 2, self.frames.ndim)
        if self.frames.shape[0] != self.layout.total_length:
            raise DimensionError(
                "motion length vs layout", self.layout.total_length, self.frames.shape[0]
            )
        if not np.all(np.isfinite(self.frames)):
            raise SSDError("motion frames must be finite")

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def poses(self) -> np.ndarray:
        if self.normalizer is None:
            return self.frames
        return self.normalizer.decode(self.frames)

    def copy(self) -> "MotionSequence":
        return MotionSequence(self.frames.copy(), self.layout, self.fps, self.normalizer)


def _split(skeleton: Skeleton, frames) -> tuple[np.ndarray, np.ndarray, tuple]:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[-1] != skeleton.dim:
        raise DimensionError("pose vector", skeleton.dim, frames.shape[-1])
    lead = frames.shape[:-1]
    flat = np.ascontiguousarray(frames.reshape(-1, skeleton.dim))
    root = np.ascontiguousarray(flat[:, :3])
    rot = np.ascontiguousarray(flat[:, 3:].reshape(-1, skeleton.joint_count, 3))
    return root, rot, lead


def fk(skeleton: Skeleton, pose) -> np.ndarray:
    """Joint positions for one pose ``(D,)`` -> ``(J, 3)`` or a batch ``(..., D)``."""
    if isinstance(pose, PoseVector):
        pose = pose.flat()
    root, rot, lead = _split(skeleton, pose)
    pos, _ = kernels.fk_forward(root, rot, skeleton.parent_array, skeleton.offsets)
    return pos.reshape(lead + (skeleton.joint_count, 3))


def left_jacobian(rotvec) -> np.ndarray:
    """SO(3) left Jacobian; ``dR/dr_i = [J e_i]x R``."""
    rotvec = np.asarray(rotvec, dtype=np.float64)
    t2 = np.einsum("...i,...i->...", rotvec, rotvec)
    theta = np.sqrt(t2)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(safe)) / np.where(small, 1.0, t2))
    b = np.where(small, 1.0 / 6.0 - t2 / 120.0, (safe - np.sin(safe)) / safe**3)
    x, y, z = rotvec[..., 0], rotvec[..., 1], rotvec[..., 2]
    zero = np.zeros_like(x)
    K = np.stack(
        [
            np.stack([zero, -z, y], -1),
            np.stack([z, zero, -x], -1),
            np.stack([-y, x, zero], -1),
        ],
        -2,
    )
    return np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)


def fk_jacobian(skeleton: Skeleton, frames) -> tuple[np.ndarray, np.ndarray]:
    """Positions ``(N, J, 3)`` and their Jacobian ``(N, J, 3, D)`` w.r.t. the frame.

    Perturbing ``r_k`` by ``dr`` rotates the whole subtree below ``k`` about
    ``p_k`` by the world-frame angle ``G_parent(k) J_l(r_k) dr``.
    """
    root, rot, lead = _split(skeleton, frames)
    n, jc = rot.shape[0], skeleton.joint_count
    pos, glob = kernels.fk_forward(root, rot, skeleton.parent_array, skeleton.offsets)
    jac = np.zeros((n, jc, 3, skeleton.dim))
    jac[:, :, :, :3] = np.eye(3)
    # world-frame angular columns for each joint's rotation parameters
    jl = left_jacobian(rot)  # (n, J, 3, 3)
    ang = np.empty_like(jl)
    for k in range(jc):
        p = skeleton.parents[k]
        ang[:, k] = jl[:, k] if p < 0 else glob[:, p] @ jl[:, k]
    for j in range(jc):
        for k in skeleton.ancestors(j):
            lever = pos[:, j] - pos[:, k]  # (n, 3)
            # d p_j = omega x lever = -[lever]x omega
            cols = np.cross(np.moveaxis(ang[:, k], -1, -2), lever[:, None, :])
            jac[:, j, :, 3 + 3 * k : 6 + 3 * k] = np.moveaxis(cols, -1, -2)
    return pos.reshape(lead + (jc, 3)), jac.reshape(lead + (jc, 3, skeleton.dim))


def rotation_matrix(rotvec) -> np.ndarray:
    return rodrigues(rotvec)


def finite_difference(x, order: int = 1) -> np.ndarray:
    """Repeated forward differences along axis 0; order 1 is ``x[t+1] - x[t]``."""
    x = np.asarray(x, dtype=np.float64)
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    if x.shape[0] <= order:
        raise ValueError(f"need more than {order} frames, got {x.shape[0]}")
    return np.diff(x, n=order, axis=0)


def compute_foot_contacts(
    skeleton: Skeleton,
    seq,
    height_eps: float = 0.05,
    vel_eps: float = 0.01,
) -> np.ndarray:
    """Binary ``(T, F)`` contact mask for the skeleton's foot joints.

    A foot is in contact when it is below ``height_eps`` and moves less than
    ``vel_eps`` to the next frame. The last frame reuses the displacement of
    the step into it.

    ``seq`` is a :class:`MotionSequence` (decoded to pose space) or a raw
    ``(T, D)`` array of poses.
    """
    if height_eps <= 0 or vel_eps <= 0:
        raise ValueError("contact thresholds must be positive")
    poses = seq.poses() if isinstance(seq, MotionSequence) else np.asarray(seq)
    if poses.shape[0] < 2:
        raise ValueError("foot contacts need at least 2 frames")
    feet = fk(skeleton, poses)[:, list(skeleton.foot_joints)]  # (T, F, 3)
    disp = np.linalg.norm(np.diff(feet, axis=0), axis=-1)  # (T-1, F)
    disp = np.concatenate([disp, disp[-1:]], axis=0)
    low = feet[..., UP_AXIS] < height_eps
    return low & (disp < vel_eps)
