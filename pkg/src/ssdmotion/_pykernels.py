"""Pure numpy implementations of the hot kernels.

These are the reference semantics. ``_ckernels.pyx`` must match them: the
AdamW kernels bit for bit, forward kinematics to rounding error.
"""

import numpy as np

SMALL_ANGLE = 1e-6


def rodrigues(rotvec):
    """Axis-angle vectors ``(..., 3)`` to rotation matrices ``(..., 3, 3)``."""
    rotvec = np.asarray(rotvec, dtype=np.float64)
    t2 = np.einsum("...i,...i->...", rotvec, rotvec)
    theta = np.sqrt(t2)
    x, y, z = rotvec[..., 0], rotvec[..., 1], rotvec[..., 2]
    zero = np.zeros_like(x)
    K = np.stack(
        [
            np.stack([zero, -z, y], axis=-1),
            np.stack([z, zero, -x], axis=-1),
            np.stack([-y, x, zero], axis=-1),
        ],
        axis=-2,
    )
    # K @ K == r r^T - |r|^2 I
    K2 = rotvec[..., :, None] * rotvec[..., None, :] - t2[..., None, None] * np.eye(3)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - t2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(safe)) / np.where(small, 1.0, t2))
    eye = np.broadcast_to(np.eye(3), K.shape)
    return eye + a[..., None, None] * K + b[..., None, None] * K2


def fk_forward(root, rotvec, parents, offsets):
    """Batched forward kinematics.

    root: (N, 3); rotvec: (N, J, 3); parents: (J,) with parents[0] < 0;
    offsets: (J, 3). Returns positions (N, J, 3) and global rotations
    (N, J, 3, 3).
    """
    n, j_count = rotvec.shape[0], rotvec.shape[1]
    local = rodrigues(rotvec)
    glob = np.empty((n, j_count, 3, 3))
    pos = np.empty((n, j_count, 3))
    glob[:, 0] = local[:, 0]
    pos[:, 0] = root
    for j in range(1, j_count):
        p = parents[j]
        glob[:, j] = glob[:, p] @ local[:, j]
        pos[:, j] = pos[:, p] + glob[:, p] @ offsets[j]
    return pos, glob


def adamw_step(param, grad, m, v, lr, beta1, beta2, eps, weight_decay, bc1, bc2):
    """One in-place AdamW step on flat arrays.

    ``bc1`` and ``bc2`` are the bias corrections ``1 - beta**step``.
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    if weight_decay != 0.0:
        param *= 1.0 - lr * weight_decay
    param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def masked_window_adamw_step(
    param, m, v, grad_window, start, scale, scale_step,
    lr, beta1, beta2, eps, weight_decay, bc1, bc2,
):
    """AdamW step on a (T, D) grid whose only nonzero gradient is a window.

    The gradient is zero outside rows ``[start, start + W)``. ``scale`` is a
    per-row factor. With ``scale_step`` false it multiplies the window
    gradient before the moment update; with ``scale_step`` true it multiplies
    the learning rate of every row instead.
    """
    width = grad_window.shape[0]
    full = np.zeros_like(param)
    if scale_step:
        full[start : start + width] = grad_window
        rate = (lr * scale)[:, None]
    else:
        full[start : start + width] = grad_window * scale[start : start + width, None]
        rate = lr
    m *= beta1
    m += (1.0 - beta1) * full
    v *= beta2
    v += (1.0 - beta2) * full * full
    if weight_decay != 0.0:
        param *= 1.0 - rate * weight_decay
    param -= rate * (m / bc1) / (np.sqrt(v / bc2) + eps)
