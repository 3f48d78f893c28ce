"""Synthetic labeled motions and a small learned x0-denoiser trained on them.

Four generators drive :func:`~ssdmotion.motion.toy_skeleton` (``D = 18``):

0. walk   -- rigid-leg inverted-pendulum gait along +z
1. wave   -- planted feet, pelvis bowing, ankles waving
2. turn   -- pelvis yaw at constant rate, feet pivoting in place
3. crouch -- legs splaying sideways to lower the pelvis, with a slight roll

Each returns pose frames and its ground-truth foot contacts, computed from
the generator's own closed-form foot trajectory rather than by FK.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diffusion import NoiseSchedule, make_schedule
from .errors import CheckpointError, DimensionError, SSDError, TrainingDivergence
from .layout import UNCOND
from .motion import FeatureNormalizer

logger = logging.getLogger(__name__)

LEG = 0.9
HIP = 0.1
POSE_DIM = 18


def contact_intervals(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open runs of True in a boolean vector."""
    m = np.concatenate([[False], np.asarray(mask, dtype=bool), [False]])
    edges = np.flatnonzero(np.diff(m.astype(np.int8)))
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


@dataclass
class MotionGenerator:
    label: int
    params: dict = field(default_factory=dict)
    max_length: int = 400
    name = "base"

    def generate(self, length: int, rng: np.random.Generator):
        """Return ``(frames (L, 18), stance)``.

        ``stance[f]`` lists the half-open frame intervals in which foot ``f``
        is planted, from the generator's closed-form foot trajectory.
        """
        frames, contacts = self.generate_contacts(length, rng)
        return frames, [contact_intervals(contacts[:, f]) for f in range(contacts.shape[1])]

    def generate_contacts(self, length: int, rng: np.random.Generator):
        """Like :meth:`generate` but with a ``(L, 2)`` boolean contact mask."""
        if length > self.max_length:
            raise SSDError(f"{self.name} generator supports at most {self.max_length} frames")
        return self._generate(length, rng)

    def _generate(self, length, rng):
        raise NotImplementedError


def intervals_to_mask(stance, length: int) -> np.ndarray:
    """Inverse of :func:`contact_intervals` for a list of feet."""
    out = np.zeros((length, len(stance)), dtype=bool)
    for f, runs in enumerate(stance):
        for a, b in runs:
            out[a:b, f] = True
    return out


def _ankles(k, rng, amp):
    w = rng.uniform(0.05, 0.2, size=6)
    ph = rng.uniform(0, 2 * np.pi, size=6)
    return amp * np.sin(np.outer(k, w) + ph)


class WalkGenerator(MotionGenerator):
    name = "walk"

    def _generate(self, length, rng):
        p = {"step_frames": (16, 24), "swing_amp": (0.22, 0.34), "lift": 0.25, **self.params}
        n = int(rng.integers(p["step_frames"][0], p["step_frames"][1] + 1))
        a = rng.uniform(*p["swing_amp"])
        k = np.arange(length) + int(rng.integers(0, 2 * n))
        step, u = k // n, (k % n) / n
        left_stance = step % 2 == 0
        phi_st = a * (2 * u - 1)
        phi_sw = a * (1 - 2 * u)
        lift = p["lift"] * np.sin(np.pi * u)
        stride = 2 * LEG * np.sin(a)

        frames = np.zeros((length, POSE_DIM))
        frames[:, 0] = rng.uniform(-0.5, 0.5)
        frames[:, 1] = LEG * np.cos(phi_st)
        frames[:, 2] = step * stride + LEG * np.sin(phi_st) + rng.uniform(-0.5, 0.5)
        st = np.stack([phi_st, np.zeros(length), np.zeros(length)], -1)
        sw = np.stack([phi_sw, np.zeros(length), lift], -1)
        sw_r = sw * [1.0, 1.0, -1.0]  # right leg lifts outward, i.e. about -z
        frames[:, 6:9] = np.where(left_stance[:, None], st, sw)
        frames[:, 9:12] = np.where(left_stance[:, None], sw_r, st)
        frames[:, 12:18] = _ankles(k, rng, 0.2)
        contacts = np.stack([left_stance, ~left_stance], -1)
        return frames, contacts


class WaveGenerator(MotionGenerator):
    name = "wave"

    def _generate(self, length, rng):
        p = {"bow_amp": (0.1, 0.35), "ankle_amp": 0.8, **self.params}
        k = np.arange(length)
        bow = rng.uniform(*p["bow_amp"]) * np.sin(rng.uniform(0.08, 0.2) * k + rng.uniform(0, 2 * np.pi))
        frames = np.zeros((length, POSE_DIM))
        frames[:, 0] = rng.uniform(-0.5, 0.5)
        frames[:, 1] = LEG
        frames[:, 2] = rng.uniform(-0.5, 0.5)
        frames[:, 3] = bow
        # hips undo the bow so the legs stay vertical; pitch leaves hip offsets fixed
        frames[:, 6] = -bow
        frames[:, 9] = -bow
        frames[:, 12:18] = _ankles(k, rng, p["ankle_amp"])
        return frames, np.ones((length, 2), dtype=bool)


class TurnGenerator(MotionGenerator):
    name = "turn"

    def _generate(self, length, rng):
        p = {"rate": (0.02, 0.045), "vel_eps": 0.01, **self.params}
        k = np.arange(length)
        rate = rng.uniform(*p["rate"]) * rng.choice([-1.0, 1.0])
        frames = np.zeros((length, POSE_DIM))
        frames[:, 0] = rng.uniform(-0.5, 0.5)
        frames[:, 1] = LEG
        frames[:, 2] = rng.uniform(-0.5, 0.5)
        frames[:, 4] = rng.uniform(-1.0, 1.0) + rate * k
        # twist about the leg axis does not move the foot
        twist = 0.3 * np.sin(rng.uniform(0.05, 0.15) * k + rng.uniform(0, 2 * np.pi))
        frames[:, 7] = twist
        frames[:, 10] = -twist
        frames[:, 12:18] = _ankles(k, rng, 0.2)
        # feet circle the root at radius HIP; chord per frame is 2 HIP sin(|rate|/2)
        planted = 2 * HIP * np.sin(abs(rate) / 2) < p["vel_eps"]
        return frames, np.full((length, 2), planted)


class CrouchGenerator(MotionGenerator):
    name = "crouch"

    def _generate(self, length, rng):
        p = {"splay_mid": 0.5, "splay_amp": (0.12, 0.2), "roll_amp": 0.08, "vel_eps": 0.01, **self.params}
        k = np.arange(length)
        beta = p["splay_mid"] + rng.uniform(*p["splay_amp"]) * np.sin(
            rng.uniform(0.06, 0.14) * k + rng.uniform(0, 2 * np.pi)
        )
        roll = p["roll_amp"] * np.sin(rng.uniform(0.05, 0.1) * k + rng.uniform(0, 2 * np.pi))
        root_y = LEG * np.cos(beta)
        # hip heights after the roll; each leg's splay puts its foot at y = 0
        alpha_l = np.arccos((root_y + HIP * np.sin(roll)) / LEG)
        alpha_r = -np.arccos((root_y - HIP * np.sin(roll)) / LEG)
        x0 = rng.uniform(-0.5, 0.5)
        frames = np.zeros((length, POSE_DIM))
        frames[:, 0] = x0
        frames[:, 1] = root_y
        frames[:, 2] = rng.uniform(-0.5, 0.5)
        frames[:, 5] = roll
        frames[:, 8] = alpha_l - roll
        frames[:, 11] = alpha_r - roll
        frames[:, 12:18] = _ankles(k, rng, 0.2)
        foot_x = np.stack(
            [
                x0 + HIP * np.cos(roll) + LEG * np.sin(alpha_l),
                x0 - HIP * np.cos(roll) + LEG * np.sin(alpha_r),
            ],
            -1,
        )
        disp = np.abs(np.diff(foot_x, axis=0))
        disp = np.concatenate([disp, disp[-1:]], 0)
        return frames, disp < p["vel_eps"]


def standard_generators() -> list[MotionGenerator]:
    return [WalkGenerator(0), WaveGenerator(1), TurnGenerator(2), CrouchGenerator(3)]


@dataclass(eq=False)
class MotionDataset:
    x0: np.ndarray  # (N, W, D), normalized
    labels: np.ndarray  # (N,)
    normalizer: FeatureNormalizer

    def __len__(self):
        return self.x0.shape[0]

    @property
    def window(self) -> int:
        return self.x0.shape[1]

    @property
    def dim(self) -> int:
        return self.x0.shape[2]

    @property
    def conditions(self) -> int:
        return int(self.labels.max()) + 1


def fit_normalizer(frames: np.ndarray) -> FeatureNormalizer:
    """Per-coordinate mean/std; coordinates that never vary keep unit scale."""
    flat = frames.reshape(-1, frames.shape[-1])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return FeatureNormalizer(mean, std)


def generate_dataset(
    generators: Sequence[MotionGenerator],
    samples_per_label: int,
    window: int,
    rng: np.random.Generator,
) -> MotionDataset:
    for g in generators:
        if window > g.max_length:
            raise SSDError(f"window {window} longer than {g.name} generator's {g.max_length} frames")
    xs, ys = [], []
    for g in generators:
        for _ in range(samples_per_label):
            frames, _ = g.generate_contacts(window, rng)
            xs.append(frames)
            ys.append(g.label)
    raw = np.stack(xs)
    norm = fit_normalizer(raw)
    return MotionDataset(norm.encode(raw), np.asarray(ys, dtype=np.int64), norm)


def dataset_from_windows(windows: np.ndarray, labels) -> MotionDataset:
    windows = np.asarray(windows, dtype=np.float64)
    norm = fit_normalizer(windows)
    return MotionDataset(norm.encode(windows), np.asarray(labels, dtype=np.int64), norm)


# ------------------------------------------------------------------ network


def cosine_basis(length: int, size: int) -> np.ndarray:
    """``(length, size)`` orthonormal DCT-II columns, lowest frequency first."""
    n = np.arange(length)[:, None] + 0.5
    k = np.arange(size)[None, :]
    basis = np.sqrt(2.0 / length) * np.cos(np.pi * n * k / length)
    basis[:, 0] = np.sqrt(1.0 / length)
    return basis


def timestep_embedding(t, dim: int) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    ang = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def _silu(z):
    s = 0.5 * (1.0 + np.tanh(0.5 * z))  # logistic without exp overflow
    return z * s, s


class ToyDenoiser:
    """MLP acting on a truncated temporal cosine basis of the window.

    The window is projected onto the first ``basis_size`` orthonormal DCT-II
    vectors; the MLP sees ``[coefficients, timestep embedding, condition
    embedding]`` and returns coefficients preconditioned as
    ``sqrt(abar) c_t + sqrt(1 - abar) f(...)``. Outputs are therefore smooth
    in time, and the network only learns a residual on the coefficients.
    Works in normalized feature space on windows of exactly ``max_window``
    frames; shorter inputs are edge-padded and the output cropped. The null
    condition uses its own embedding row (index ``conditions``).
    """

    fixed_window = True

    def __init__(
        self,
        window: int,
        dim: int,
        conditions: int,
        hidden: Sequence[int] = (256, 256, 256),
        temb_dim: int = 64,
        cemb_dim: int = 16,
        basis_size: int = 16,
        precondition: bool = True,
        normalizer: Optional[FeatureNormalizer] = None,
        schedule: Optional[NoiseSchedule] = None,
        rng: Optional[np.random.Generator] = None,
        params: Optional[np.ndarray] = None,
    ):
        self.max_window = int(window)
        self.dim = int(dim)
        self.conditions = int(conditions)
        self.hidden = tuple(int(h) for h in hidden)
        self.temb_dim = int(temb_dim)
        self.cemb_dim = int(cemb_dim)
        self.basis_size = int(basis_size)
        if not 1 <= self.basis_size <= self.max_window:
            raise SSDError(f"basis_size must be in [1, {self.max_window}]")
        self.basis = cosine_basis(self.max_window, self.basis_size)
        self.precondition = bool(precondition)
        self.normalizer = normalizer
        self.schedule = schedule or make_schedule()
        self._shapes = self._layer_shapes()
        total = sum(int(np.prod(s)) for _, s in self._shapes)
        if params is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            params = self._init_params(rng)
        params = np.ascontiguousarray(params, dtype=np.float64)
        if params.shape != (total,):
            raise DimensionError("denoiser parameter vector", total, params.shape)
        self.params = params
        self._bind()

    def _layer_shapes(self):
        shapes = [("cond_embed", (self.conditions + 1, self.cemb_dim))]
        coeffs = self.basis_size * self.dim
        sizes = [coeffs + self.temb_dim + self.cemb_dim, *self.hidden, coeffs]
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            shapes.append((f"w{i}", (a, b)))
            shapes.append((f"b{i}", (b,)))
        return shapes

    def _init_params(self, rng):
        blocks = []
        for name, shape in self._shapes:
            if name.startswith("b"):
                blocks.append(np.zeros(shape))
            elif name == "cond_embed":
                blocks.append(rng.standard_normal(shape))
            else:
                blocks.append(rng.standard_normal(shape) * np.sqrt(1.0 / shape[0]))
        return np.concatenate([b.ravel() for b in blocks])

    def _bind(self):
        """Expose named views into the flat parameter vector."""
        self.layers = {}
        pos = 0
        for name, shape in self._shapes:
            size = int(np.prod(shape))
            self.layers[name] = self.params[pos : pos + size].reshape(shape)
            pos += size
        self._n_dense = (len(self._shapes) - 1) // 2

    @property
    def n_params(self) -> int:
        return self.params.size

    def layer_shapes(self):
        return list(self._shapes)

    def copy(self) -> "ToyDenoiser":
        return ToyDenoiser(
            self.max_window, self.dim, self.conditions, self.hidden, self.temb_dim,
            self.cemb_dim, self.basis_size, self.precondition, self.normalizer, self.schedule,
            params=self.params.copy(),
        )

    def _cond_index(self, cond):
        cond = np.atleast_1d(np.asarray(
            [self.conditions if c is UNCOND else c for c in np.atleast_1d(np.asarray(cond, dtype=object))],
            dtype=np.int64,
        ))
        if np.any(cond < 0) or np.any(cond > self.conditions):
            raise SSDError(f"condition outside [0, {self.conditions})")
        return cond

    def forward(self, x_t: np.ndarray, t, cond_idx: np.ndarray, keep: bool = False):
        """Batch forward: ``x_t (B, W, D)``, ``t (B,)``, ``cond_idx (B,)`` ints."""
        b = x_t.shape[0]
        c_t = np.einsum("wk,bwd->bkd", self.basis, x_t)
        inp = np.concatenate(
            [
                c_t.reshape(b, -1),
                timestep_embedding(np.broadcast_to(t, (b,)), self.temb_dim),
                self.layers["cond_embed"][cond_idx],
            ],
            axis=1,
        )
        acts, gates = [inp], []
        h = inp
        for i in range(self._n_dense):
            z = h @ self.layers[f"w{i}"] + self.layers[f"b{i}"]
            if i < self._n_dense - 1:
                h, s = _silu(z)
                gates.append((z, s))
            else:
                h = z
            acts.append(h)
        if self.precondition:
            ab = self.schedule.alpha_bar[np.broadcast_to(t, (b,))][:, None, None]
            c_out = np.sqrt(1.0 - ab)
            coef = np.sqrt(ab) * c_t + c_out * h.reshape(c_t.shape)
        else:
            c_out = 1.0
            coef = h.reshape(c_t.shape)
        out = np.einsum("wk,bkd->bwd", self.basis, coef)
        if keep:
            return out, (acts, gates, cond_idx, c_out)
        return out

    def backward(self, cache, dout: np.ndarray) -> np.ndarray:
        """Flat parameter gradient of ``sum(dout * output)``."""
        acts, gates, cond_idx, c_out = cache
        grads = {}
        g = (c_out * np.einsum("wk,bwd->bkd", self.basis, dout)).reshape(dout.shape[0], -1)
        for i in range(self._n_dense - 1, -1, -1):
            grads[f"w{i}"] = acts[i].T @ g
            grads[f"b{i}"] = g.sum(axis=0)
            g = g @ self.layers[f"w{i}"].T
            if i > 0:
                z, s = gates[i - 1]
                g = g * (s * (1.0 + z * (1.0 - s)))
        ce = np.zeros_like(self.layers["cond_embed"])
        np.add.at(ce, cond_idx, g[:, -self.cemb_dim :])
        grads["cond_embed"] = ce
        return np.concatenate([grads[name].ravel() for name, _ in self._shapes])

    def predict(self, x_t, t, cond=UNCOND):
        x_t = np.asarray(x_t, dtype=np.float64)
        width = x_t.shape[0]
        if x_t.ndim != 2 or x_t.shape[1] != self.dim:
            raise DimensionError("x_t", (self.max_window, self.dim), x_t.shape)
        if width > self.max_window:
            raise SSDError(f"window {width} exceeds max_window {self.max_window}")
        if width < self.max_window:
            x_t = np.pad(x_t, ((0, self.max_window - width), (0, 0)), mode="edge")
        out = self.forward(x_t[None], np.array([t]), self._cond_index([cond]))
        return out[0, :width]


@dataclass(eq=False)
class TrainResult:
    denoiser: ToyDenoiser
    loss_curve: np.ndarray
    epoch_probe: np.ndarray  # (epochs, 2): probe loss at epoch start and end
    dropout_fraction: np.ndarray  # per epoch


def probe_loss(denoiser: ToyDenoiser, batch) -> float:
    x0, t, eps, cond, sched = batch
    ab = sched.alpha_bar[t][:, None, None]
    x_t = np.sqrt(ab) * x0 + np.sqrt(1 - ab) * eps
    with np.errstate(over="ignore", invalid="ignore"):
        out = denoiser.forward(x_t, t, cond)
        return float(np.mean((out - x0) ** 2))


def train_denoiser(
    dataset: MotionDataset,
    schedule: NoiseSchedule,
    epochs: int,
    lr: float,
    rng: np.random.Generator,
    batch_size: int = 64,
    hidden: Sequence[int] = (256, 256, 256),
    basis_size: int = 16,
    precondition: bool = True,
    cond_dropout: float = 0.1,
    weight_decay: float = 0.0,
    conditions: Optional[int] = None,
    probe_size: int = 1024,
    lr_decay: str = "cosine",
) -> TrainResult:
    """Fit the x0-reconstruction objective with condition dropout.

    Each epoch drops exactly ``round(cond_dropout * n)`` randomly chosen
    items to the null label. ``lr_decay`` is ``"cosine"`` (to zero over all
    steps) or ``"constant"``. Raises :class:`TrainingDivergence` as soon as
    a batch loss is not finite.
    """
    # local import: ssd imports nothing from here, the optimizer lives there
    from .ssd import AdamW

    if len(dataset) == 0:
        raise SSDError("empty dataset")
    if lr_decay not in ("cosine", "constant"):
        raise SSDError(f"lr_decay must be 'cosine' or 'constant', got {lr_decay!r}")
    conditions = conditions or dataset.conditions
    net = ToyDenoiser(
        dataset.window, dataset.dim, conditions, hidden, basis_size=basis_size,
        precondition=precondition, normalizer=dataset.normalizer, schedule=schedule, rng=rng,
    )
    opt = AdamW(net.params.shape, lr=lr, weight_decay=weight_decay)
    n = len(dataset)
    pidx = rng.choice(n, size=min(probe_size, n), replace=False)
    probe = (
        dataset.x0[pidx],
        rng.integers(0, schedule.num_steps, size=pidx.size),
        rng.standard_normal(dataset.x0[pidx].shape),
        dataset.labels[pidx],
        schedule,
    )
    curve, epoch_probe, drop_frac = [], [], []
    step = 0
    total_steps = epochs * -(-n // batch_size)
    n_drop = int(round(cond_dropout * n))
    # weights do not change between epochs, so each end probe starts the next epoch
    before = probe_loss(net, probe) if epochs else None
    for _ in range(epochs):
        order = rng.permutation(n)
        dropped = 0
        drop_set = np.zeros(n, dtype=bool)
        drop_set[rng.choice(n, size=n_drop, replace=False)] = True
        for lo in range(0, n, batch_size):
            idx = order[lo : lo + batch_size]
            x0 = dataset.x0[idx]
            t = rng.integers(0, schedule.num_steps, size=idx.size)
            eps = rng.standard_normal(x0.shape)
            cond = dataset.labels[idx].copy()
            drop = drop_set[idx]
            cond[drop] = conditions
            dropped += int(drop.sum())
            ab = schedule.alpha_bar[t][:, None, None]
            x_t = np.sqrt(ab) * x0 + np.sqrt(1 - ab) * eps
            # overflow surfaces as a non-finite loss below
            with np.errstate(over="ignore", invalid="ignore"):
                out, cache = net.forward(x_t, t, cond, keep=True)
                diff = out - x0
                loss = float(np.mean(diff**2))
            if not np.isfinite(loss):
                raise TrainingDivergence(step, lr, loss)
            grad = net.backward(cache, 2.0 * diff / diff.size)
            if lr_decay == "cosine":
                opt.lr = 0.5 * lr * (1.0 + np.cos(np.pi * step / total_steps))
            opt.step(net.params, grad)
            curve.append(loss)
            step += 1
        after = probe_loss(net, probe)
        epoch_probe.append((before, after))
        before = after
        drop_frac.append(dropped / n)
        logger.info("epoch %d loss %.5f", len(epoch_probe), epoch_probe[-1][1])
    return TrainResult(
        net,
        np.asarray(curve),
        np.asarray(epoch_probe).reshape(-1, 2),
        np.asarray(drop_frac),
    )


# --------------------------------------------------------------- checkpoint

MAGIC = b"SSDM1"
VERSION = 1


def save_checkpoint(denoiser: ToyDenoiser, path) -> None:
    """``SSDM1`` + u32 header length + JSON header + little-endian f8 blocks."""
    norm = denoiser.normalizer
    sched = denoiser.schedule
    header = {
        "version": VERSION,
        "dim": denoiser.dim,
        "window": denoiser.max_window,
        "conditions": denoiser.conditions,
        "hidden": list(denoiser.hidden),
        "temb_dim": denoiser.temb_dim,
        "cemb_dim": denoiser.cemb_dim,
        "basis_size": denoiser.basis_size,
        "precondition": denoiser.precondition,
        "norm_mean": None if norm is None else norm.mean.tolist(),
        "norm_std": None if norm is None else norm.std.tolist(),
        "schedule": {
            "num_steps": sched.num_steps,
            "beta_start": float(sched.beta[0]),
            "beta_end": float(sched.beta[-1]),
        },
        "layers": [{"name": n, "shape": list(s)} for n, s in denoiser.layer_shapes()],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(denoiser.params.astype("<f8").tobytes())


def load_checkpoint(path) -> ToyDenoiser:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:len(MAGIC)]!r}")
    try:
        (hlen,) = struct.unpack_from("<I", data, len(MAGIC))
        start = len(MAGIC) + 4
        header = json.loads(data[start : start + hlen].decode("utf-8"))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header ({exc})") from exc
    if header.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported version {header.get('version')}")
    weights = np.frombuffer(data, dtype="<f8", offset=start + hlen).astype(np.float64)
    norm = None
    if header["norm_mean"] is not None:
        norm = FeatureNormalizer(np.array(header["norm_mean"]), np.array(header["norm_std"]))
    s = header["schedule"]
    net_shapes = [(l["name"], tuple(l["shape"])) for l in header["layers"]]
    try:
        net = ToyDenoiser(
            header["window"], header["dim"], header["conditions"], header["hidden"],
            header["temb_dim"], header["cemb_dim"], header["basis_size"],
            header["precondition"], norm,
            make_schedule(s["num_steps"], s["beta_start"], s["beta_end"]),
            params=weights,
        )
    except DimensionError as exc:
        raise CheckpointError(f"{path}: weight block size mismatch ({exc})") from exc
    if net.layer_shapes() != net_shapes:
        raise CheckpointError(f"{path}: layer table does not match header sizes")
    return net
