"""Motion files, run configuration and denoiser loading.

Motion file layout (text, UTF-8)::

    SSDMOTION v1
    fps 20
    dim 18
    frames 360
    joints 5
    interp_width 3
    span motion 100 0
    span transition 30 -
    ...
    mean <dim values>        (only when the frames are normalized features)
    std <dim values>
    end
    <frames lines of dim values>

Every float is written with 17 significant digits, which round-trips binary64
exactly, so write -> read -> write is byte-identical.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .diffusion import GaussianPrior, make_schedule
from .errors import CheckpointError, ConfigError, LayoutError, SSDError
from .layout import UNCOND, SequenceLayout, Span, SpanKind
from .motion import FeatureNormalizer, MotionSequence, Skeleton, toy_skeleton
from .ssd import SSDConfig
from .toyprior import load_checkpoint

MAGIC_LINE = "SSDMOTION v1"


def _fmt(values) -> str:
    return " ".join("%.17g" % v for v in values)


def write_motion(path, seq: MotionSequence, joints: int = 0) -> None:
    lay = seq.layout
    lines = [
        MAGIC_LINE,
        f"fps {seq.fps}",
        f"dim {seq.dim}",
        f"frames {seq.length}",
        f"joints {int(joints)}",
        f"interp_width {lay.interp_width}",
    ]
    for s in lay.spans:
        cond = "-" if s.condition is UNCOND else str(s.condition)
        lines.append(f"span {s.kind.value} {s.length} {cond}")
    if seq.normalizer is not None:
        lines.append("mean " + _fmt(seq.normalizer.mean))
        lines.append("std " + _fmt(seq.normalizer.std))
    lines.append("end")
    lines.extend(_fmt(row) for row in seq.frames)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_motion(path) -> tuple[MotionSequence, int]:
    """Return ``(sequence, joints)``; raises :class:`SSDError` on malformed input."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise SSDError(f"cannot read motion file {path}: {exc}") from exc
    if not lines or lines[0] != MAGIC_LINE:
        raise SSDError(f"{path}: not a motion file (expected {MAGIC_LINE!r})")
    meta: dict[str, Any] = {"spans": []}
    i = 1
    try:
        while lines[i] != "end":
            key, _, rest = lines[i].partition(" ")
            if key == "span":
                kind, length, cond = rest.split()
                meta["spans"].append(
                    Span(SpanKind(kind), int(length), UNCOND if cond == "-" else int(cond))
                )
            elif key in ("mean", "std"):
                meta[key] = np.array([float(v) for v in rest.split()])
            else:
                meta[key] = int(rest)
            i += 1
        body = lines[i + 1 :]
        frames = np.array([[float(v) for v in row.split()] for row in body], dtype=np.float64)
        dim, count = meta["dim"], meta["frames"]
        frames = frames.reshape(count, dim)
        norm = FeatureNormalizer(meta["mean"], meta["std"]) if "mean" in meta else None
        layout = SequenceLayout(tuple(meta["spans"]), meta["interp_width"])
        seq = MotionSequence(frames, layout, meta["fps"], norm)
    except (IndexError, KeyError, ValueError) as exc:
        raise SSDError(f"{path}: malformed motion file ({exc})") from exc
    return seq, meta.get("joints", 0)


# ------------------------------------------------------------------ config

TRAIN_DEFAULTS = {
    "train_samples_per_label": 256,
    "train_epochs": 60,
    "train_lr": 1e-3,
    "train_batch_size": 64,
    "train_hidden": [256, 256, 256],
    "train_basis_size": 16,
    "train_cond_dropout": 0.1,
    "train_window": 120,
}

RUN_KEYS = {"seed", "profile", "denoiser", "dim", "skeleton", "fps", "init_guidance", "layout"}
_SSD_FIELDS = {f.name: f for f in dataclasses.fields(SSDConfig)}


@dataclass
class RunConfig:
    ssd: SSDConfig = field(default_factory=SSDConfig)
    layout: Optional[SequenceLayout] = None
    denoiser: Optional[str] = None
    dim: Optional[int] = None
    skeleton: Optional[Skeleton] = None
    skeleton_path: Optional[str] = None
    profile: Optional[str] = None
    fps: int = 20
    init_guidance: float = 2.5
    train: dict = field(default_factory=lambda: dict(TRAIN_DEFAULTS))
    base_dir: Path = Path(".")

    @property
    def seed(self) -> int:
        return self.ssd.seed

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        if seed is None:
            return self
        return dataclasses.replace(self, ssd=dataclasses.replace(self.ssd, seed=int(seed)))

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _coerce(name: str, value, kind):
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise TypeError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {name!r}: cannot use {value!r} as {kind.__name__}") from None


def _parse_layout(entries, interp_width: int) -> SequenceLayout:
    if not isinstance(entries, list) or not entries:
        raise ConfigError("'layout' must be a nonempty list of spans")
    spans = []
    for k, e in enumerate(entries):
        if not isinstance(e, dict) or "kind" not in e or "length" not in e:
            raise ConfigError(f"layout entry {k} needs 'kind' and 'length'")
        extra = set(e) - {"kind", "length", "condition"}
        if extra:
            raise ConfigError(f"layout entry {k}: unknown keys {sorted(extra)}")
        try:
            kind = SpanKind(e["kind"])
        except ValueError:
            raise ConfigError(f"layout entry {k}: unknown kind {e['kind']!r}") from None
        cond = e.get("condition")
        length = _coerce("length", e["length"], int)
        try:
            spans.append(Span(kind, length, None if cond is None else _coerce("condition", cond, int)))
        except LayoutError as exc:
            raise ConfigError(f"layout entry {k}: {exc}") from exc
    try:
        return SequenceLayout(tuple(spans), interp_width)
    except SSDError as exc:
        raise ConfigError(f"invalid layout: {exc}") from exc


def load_skeleton(path) -> Skeleton:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    try:
        return Skeleton.from_dict(data)
    except (AttributeError, KeyError, TypeError, SSDError) as exc:
        raise ConfigError(f"{path}: invalid skeleton ({exc})") from exc


def parse_config(data: dict, base_dir: Path = Path(".")) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of keys to values")
    unknown = set(data) - RUN_KEYS - set(_SSD_FIELDS) - set(TRAIN_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    ssd_kw = {}
    for name, f in _SSD_FIELDS.items():
        if name in data:
            kind = {"int": int, "float": float, "bool": bool, "str": str}[f.type]
            ssd_kw[name] = _coerce(name, data[name], kind)
    profile = data.get("profile")
    try:
        ssd = SSDConfig.profile(profile, **ssd_kw) if profile else SSDConfig(**ssd_kw)
        ssd.validate(make_schedule())
    except SSDError as exc:
        raise ConfigError(str(exc)) from exc
    if "seed" in data:
        ssd = dataclasses.replace(ssd, seed=_coerce("seed", data["seed"], int))

    cfg = RunConfig(ssd=ssd, profile=profile, base_dir=base_dir)
    if "layout" in data:
        cfg.layout = _parse_layout(data["layout"], ssd.interp_width)
    if "denoiser" in data:
        cfg.denoiser = str(data["denoiser"])
    if "dim" in data:
        cfg.dim = _coerce("dim", data["dim"], int)
    if "fps" in data:
        cfg.fps = _coerce("fps", data["fps"], int)
    if "init_guidance" in data:
        cfg.init_guidance = _coerce("init_guidance", data["init_guidance"], float)
    sk = data.get("skeleton")
    if sk == "toy":
        cfg.skeleton = toy_skeleton()
    elif sk is not None:
        path = cfg.resolve(str(sk))
        if not path.is_file():
            raise ConfigError(f"skeleton file not found: {path}")
        cfg.skeleton = load_skeleton(path)
        cfg.skeleton_path = str(path)
    for key, default in TRAIN_DEFAULTS.items():
        if key in data:
            if key == "train_hidden":
                val = data[key]
                if not isinstance(val, list) or not val:
                    raise ConfigError("train_hidden must be a nonempty list of widths")
                cfg.train[key] = [_coerce(key, v, int) for v in val]
            else:
                cfg.train[key] = _coerce(key, data[key], type(default))
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parse_config(data, path.parent)


def load_denoiser(cfg: RunConfig):
    """Checkpoint path or ``gaussian:mean,var`` (isotropic, needs ``dim``).

    Raises :class:`CheckpointError` for anything that prevents loading.
    """
    spec = cfg.denoiser
    if spec is None:
        raise CheckpointError("config has no 'denoiser' entry")
    if spec.startswith("gaussian:"):
        try:
            mean, var = (float(v) for v in spec[len("gaussian:") :].split(","))
        except ValueError:
            raise CheckpointError(f"bad gaussian denoiser spec {spec!r}; want gaussian:mean,var") from None
        if cfg.dim is None:
            raise CheckpointError("gaussian denoiser needs 'dim' in the config")
        try:
            return GaussianPrior.isotropic(cfg.dim, mean, var)
        except SSDError as exc:
            raise CheckpointError(str(exc)) from exc
    path = cfg.resolve(spec)
    if not path.is_file():
        raise CheckpointError(f"denoiser checkpoint not found: {path}")
    try:
        return load_checkpoint(path)
    except OSError as exc:
        raise CheckpointError(f"cannot read {path}: {exc}") from exc


def motion_files(directory) -> list[str]:
    """``*.motion`` files in ``directory``, sorted by name."""
    d = Path(directory)
    if not d.is_dir():
        raise SSDError(f"reference set is not a directory: {d}")
    return sorted(str(p) for p in d.glob("*.motion") if p.is_file())


def env_log_level(default: str = "warn") -> str:
    level = os.environ.get("SSD_LOG_LEVEL", default).lower()
    return level if level in ("error", "warn", "info", "debug") else default
