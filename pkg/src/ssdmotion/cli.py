"""Command-line entry point.

Exit codes: 0 ok, 2 configuration or input error, 3 training divergence,
4 denoiser load failure, 5 non-finite loss during optimization.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from . import io
from .errors import CheckpointError, ConfigError, OptimizationError, SSDError, TrainingDivergence
from .diffusion import make_schedule
from .metrics import gaussian_feature_distance, transition_report, write_report_csv
from .motion import MotionSequence
from .seqinit import build_gradient_mask, init_sequence, interpolate_boundaries
from .ssd import SINGLE_PROMPT, optimize, optimize_single_prompt, write_loss_csv
from .toyprior import generate_dataset, save_checkpoint, standard_generators, train_denoiser

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_DENOISER, EXIT_NAN = 0, 2, 3, 4, 5

logger = logging.getLogger("ssdmotion")

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _joints(cfg: io.RunConfig) -> int:
    return cfg.skeleton.joint_count if cfg.skeleton is not None else 0


def _fmt_loss(loss) -> str:
    return " ".join(f"{k}={getattr(loss, k):.6g}" for k in ("align", "pos", "foot", "vel", "total"))


def cmd_train_prior(args, cfg: io.RunConfig) -> int:
    tr = cfg.train
    rng = np.random.default_rng(cfg.seed)
    dataset = generate_dataset(
        standard_generators(), tr["train_samples_per_label"], tr["train_window"], rng
    )
    res = train_denoiser(
        dataset,
        make_schedule(),
        tr["train_epochs"],
        tr["train_lr"],
        rng,
        batch_size=tr["train_batch_size"],
        hidden=tr["train_hidden"],
        basis_size=tr["train_basis_size"],
        cond_dropout=tr["train_cond_dropout"],
    )
    save_checkpoint(res.denoiser, args.out)
    final = res.loss_curve[-1] if res.loss_curve.size else float("nan")
    print(f"final loss {final:.6g} after {res.loss_curve.size} steps -> {args.out}")
    return EXIT_OK


def cmd_init(args, cfg: io.RunConfig) -> int:
    if cfg.layout is None:
        raise ConfigError("init needs a 'layout' in the config")
    den = io.load_denoiser(cfg)
    seq = init_sequence(
        cfg.layout, den, init_guidance=cfg.init_guidance,
        rng=np.random.default_rng(cfg.seed), fps=cfg.fps,
    )
    seq = interpolate_boundaries(seq)
    io.write_motion(args.out, seq, _joints(cfg))
    print(f"wrote {seq.length} frames x {seq.dim} dims -> {args.out}")
    return EXIT_OK


def _report_final(history):
    if history:
        print("final " + _fmt_loss(history[-1].loss))


def cmd_optimize(args, cfg: io.RunConfig) -> int:
    den = io.load_denoiser(cfg)
    seq, _ = io.read_motion(args.inp)
    mask = build_gradient_mask(seq.layout, cfg.ssd.mask_l, cfg.ssd.mask_h)
    out, history = optimize(seq, den, config=cfg.ssd, skeleton=cfg.skeleton, mask=mask)
    io.write_motion(args.out, out, _joints(cfg))
    if args.loss_csv:
        write_loss_csv(history, args.loss_csv)
    _report_final(history)
    return EXIT_OK


def cmd_single_prompt(args, cfg: io.RunConfig) -> int:
    den = io.load_denoiser(cfg)
    over = dict(SINGLE_PROMPT)
    if args.guidance is not None:
        over["guidance"] = args.guidance
    if args.lr is not None:
        over["lr"] = args.lr
    ssd = dataclasses.replace(cfg.ssd, **over)
    seq, history = optimize_single_prompt(
        args.frames, args.condition, den, config=ssd, skeleton=cfg.skeleton, fps=cfg.fps
    )
    io.write_motion(args.out, seq, _joints(cfg))
    if args.loss_csv:
        write_loss_csv(history, args.loss_csv)
    _report_final(history)
    return EXIT_OK


def cmd_metrics(args, cfg) -> int:
    seqs: dict[str, MotionSequence] = {}
    for path in args.inp:
        seqs[path], _ = io.read_motion(path)
    reports = {p: transition_report(s) for p, s in seqs.items()}
    dist = None
    if args.ref_set:
        refs = [io.read_motion(p)[0] for p in io.motion_files(args.ref_set)]
        dist = gaussian_feature_distance(list(seqs.values()), refs)
    write_report_csv(reports, args.out)
    for p, rep in reports.items():
        print(p)
        print(rep.table())
    if dist is not None:
        with open(args.out, "a", newline="") as fh:
            fh.write(f"*,,gaussian_feature_distance,{dist!r}\n")
        print(f"gaussian_feature_distance {dist:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssdmotion", description="Long motion synthesis by segment score distillation.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, config=True):
        sp = sub.add_parser(name, help=help_)
        if config:
            sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.set_defaults(func=fn)
        return sp

    sp = add("train-prior", cmd_train_prior, "train the toy denoiser on synthetic motions")
    sp.add_argument("--out", required=True, help="checkpoint path")

    sp = add("init", cmd_init, "sample sub-motions and blend seams")
    sp.add_argument("--out", required=True, help="motion file")

    sp = add("optimize", cmd_optimize, "run segment score distillation")
    sp.add_argument("--in", dest="inp", required=True, help="input motion file")
    sp.add_argument("--out", required=True, help="output motion file")
    sp.add_argument("--loss-csv", default=None, help="per-log-step loss table")

    sp = add("metrics", cmd_metrics, "transition smoothness and feature distance", config=False)
    sp.add_argument("--in", dest="inp", nargs="+", required=True, help="motion file(s)")
    sp.add_argument("--ref-set", default=None, help="directory of reference motion files")
    sp.add_argument("--out", required=True, help="CSV with columns file,transition,metric,value")

    sp = add("single-prompt", cmd_single_prompt, "one label, one long span, no init stage")
    sp.add_argument("--condition", type=int, required=True)
    sp.add_argument("--frames", type=int, default=520)
    sp.add_argument("--guidance", type=float, default=None)
    sp.add_argument("--lr", type=float, default=None)
    sp.add_argument("--out", required=True, help="motion file")
    sp.add_argument("--loss-csv", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=_LEVELS[io.env_log_level()],
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = None
        if getattr(args, "config", None) is not None:
            cfg = io.load_config(args.config).with_seed(args.seed)
        return args.func(args, cfg)
    except TrainingDivergence as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except CheckpointError as exc:
        print(f"error: cannot load denoiser: {exc}", file=sys.stderr)
        return EXIT_DENOISER
    except OptimizationError as exc:
        print(f"error: optimization failed at {exc}", file=sys.stderr)
        return EXIT_NAN
    except (ConfigError, SSDError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
