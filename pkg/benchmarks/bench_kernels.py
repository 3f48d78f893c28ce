"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--iterations N]

Times each kernel on representative shapes, checks both backends agree,
then times a short end-to-end optimization with each backend.
"""

import argparse
import timeit

import numpy as np

from ssdmotion import kernels
from ssdmotion.diffusion import GaussianPrior
from ssdmotion.layout import SequenceLayout
from ssdmotion.motion import toy_skeleton
from ssdmotion.seqinit import init_sequence
from ssdmotion.ssd import SSDConfig, optimize


def kernel_cases(rng):
    sk = toy_skeleton()
    root = rng.standard_normal((120, 3))
    rot = np.ascontiguousarray(rng.uniform(-2, 2, (120, 5, 3)))
    T, D, W = 360, 18, 120
    p, m, v = rng.standard_normal((T, D)), np.zeros((T, D)), np.zeros((T, D))
    gw = rng.standard_normal((W, D))
    scale = np.full(T, 0.8)
    consts = (0.002, 0.9, 0.999, 1e-8, 0.0, 0.1, 0.001)
    flat = [rng.standard_normal(T * D) for _ in range(3)] + [rng.uniform(0, 1, T * D)]
    return {
        "fk_forward (120 frames)": lambda mod: mod.fk_forward(root, rot, sk.parent_array, sk.offsets),
        "adamw_step (6480 params)": lambda mod: mod.adamw_step(*[a.copy() for a in flat], *consts),
        "masked_window_adamw_step (360x18, W=120)": lambda mod: mod.masked_window_adamw_step(
            p.copy(), m.copy(), v.copy(), gw, 100, scale, True, *consts
        ),
    }


def time_call(fn, repeat):
    number = 50
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def end_to_end(backend, iterations):
    kernels.set_backend(backend)
    prior = GaussianPrior(np.linspace(-1, 1, 18), np.ones(18))
    layout = SequenceLayout.from_motions([0, 1, 2], motion_length=100, transition_length=30)
    seq = init_sequence(layout, prior, rng=np.random.default_rng(0))
    cfg = SSDConfig(iterations=iterations)
    best = min(timeit.repeat(lambda: optimize(seq, prior, config=cfg), number=1, repeat=3))
    out, _ = optimize(seq, prior, config=cfg)
    return best, out.frames


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--iterations", type=int, default=2000)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the numpy fallback is available")
    original = kernels.BACKEND
    rng = np.random.default_rng(0)
    print(f"{'kernel':<44}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for name, fn in kernel_cases(rng).items():
        times = {b: time_call(lambda: fn(kernels.get_backend(b)), args.repeat) for b in backends}
        row = f"{name:<44}" + "".join(f"{times[b] * 1e6:>11.1f} us" for b in backends)
        if len(backends) == 2:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)

    results = {b: end_to_end(b, args.iterations) for b in backends}
    row = f"{f'optimize ({args.iterations} iterations)':<44}" + "".join(
        f"{results[b][0]:>12.3f} s" for b in backends
    )
    if len(backends) == 2:
        row += f"{results['python'][0] / results['compiled'][0]:>9.2f}x"
        diff = np.max(np.abs(results["python"][1] - results["compiled"][1]))
        print(row)
        print(f"max |difference| between backends after optimize: {diff:.3g}")
    else:
        print(row)
    kernels.set_backend(original)


if __name__ == "__main__":
    main()
