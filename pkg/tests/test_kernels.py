import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssdmotion import _pykernels, kernels
from ssdmotion.motion import toy_skeleton

compiled = pytest.mark.skipif(
    "compiled" not in kernels.available_backends(), reason="compiled extension not built"
)


def _adam_args(rng, shape):
    p = rng.standard_normal(shape)
    g = rng.standard_normal(shape)
    m = rng.standard_normal(shape) * 0.1
    v = rng.uniform(0, 0.1, shape)
    return p, g, m, v


def reference_adamw(p, g, m, v, lr, b1, b2, eps, wd, step):
    """Textbook decoupled-weight-decay Adam written independently of the kernels."""
    m = b1 * m + (1 - b1) * g
    v = b2 * v + (1 - b2) * g**2
    mhat = m / (1 - b1**step)
    vhat = v / (1 - b2**step)
    p = p * (1 - lr * wd) - lr * mhat / (np.sqrt(vhat) + eps)
    return p, m, v


@pytest.mark.parametrize("backend", kernels.available_backends())
@pytest.mark.parametrize("wd", [0.0, 0.01])
def test_adamw_matches_reference(backend, wd):
    mod = kernels.get_backend(backend)
    rng = np.random.default_rng(0)
    p, g, m, v = _adam_args(rng, (50,))
    step = 3
    rp, rm, rv = reference_adamw(p, g, m, v, 0.01, 0.9, 0.999, 1e-8, wd, step)
    mod.adamw_step(p, g, m, v, 0.01, 0.9, 0.999, 1e-8, wd, 1 - 0.9**step, 1 - 0.999**step)
    np.testing.assert_allclose(p, rp, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(m, rm, rtol=1e-13)
    np.testing.assert_allclose(v, rv, rtol=1e-13)


@compiled
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), wd=st.sampled_from([0.0, 0.05]))
def test_adamw_backends_bit_identical(seed, wd):
    rng = np.random.default_rng(seed)
    a = _adam_args(rng, (40,))
    b = [x.copy() for x in a]
    args = (0.003, 0.9, 0.999, 1e-8, wd, 0.19, 0.002997)
    _pykernels.adamw_step(*a, *args)
    kernels.get_backend("compiled").adamw_step(*b, *args)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@compiled
@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    start=st.integers(0, 12),
    scale_step=st.booleans(),
)
def test_masked_window_backends_bit_identical(seed, start, scale_step):
    rng = np.random.default_rng(seed)
    T, D, W = 20, 3, 8
    p, _, m, v = _adam_args(rng, (T, D))
    gw = rng.standard_normal((W, D))
    scale = rng.choice([0.0, 0.1, 0.8, 1.0], size=T)
    args = (0.002, 0.9, 0.999, 1e-8, 0.0, 0.5, 0.01)
    a = [p.copy(), m.copy(), v.copy()]
    b = [p.copy(), m.copy(), v.copy()]
    _pykernels.masked_window_adamw_step(*a, gw, start, scale, scale_step, *args)
    kernels.get_backend("compiled").masked_window_adamw_step(*b, gw, start, scale, scale_step, *args)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("backend", kernels.available_backends())
@pytest.mark.parametrize("scale_step", [True, False])
def test_masked_window_zero_scale_frozen(backend, scale_step):
    mod = kernels.get_backend(backend)
    rng = np.random.default_rng(1)
    p = rng.standard_normal((10, 2))
    # the optimizer starts from zero moments, so masked-out frames never move
    m, v = np.zeros_like(p), np.zeros_like(p)
    before = p.copy()
    scale = np.zeros(10)
    scale[4:] = 1.0
    for _ in range(5):
        mod.masked_window_adamw_step(
            p, m, v, rng.standard_normal((6, 2)), 2, scale, scale_step,
            0.01, 0.9, 0.999, 1e-8, 0.0, 0.5, 0.5,
        )
    assert np.array_equal(p[:4], before[:4])
    assert not np.array_equal(p[4:8], before[4:8])


@pytest.mark.parametrize("backend", kernels.available_backends())
def test_masked_window_equals_dense_step(backend):
    """Scattering the scaled window gradient and taking a dense step gives the same result."""
    mod = kernels.get_backend(backend)
    rng = np.random.default_rng(2)
    p, _, m, v = _adam_args(rng, (12, 2))
    gw = rng.standard_normal((5, 2))
    scale = rng.uniform(0, 1, 12)
    dense = np.zeros((12, 2))
    dense[3:8] = gw * scale[3:8, None]
    a = [p.copy(), m.copy(), v.copy()]
    b = [p.copy().ravel(), m.copy().ravel(), v.copy().ravel()]
    consts = (0.01, 0.9, 0.999, 1e-8, 0.0, 0.1, 0.001)
    mod.masked_window_adamw_step(*a, gw, 3, scale, False, *consts)
    mod.adamw_step(b[0], dense.ravel(), b[1], b[2], *consts)
    np.testing.assert_array_equal(a[0].ravel(), b[0])


@compiled
def test_fk_backends_agree():
    sk = toy_skeleton()
    rng = np.random.default_rng(3)
    root = rng.standard_normal((30, 3))
    rot = np.ascontiguousarray(rng.uniform(-3, 3, (30, 5, 3)))
    rot[0, 1] = [1e-8, 0, 0]  # small-angle branch
    a = _pykernels.fk_forward(root, rot, sk.parent_array, sk.offsets)
    b = kernels.get_backend("compiled").fk_forward(root, rot, sk.parent_array, sk.offsets)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-14)


def test_backend_switching_roundtrip():
    original = kernels.BACKEND
    try:
        kernels.set_backend("python")
        assert kernels.fk_forward is _pykernels.fk_forward
        assert kernels.BACKEND == "python"
    finally:
        kernels.set_backend(original)
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_var_forces_python_fallback():
    env = dict(os.environ, SSDMOTION_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "import ssdmotion.kernels as k; print(k.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
