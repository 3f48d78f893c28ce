import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssdmotion.diffusion import GaussianPrior, make_schedule
from ssdmotion.errors import SSDError
from ssdmotion.layout import SequenceLayout
from ssdmotion.motion import MotionSequence
from ssdmotion.metrics import (
    boundary_velocity_gap,
    gaussian_feature_distance,
    overlap_consistency,
    sequence_features,
    transition_report,
    write_report_csv,
)
from ssdmotion.sampler import WindowSpec
from ssdmotion.toyprior import WalkGenerator

LAYOUT = SequenceLayout.from_motions([0, 1], motion_length=20, transition_length=10, interp_width=2)


def _seq(frames, layout=LAYOUT, fps=20):
    return MotionSequence(np.asarray(frames, dtype=float), layout, fps)


def test_cubic_has_constant_jerk():
    t = np.arange(50.0)
    coeffs = np.array([0.5, -1.0, 2.0])
    frames = np.outer(t**3, coeffs) + np.outer(t**2, [1.0, 0.0, 3.0])
    rep = transition_report(_seq(frames))
    expect = 6.0 * np.linalg.norm(coeffs)
    tr = rep.transitions[0]
    assert tr.peak_jerk == pytest.approx(expect, rel=1e-9)
    # padded span [18, 32) touched by rows 15..31
    assert tr.area_under_jerk == pytest.approx(expect * 17 / 20, rel=1e-9)


def test_constant_sequence_all_zero():
    rep = transition_report(_seq(np.full((50, 4), 2.5)))
    t = rep.transitions[0]
    assert t.peak_jerk == t.area_under_jerk == t.boundary_velocity_gap == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), frame=st.integers(18, 31), delta=st.floats(0.01, 10.0))
def test_discontinuity_raises_peak_jerk(seed, frame, delta):
    frames = np.random.default_rng(seed).standard_normal((50, 3)) * 0.1
    base = transition_report(_seq(frames)).mean_peak_jerk
    bumped = frames.copy()
    bumped[frame:, 0] += delta
    # a step's third difference is delta * (1, -2, 1); the triangle inequality does the rest
    assert transition_report(_seq(bumped)).mean_peak_jerk >= 2 * delta - base - 1e-9


def test_step_inside_smooth_transition_raises_peak_by_delta():
    frames = np.zeros((50, 2))
    frames[25:, 1] = 0.7
    assert transition_report(_seq(frames)).mean_peak_jerk >= 0.7


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), c=st.floats(0.01, 50.0))
def test_homogeneous_degree_one(seed, c):
    frames = np.random.default_rng(seed).standard_normal((50, 3))
    a, b = transition_report(_seq(frames)), transition_report(_seq(c * frames))
    assert b.mean_peak_jerk == pytest.approx(c * a.mean_peak_jerk, rel=1e-9)
    assert b.mean_area_under_jerk == pytest.approx(c * a.mean_area_under_jerk, rel=1e-9)
    assert b.mean_boundary_velocity_gap == pytest.approx(c * a.mean_boundary_velocity_gap, rel=1e-9, abs=1e-12)


def test_coordinate_permutation_invariance(rng):
    frames = rng.standard_normal((50, 5))
    perm = rng.permutation(5)
    a, b = transition_report(_seq(frames)), transition_report(_seq(frames[:, perm]))
    assert a.mean_peak_jerk == pytest.approx(b.mean_peak_jerk, rel=1e-12)
    assert a.mean_area_under_jerk == pytest.approx(b.mean_area_under_jerk, rel=1e-12)
    sa = [rng.standard_normal((30, 5)) for _ in range(3)]
    sb = [rng.standard_normal((30, 5)) + 1 for _ in range(3)]
    d1 = gaussian_feature_distance(sa, sb)
    d2 = gaussian_feature_distance([x[:, perm] for x in sa], [x[:, perm] for x in sb])
    assert d1 == pytest.approx(d2, rel=1e-12)


def test_report_errors_and_one_entry_per_transition():
    lay = SequenceLayout.from_motions([0, 1, 2], motion_length=10, transition_length=8, interp_width=1)
    rep = transition_report(_seq(np.random.default_rng(0).standard_normal((46, 2)), lay))
    assert [t.index for t in rep.transitions] == [1, 3]
    assert all(v >= 0 for _, _, v in rep.rows())
    assert "mean" in rep.table()
    with pytest.raises(SSDError):
        transition_report(_seq(np.zeros((10, 2)), SequenceLayout.from_motions([0], motion_length=10)))
    with pytest.raises(SSDError):
        transition_report(_seq(np.zeros((50, 2))), space="fk")


def test_velocity_gap_linear_is_zero():
    frames = np.outer(np.arange(50.0), [0.3, -0.2])
    np.testing.assert_allclose(boundary_velocity_gap(_seq(frames)), 0.0, atol=1e-12)


def test_velocity_gap_frozen_meets_unit_speed():
    frames = np.zeros((50, 2))
    frames[20:30, 0] = np.arange(10.0)  # transition moves at speed 1
    gaps = boundary_velocity_gap(_seq(frames))
    assert gaps[0] == pytest.approx(1.0)


def test_velocity_gap_walk_then_freeze():
    walk, _ = WalkGenerator(0).generate(20, np.random.default_rng(4))
    frames = np.vstack([walk, np.repeat(walk[-1:], 30, axis=0)])
    gap = boundary_velocity_gap(_seq(frames))[0]
    assert gap == pytest.approx(np.linalg.norm(walk[19] - walk[18]), rel=1e-12)
    # the root part of the seam velocity is the walk's forward speed
    root_speed = np.linalg.norm(walk[19, :3] - walk[18, :3])
    assert 0 < root_speed <= gap


def _feature_copies(x, n=3):
    return [x.copy() for _ in range(n)]


def test_feature_distance_examples(rng):
    a = [rng.standard_normal((30, 4)) for _ in range(4)]
    assert gaussian_feature_distance(a, a) == 0.0
    u, v = rng.standard_normal((30, 4)), rng.standard_normal((30, 4))
    expect = np.sum((sequence_features(u) - sequence_features(v)) ** 2)
    assert gaussian_feature_distance(_feature_copies(u), _feature_copies(v)) == pytest.approx(expect, rel=1e-10)
    c = np.array([0.5, -1.0, 2.0, 0.0])
    shifted = [x + c for x in a]
    assert gaussian_feature_distance(a, shifted) == pytest.approx(np.sum(c**2), rel=1e-10)
    b = [rng.standard_normal((30, 4)) * 2 for _ in range(3)]
    assert gaussian_feature_distance(a, b) == pytest.approx(gaussian_feature_distance(b, a), rel=1e-12)


def test_feature_distance_errors(rng):
    x = rng.standard_normal((30, 4))
    with pytest.raises(SSDError):
        gaussian_feature_distance([x], [x, x])
    with pytest.raises(SSDError):
        gaussian_feature_distance([x, x], [x[:, :3], x[:, :3]])
    with pytest.raises(SSDError):
        sequence_features(x[:3])


class Identity:
    max_window = 1000
    dim = 3
    conditions = 1
    schedule = make_schedule()

    def predict(self, x_t, t, cond):
        return x_t.copy()


def test_overlap_consistency_zero_for_pointwise_denoisers(rng):
    lay = SequenceLayout.from_motions([0], motion_length=100)
    seq = _seq(rng.standard_normal((100, 3)), lay)
    spec = WindowSpec(30, 10)
    assert overlap_consistency(seq, Identity(), spec=spec) == 0.0
    prior = GaussianPrior(np.array([0.1, 0.2, -0.3]), np.array([0.5, 1.0, 2.0]))
    assert overlap_consistency(seq, prior, spec=spec) == 0.0
    with pytest.raises(SSDError):
        overlap_consistency(seq, prior, spec=WindowSpec(30, 30))
    with pytest.raises(SSDError):
        overlap_consistency(_seq(np.zeros((30, 3)), SequenceLayout.from_motions([0], motion_length=30)),
                            prior, spec=spec)


def test_report_csv(tmp_path, rng):
    rep = transition_report(_seq(rng.standard_normal((50, 2))))
    path = tmp_path / "m.csv"
    write_report_csv({"a.motion": rep}, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["file", "transition", "metric", "value"]
    assert len(rows) == 1 + 6
    assert float(rows[1][3]) == rep.transitions[0].peak_jerk
