import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ssdmotion.errors import DimensionError, SSDError
from ssdmotion.layout import SequenceLayout
from ssdmotion.motion import (
    FeatureNormalizer,
    MotionSequence,
    PoseVector,
    Skeleton,
    canonical_rotvec,
    compute_foot_contacts,
    finite_difference,
    fk,
    fk_jacobian,
    left_jacobian,
    rotation_matrix,
)
from ssdmotion.toyprior import WalkGenerator, intervals_to_mask, standard_generators

finite = st.floats(-4.0, 4.0, allow_nan=False)
rotvecs = arrays(np.float64, (3,), elements=finite)


def series_rotation(r):
    """Matrix exponential of the skew matrix by truncated series, an independent oracle."""
    K = np.array([[0, -r[2], r[1]], [r[2], 0, -r[0]], [-r[1], r[0], 0]])
    out, term = np.eye(3), np.eye(3)
    for k in range(1, 60):
        term = term @ K / k
        out = out + term
    return out


@given(rotvecs)
def test_rotation_matches_matrix_exponential(r):
    np.testing.assert_allclose(rotation_matrix(r), series_rotation(r), atol=1e-10)


@given(rotvecs)
def test_rotation_is_orthonormal(r):
    R = rotation_matrix(r)
    np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_small_angle_branch_continuous():
    r = np.array([3e-7, -2e-7, 1e-7])
    np.testing.assert_allclose(rotation_matrix(r), series_rotation(r), atol=1e-15)


@given(arrays(np.float64, (3,), elements=st.floats(-20, 20)))
def test_canonical_rotvec_same_rotation(r):
    c = canonical_rotvec(r)
    assert np.linalg.norm(c) < 2 * np.pi + 1e-12
    np.testing.assert_allclose(rotation_matrix(c), rotation_matrix(r), atol=1e-9)


def test_pose_vector_roundtrip_and_checks():
    x = np.arange(18, dtype=float) * 0.1
    p = PoseVector.from_flat(x)
    assert p.dim == 18
    np.testing.assert_allclose(rotation_matrix(p.flat()[3:6]), rotation_matrix(x[3:6]))
    with pytest.raises(DimensionError):
        PoseVector.from_flat(np.zeros(7))
    with pytest.raises(SSDError):
        PoseVector([0, 0, np.nan], np.zeros((1, 3)))


def test_skeleton_validation():
    with pytest.raises(SSDError):
        Skeleton(parents=(0,), offsets=[[0, 0, 0]])
    with pytest.raises(SSDError):
        Skeleton(parents=(-1, 2, 0), offsets=np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        Skeleton(parents=(-1, 0), offsets=np.zeros((3, 3)))
    with pytest.raises(SSDError):
        Skeleton(parents=(-1, 0), offsets=np.zeros((2, 3)), foot_joints=(5,))


def test_skeleton_dict_roundtrip(skeleton):
    back = Skeleton.from_dict(skeleton.to_dict())
    assert back.parents == skeleton.parents
    np.testing.assert_array_equal(back.offsets, skeleton.offsets)
    assert back.foot_joints == skeleton.foot_joints
    assert skeleton.dim == 18
    assert skeleton.ancestors(3) == [1, 0]


def test_fk_rest_pose(skeleton):
    pose = np.zeros(18)
    pose[:3] = [1.0, 0.9, -2.0]
    pos = fk(skeleton, pose)
    expect = np.array(
        [[1.0, 0.9, -2.0], [1.1, 0.9, -2.0], [0.9, 0.9, -2.0], [1.1, 0.0, -2.0], [0.9, 0.0, -2.0]]
    )
    np.testing.assert_allclose(pos, expect, atol=1e-15)


def test_fk_single_hinge(skeleton):
    # 90 degrees about +x carries the downward leg onto -z
    pose = np.zeros(18)
    pose[6] = np.pi / 2
    pos = fk(skeleton, pose)
    np.testing.assert_allclose(pos[3], [0.1, 0.0, -0.9], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (2, 18), elements=st.floats(-2.5, 2.5)))
def test_fk_jacobian_matches_finite_differences(skeleton, frames):
    _, jac = fk_jacobian(skeleton, frames)
    h = 1e-6
    fd = np.zeros_like(jac)
    for d in range(18):
        e = np.zeros(18)
        e[d] = h
        fd[..., d] = (fk(skeleton, frames + e) - fk(skeleton, frames - e)) / (2 * h)
    np.testing.assert_allclose(jac, fd, atol=1e-7)


def test_left_jacobian_small_angle_limit():
    np.testing.assert_allclose(left_jacobian(np.zeros(3)), np.eye(3))
    r = np.array([1e-7, 0, 0])
    np.testing.assert_allclose(left_jacobian(r), np.eye(3), atol=1e-7)


def test_fk_batched_shape(skeleton, rng):
    x = rng.standard_normal((4, 7, 18))
    assert fk(skeleton, x).shape == (4, 7, 5, 3)
    with pytest.raises(DimensionError):
        fk(skeleton, np.zeros(12))


def test_finite_difference_polynomial_oracle():
    t = np.arange(10.0)[:, None]
    x = t**3
    np.testing.assert_allclose(finite_difference(x, 3), 6.0)
    np.testing.assert_allclose(finite_difference(x, 1)[0], 1.0)
    with pytest.raises(ValueError):
        finite_difference(x, 4)
    with pytest.raises(ValueError):
        finite_difference(x[:3], 3)


def test_normalizer_roundtrip(rng):
    n = FeatureNormalizer(rng.standard_normal(5), rng.uniform(0.5, 2, 5))
    x = rng.standard_normal((6, 5))
    np.testing.assert_allclose(n.decode(n.encode(x)), x, atol=1e-14)
    with pytest.raises(SSDError):
        FeatureNormalizer(np.zeros(2), np.array([1.0, 0.0]))


def test_motion_sequence_checks():
    lay = SequenceLayout.from_motions([0], motion_length=5)
    with pytest.raises(DimensionError):
        MotionSequence(np.zeros((4, 3)), lay)
    with pytest.raises(SSDError):
        MotionSequence(np.full((5, 3), np.inf), lay)


@pytest.mark.parametrize("gen", standard_generators(), ids=lambda g: g.name)
def test_foot_contacts_match_generator_ground_truth(skeleton, gen):
    rng = np.random.default_rng(7)
    for _ in range(4):
        frames, stance = gen.generate(150, rng)
        truth = intervals_to_mask(stance, 150)
        got = compute_foot_contacts(skeleton, frames)
        np.testing.assert_array_equal(got[:-1], truth[:-1])


def test_walk_contacts_alternate(skeleton):
    frames, stance = WalkGenerator(0).generate(200, np.random.default_rng(3))
    mask = intervals_to_mask(stance, 200)
    # exactly one foot planted per frame during a walk
    assert np.all(mask.sum(axis=1) == 1)
    for runs in stance:
        assert all(0 <= a < b <= 200 for a, b in runs)


def test_foot_contacts_last_frame_rule(skeleton):
    frames = np.zeros((3, 18))
    frames[:, 1] = 0.9
    frames[2, 0] = 0.5  # big move into the last frame
    c = compute_foot_contacts(skeleton, frames)
    assert c[0].all() and not c[1].any() and not c[2].any()


def test_foot_contacts_height_threshold(skeleton):
    frames = np.zeros((4, 18))
    frames[:, 1] = 0.9 + 0.06
    assert not compute_foot_contacts(skeleton, frames).any()
    frames[:, 1] = 0.9 + 0.04
    assert compute_foot_contacts(skeleton, frames).all()
    with pytest.raises(ValueError):
        compute_foot_contacts(skeleton, frames, height_eps=0.0)
