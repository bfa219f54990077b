import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robovdi.transforms import RigidTransform

angles = st.floats(-math.pi, math.pi, allow_nan=False)
coords = st.floats(-5, 5, allow_nan=False)


@st.composite
def transforms(draw):
    rpy = [draw(angles) for _ in range(3)]
    xyz = [draw(coords) for _ in range(3)]
    return RigidTransform.from_rpy(rpy, xyz)


@given(transforms())
def test_quaternion_is_unit(tf):
    assert abs(np.linalg.norm(tf.quaternion) - 1.0) < 1e-9


@given(transforms())
def test_inverse_composes_to_identity(tf):
    assert (tf.inverse() @ tf).is_close(RigidTransform.identity(), atol=1e-9)
    assert (tf @ tf.inverse()).is_close(RigidTransform.identity(), atol=1e-9)


@settings(max_examples=50)
@given(transforms(), transforms(), transforms())
def test_composition_is_associative(a, b, c):
    assert ((a @ b) @ c).is_close(a @ (b @ c), atol=1e-9)


@given(transforms(), transforms())
def test_composition_matches_matrix_product(a, b):
    np.testing.assert_allclose((a @ b).as_matrix(), a.as_matrix() @ b.as_matrix(), atol=1e-12)


def test_rpy_is_fixed_axis_xyz():
    # yaw of pi/2 about Z maps x to y; roll afterwards would not
    tf = RigidTransform.from_rpy((0.0, 0.0, math.pi / 2))
    np.testing.assert_allclose(tf.apply([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)
    tf = RigidTransform.from_rpy((math.pi / 2, 0.0, math.pi / 2))
    # Rz(pi/2) @ Rx(pi/2) applied to y: Rx takes y to z, Rz leaves z alone
    np.testing.assert_allclose(tf.apply([0.0, 1.0, 0.0]), [0.0, 0.0, 1.0], atol=1e-15)


def test_from_quaternion_rejects_non_unit():
    with pytest.raises(ValueError, match="unit"):
        RigidTransform.from_quaternion((2.0, 0.0, 0.0, 0.0))


def test_quaternion_round_trip():
    q = np.array([0.5, 0.5, -0.5, 0.5])
    tf = RigidTransform.from_quaternion(q, (1, 2, 3))
    np.testing.assert_allclose(tf.quaternion, q, atol=1e-15)
    np.testing.assert_array_equal(tf.translation, [1.0, 2.0, 3.0])


def test_translation_is_read_only():
    tf = RigidTransform.from_translation((1, 2, 3))
    with pytest.raises(ValueError):
        tf.translation[0] = 5.0
