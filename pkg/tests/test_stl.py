import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from robovdi.errors import ParseError
from robovdi.mesh import STLError, TriangleMesh, box, cylinder, parse_stl, sphere, write_stl

TRI = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def binary_stl(corners, declared=None, header=b"test"):
    corners = np.asarray(corners, dtype="<f4").reshape(-1, 3, 3)
    n = len(corners) if declared is None else declared
    body = b"".join(
        struct.pack("<3f", 0, 0, 1) + c.tobytes() + struct.pack("<H", 0) for c in corners
    )
    return header.ljust(80, b"\0") + struct.pack("<I", n) + body


def ascii_cube() -> bytes:
    cube = box((1.0, 1.0, 1.0))
    shifted = TriangleMesh(cube.vertices + 0.5, cube.triangles)
    return write_stl(shifted, ascii=True, name="cube")


def test_single_binary_triangle():
    m = parse_stl(binary_stl(TRI))
    assert m.n_triangles == 1
    assert m.vertices.shape == (3, 3)
    np.testing.assert_array_equal(m.corners()[0], TRI)


def test_ascii_cube_bounds():
    m = parse_stl(ascii_cube())
    assert m.n_triangles == 12
    lo, hi = m.bounds()
    np.testing.assert_array_equal(lo, [0, 0, 0])
    np.testing.assert_array_equal(hi, [1, 1, 1])


def test_truncated_binary():
    data = binary_stl(np.tile(TRI, (10, 1, 1)), declared=100)
    with pytest.raises(STLError, match="truncated"):
        parse_stl(data)


def test_short_header_is_truncated():
    with pytest.raises(STLError, match="truncated"):
        parse_stl(b"\0" * 40)


def test_ascii_syntax_error_reports_line():
    text = "solid x\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 zz\n"
    with pytest.raises(STLError) as info:
        parse_stl(text.encode())
    assert info.value.line == 5
    assert "line 5" in str(info.value)
    assert isinstance(info.value, ParseError)


def test_ascii_missing_endsolid():
    text = "solid x\n facet normal 0 0 1\n  outer loop\n" + "   vertex 0 0 0\n" * 3
    text += "  endloop\n endfacet\n"
    with pytest.raises(STLError, match="endsolid"):
        parse_stl(text.encode())


def test_binary_with_solid_header_is_binary():
    data = binary_stl(TRI, header=b"solid but actually binary")
    m = parse_stl(data)
    np.testing.assert_array_equal(m.corners()[0], TRI)


def test_parse_is_deterministic():
    data = write_stl(sphere(0.3))
    a, b = parse_stl(data), parse_stl(data)
    assert a.same_as(b)


def test_ascii_round_trip_exact():
    m = cylinder(0.1, 0.4)
    # STL stores corners per facet, so compare corners rather than indexed topology
    np.testing.assert_array_equal(parse_stl(write_stl(m, ascii=True)).corners(), m.corners())


def test_primitive_counts():
    assert box((1, 2, 3)).n_triangles == 12
    assert cylinder(0.1, 1.0).n_triangles == 4 * 32
    lo, hi = cylinder(0.1, 1.0).bounds()
    np.testing.assert_allclose(lo, [-0.1, -0.1, -0.5], atol=1e-12)
    np.testing.assert_allclose(hi, [0.1, 0.1, 0.5], atol=1e-12)
    r = np.linalg.norm(sphere(0.25).vertices, axis=1)
    np.testing.assert_allclose(r, 0.25, atol=1e-12)


f32 = st.floats(-100, 100, allow_nan=False, width=32)


@settings(max_examples=50)
@given(arrays(np.float32, st.tuples(st.integers(1, 20), st.just(3), st.just(3)), elements=f32))
def test_binary_round_trip_is_bitwise(corners):
    m = parse_stl(binary_stl(corners))
    np.testing.assert_array_equal(m.corners(), corners.astype(np.float64))
    assert parse_stl(write_stl(m)).same_as(m)
