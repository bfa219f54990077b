"""Triangle meshes, primitive tessellation and STL reading/writing."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

#: Number of segments used when tessellating cylinders and spheres.
SEGMENTS = 32


class STLError(ParseError):
    """Raised for unreadable STL payloads."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangle mesh in meters.

    ``vertices`` is (N, 3) float64, ``triangles`` is (M, 3) int64. Both arrays
    are made read-only on construction.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh has non-finite vertex coordinates")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """(M, 3, 3) array of per-triangle corner positions."""
        return self.vertices[self.triangles]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def scaled(self, scale) -> TriangleMesh:
        return TriangleMesh(self.vertices * np.asarray(scale, dtype=np.float64), self.triangles)

    def transformed(self, tf) -> TriangleMesh:
        return TriangleMesh(tf.apply(self.vertices), self.triangles)

    def same_as(self, other: TriangleMesh) -> bool:
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(
            self.triangles, other.triangles
        )

    @staticmethod
    def concatenate(meshes) -> TriangleMesh:
        meshes = list(meshes)
        if not meshes:
            return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
        offsets = np.cumsum([0] + [len(m.vertices) for m in meshes[:-1]])
        return TriangleMesh(
            np.concatenate([m.vertices for m in meshes]),
            np.concatenate([m.triangles + o for m, o in zip(meshes, offsets)]),
        )


def box(size) -> TriangleMesh:
    """Axis-aligned box centered at the origin (12 triangles)."""
    hx, hy, hz = np.asarray(size, dtype=np.float64) / 2.0
    v = np.array(
        [[sx * hx, sy * hy, sz * hz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    )
    # vertex index = 4*(x>0) + 2*(y>0) + (z>0)
    t = [
        (0, 1, 3), (0, 3, 2),  # -x
        (4, 6, 7), (4, 7, 5),  # +x
        (0, 4, 5), (0, 5, 1),  # -y
        (2, 3, 7), (2, 7, 6),  # +y
        (0, 2, 6), (0, 6, 4),  # -z
        (1, 5, 7), (1, 7, 3),  # +z
    ]
    return TriangleMesh(v, t)


def cylinder(radius: float, length: float, segments: int = SEGMENTS) -> TriangleMesh:
    """Cylinder along z centered at the origin, capped at both ends."""
    ang = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    h = length / 2.0
    bottom = np.column_stack([ring, np.full(segments, -h)])
    top = np.column_stack([ring, np.full(segments, h)])
    v = np.vstack([bottom, top, [[0.0, 0.0, -h], [0.0, 0.0, h]]])
    cb, ct = 2 * segments, 2 * segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris += [(i, j, segments + j), (i, segments + j, segments + i)]
        tris += [(cb, j, i), (ct, segments + i, segments + j)]
    return TriangleMesh(v, tris)


def sphere(radius: float, segments: int = SEGMENTS) -> TriangleMesh:
    """UV sphere with ``segments`` slices and ``segments // 2`` stacks."""
    stacks = max(segments // 2, 2)
    verts = [(0.0, 0.0, radius)]
    for k in range(1, stacks):
        phi = np.pi * k / stacks
        for i in range(segments):
            th = 2.0 * np.pi * i / segments
            verts.append(
                (radius * np.sin(phi) * np.cos(th), radius * np.sin(phi) * np.sin(th), radius * np.cos(phi))
            )
    verts.append((0.0, 0.0, -radius))
    south = len(verts) - 1

    def ring(k, i):
        return 1 + (k - 1) * segments + i % segments

    tris = []
    for i in range(segments):
        tris.append((0, ring(1, i), ring(1, i + 1)))
        tris.append((south, ring(stacks - 1, i + 1), ring(stacks - 1, i)))
    for k in range(1, stacks - 1):
        for i in range(segments):
            a, b = ring(k, i), ring(k, i + 1)
            c, d = ring(k + 1, i), ring(k + 1, i + 1)
            tris += [(a, c, d), (a, d, b)]
    return TriangleMesh(np.array(verts), tris)


# --- STL -----------------------------------------------------------------

_HEADER = 80
_FACET = np.dtype([("normal", "<f4", 3), ("corners", "<f4", (3, 3)), ("attr", "<u2")])


def _from_corners(corners: np.ndarray) -> TriangleMesh:
    corners = np.asarray(corners, dtype=np.float64).reshape(-1, 3, 3)
    n = len(corners)
    return TriangleMesh(corners.reshape(-1, 3), np.arange(3 * n).reshape(n, 3))


def _parse_binary(data: bytes) -> TriangleMesh:
    if len(data) < _HEADER + 4:
        raise STLError(f"binary STL truncated: {len(data)} bytes, header needs 84")
    (count,) = struct.unpack_from("<I", data, _HEADER)
    need = _HEADER + 4 + count * _FACET.itemsize
    if len(data) < need:
        have = (len(data) - _HEADER - 4) // _FACET.itemsize
        raise STLError(f"binary STL truncated: declares {count} triangles, only {have} present")
    facets = np.frombuffer(data, dtype=_FACET, count=count, offset=_HEADER + 4)
    return _from_corners(facets["corners"])


def _parse_ascii(text: str) -> TriangleMesh:
    corners = []
    state = "start"  # start -> solid -> facet -> loop -> vertex(n) -> endloop -> endfacet
    nverts = 0
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok:
            continue
        kw = tok[0].lower()
        if state == "start":
            if kw != "solid":
                raise STLError(f"expected 'solid', got {tok[0]!r}", lineno)
            state = "solid"
        elif state == "solid":
            if kw == "endsolid":
                state = "start"
            elif kw == "facet":
                if len(tok) >= 2 and tok[1].lower() != "normal":
                    raise STLError(f"expected 'facet normal', got {raw.strip()!r}", lineno)
                state = "facet"
            else:
                raise STLError(f"expected 'facet' or 'endsolid', got {tok[0]!r}", lineno)
        elif state == "facet":
            if tok[:2] != ["outer", "loop"]:
                raise STLError(f"expected 'outer loop', got {raw.strip()!r}", lineno)
            state, nverts = "loop", 0
        elif state == "loop":
            if kw == "vertex":
                if len(tok) != 4:
                    raise STLError("vertex needs 3 coordinates", lineno)
                try:
                    corners.append([float(x) for x in tok[1:]])
                except ValueError:
                    raise STLError(f"bad vertex coordinates {tok[1:]}", lineno) from None
                nverts += 1
                if nverts > 3:
                    raise STLError("facet has more than 3 vertices", lineno)
            elif kw == "endloop":
                if nverts != 3:
                    raise STLError(f"facet has {nverts} vertices, expected 3", lineno)
                state = "endloop"
            else:
                raise STLError(f"expected 'vertex' or 'endloop', got {tok[0]!r}", lineno)
        elif state == "endloop":
            if kw != "endfacet":
                raise STLError(f"expected 'endfacet', got {tok[0]!r}", lineno)
            state = "solid"
    if state != "start":
        raise STLError("unexpected end of file (missing 'endsolid')", lineno)
    if not corners:
        raise STLError("ASCII STL contains no facets", lineno)
    return _from_corners(np.array(corners))


def parse_stl(data: bytes) -> TriangleMesh:
    """Parse a binary or ASCII STL payload.

    ASCII is assumed when the payload starts with ``solid`` and the body
    parses as ASCII. Binary files whose header happens to begin with
    ``solid`` are recognised by their exact size. Facet normals are dropped.
    """
    data = bytes(data)
    if data.lstrip()[:5].lower() != b"solid":
        return _parse_binary(data)
    try:
        return _parse_ascii(data.decode("ascii"))
    except (STLError, UnicodeDecodeError) as exc:
        if len(data) >= _HEADER + 4:
            (count,) = struct.unpack_from("<I", data, _HEADER)
            if len(data) >= _HEADER + 4 + count * _FACET.itemsize:
                return _parse_binary(data)
        if isinstance(exc, UnicodeDecodeError):
            raise STLError("payload is neither ASCII STL nor a complete binary STL") from None
        raise


def read_stl(path) -> TriangleMesh:
    with open(path, "rb") as f:
        return parse_stl(f.read())


def _normals(corners: np.ndarray) -> np.ndarray:
    n = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    return np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)


def write_stl(mesh: TriangleMesh, ascii: bool = False, name: str = "mesh") -> bytes:
    """Serialize a mesh to STL bytes (binary by default)."""
    corners = mesh.corners()
    normals = _normals(corners)
    if ascii:
        lines = [f"solid {name}"]
        for n, tri in zip(normals, corners):
            lines.append("  facet normal {:.9g} {:.9g} {:.9g}".format(*n))
            lines.append("    outer loop")
            for p in tri:
                lines.append("      vertex {!r} {!r} {!r}".format(*map(float, p)))
            lines.append("    endloop")
            lines.append("  endfacet")
        lines.append(f"endsolid {name}")
        return ("\n".join(lines) + "\n").encode("ascii")
    facets = np.zeros(len(corners), dtype=_FACET)
    facets["normal"] = normals
    facets["corners"] = corners
    header = f"binary STL {name}".encode("ascii")[:_HEADER].ljust(_HEADER, b" ")
    return header + struct.pack("<I", len(corners)) + facets.tobytes()
