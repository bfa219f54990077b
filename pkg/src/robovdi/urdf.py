"""URDF ingestion: links, joints and collision geometry."""

from __future__ import annotations

import logging
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import mesh as meshlib
from .errors import KinematicTreeError, ParseError, UnsupportedFeatureError
from .mesh import TriangleMesh
from .transforms import RigidTransform

log = logging.getLogger(__name__)

JOINT_KINDS = ("revolute", "continuous", "prismatic", "fixed")


@dataclass(frozen=True, eq=False)
class Joint:
    name: str
    kind: str
    parent_link: str
    child_link: str
    origin: RigidTransform = field(default_factory=RigidTransform.identity)
    axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    limits: tuple[float, float] | None = None

    @property
    def movable(self) -> bool:
        return self.kind != "fixed"


@dataclass(frozen=True, eq=False)
class Link:
    name: str
    mesh: TriangleMesh | None = None
    mesh_transform: RigidTransform = field(default_factory=RigidTransform.identity)


@dataclass(frozen=True, eq=False)
class RobotModel:
    """Kinematic tree with per-link collision meshes.

    Construction validates the tree: every joint references declared links,
    every non-root link has exactly one parent joint and there are no cycles.
    """

    name: str
    links: tuple[Link, ...]
    joints: tuple[Joint, ...]
    root_link: str = ""

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "root_link", _validate_tree(self.links, self.joints, self.root_link))

    @property
    def link_map(self) -> dict[str, Link]:
        return {lk.name: lk for lk in self.links}

    @property
    def movable_joints(self) -> list[Joint]:
        return [j for j in self.joints if j.movable]

    def children(self) -> dict[str, list[Joint]]:
        out: dict[str, list[Joint]] = {lk.name: [] for lk in self.links}
        for j in self.joints:
            out[j.parent_link].append(j)
        return out

    def walk(self):
        """Yield ``(link_name, parent_joint)`` depth-first from the root."""
        kids = self.children()
        stack = [(self.root_link, None)]
        while stack:
            name, joint = stack.pop()
            yield name, joint
            for j in reversed(kids[name]):
                stack.append((j.child_link, j))

    @property
    def n_triangles(self) -> int:
        return sum(lk.mesh.n_triangles for lk in self.links if lk.mesh is not None)


def _validate_tree(links, joints, root_hint: str) -> str:
    names = [lk.name for lk in links]
    if not names:
        raise KinematicTreeError("robot declares no links")
    if len(set(names)) != len(names):
        raise KinematicTreeError("duplicate link names")
    declared = set(names)
    parent_of: dict[str, str] = {}
    for j in joints:
        if j.parent_link == j.child_link:
            raise KinematicTreeError(f"cycle: joint {j.name!r} connects link {j.parent_link!r} to itself")
        for role, ln in (("parent", j.parent_link), ("child", j.child_link)):
            if ln not in declared:
                raise KinematicTreeError(f"joint {j.name!r} references undeclared {role} link {ln!r}")
        if j.child_link in parent_of:
            raise KinematicTreeError(f"link {j.child_link!r} has more than one parent joint")
        parent_of[j.child_link] = j.name
    roots = [n for n in names if n not in parent_of]
    if not roots:
        raise KinematicTreeError("cycle: every link has a parent joint")
    if len(roots) > 1:
        raise KinematicTreeError(f"links {roots} are not connected into a single tree")
    root = roots[0]
    if root_hint and root_hint != root:
        raise KinematicTreeError(f"root link {root_hint!r} has a parent joint (actual root {root!r})")
    # a link with one parent each plus a unique root can still hide a cycle
    kids: dict[str, list[str]] = {n: [] for n in names}
    for j in joints:
        kids[j.parent_link].append(j.child_link)
    seen, stack = set(), [root]
    while stack:
        n = stack.pop()
        seen.add(n)
        stack.extend(kids[n])
    if seen != declared:
        raise KinematicTreeError(f"cycle among links {sorted(declared - seen)}")
    return root


# --- XML parsing -----------------------------------------------------------


def _floats(text: str | None, n: int, what: str, default=None) -> np.ndarray:
    if text is None:
        if default is None:
            raise ParseError(f"missing {what}")
        return np.asarray(default, dtype=np.float64)
    try:
        vals = [float(x) for x in text.split()]
    except ValueError:
        raise ParseError(f"bad number in {what}: {text!r}") from None
    if len(vals) != n:
        raise ParseError(f"{what} needs {n} values, got {len(vals)}")
    return np.asarray(vals)


def _origin(el) -> RigidTransform:
    o = el.find("origin") if el is not None else None
    if o is None:
        return RigidTransform.identity()
    xyz = _floats(o.get("xyz"), 3, "origin xyz", (0, 0, 0))
    rpy = _floats(o.get("rpy"), 3, "origin rpy", (0, 0, 0))
    return RigidTransform.from_rpy(rpy, xyz)


def resolve_mesh_path(filename: str, base_dir, package_dirs=None) -> Path:
    """Resolve a URDF mesh ``filename`` to a local path.

    ``package://name/rest`` uses ``package_dirs[name]`` when given, otherwise
    ``rest`` relative to ``base_dir``. Relative paths are resolved against
    ``base_dir``.
    """
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    if filename.startswith("package://"):
        pkg, _, rest = filename[len("package://"):].partition("/")
        root = Path((package_dirs or {}).get(pkg, base))
        return root / rest
    if filename.startswith("file://"):
        filename = filename[len("file://"):]
    p = Path(filename)
    return p if p.is_absolute() else base / p


def _geometry_mesh(geom, base_dir, package_dirs, mesh_cache) -> TriangleMesh:
    shapes = [c for c in geom if isinstance(c.tag, str)]
    if len(shapes) != 1:
        raise ParseError("geometry must contain exactly one shape")
    shape = shapes[0]
    if shape.tag == "box":
        return meshlib.box(_floats(shape.get("size"), 3, "box size"))
    if shape.tag == "cylinder":
        r = _floats(shape.get("radius"), 1, "cylinder radius")[0]
        length = _floats(shape.get("length"), 1, "cylinder length")[0]
        return meshlib.cylinder(r, length)
    if shape.tag == "sphere":
        return meshlib.sphere(_floats(shape.get("radius"), 1, "sphere radius")[0])
    if shape.tag == "mesh":
        fn = shape.get("filename")
        if not fn:
            raise ParseError("mesh geometry without filename")
        path = resolve_mesh_path(fn, base_dir, package_dirs)
        if path.suffix.lower() != ".stl":
            raise UnsupportedFeatureError(f"mesh format {path.suffix!r} not supported (STL only): {fn}")
        key = os.fspath(path)
        if key not in mesh_cache:
            try:
                mesh_cache[key] = meshlib.read_stl(path)
            except FileNotFoundError:
                raise ParseError(f"mesh file not found: {path}") from None
        m = mesh_cache[key]
        scale = shape.get("scale")
        if scale is not None:
            m = m.scaled(_floats(scale, 3, "mesh scale"))
        return m
    raise UnsupportedFeatureError(f"unsupported geometry {shape.tag!r}")


def _parse_link(el, base_dir, package_dirs, mesh_cache) -> Link:
    name = el.get("name")
    if not name:
        raise ParseError("link without name")
    parts = []
    for col in el.findall("collision"):
        geom = col.find("geometry")
        if geom is None:
            raise ParseError(f"link {name!r}: collision without geometry")
        parts.append((_geometry_mesh(geom, base_dir, package_dirs, mesh_cache), _origin(col)))
    if not parts:
        return Link(name)
    if len(parts) == 1:
        m, tf = parts[0]
        return Link(name, m, tf)
    return Link(name, TriangleMesh.concatenate(m.transformed(tf) for m, tf in parts))


def _parse_joint(el) -> Joint:
    name = el.get("name")
    kind = el.get("type")
    if not name:
        raise ParseError("joint without name")
    if kind not in JOINT_KINDS:
        raise UnsupportedFeatureError(f"joint {name!r}: unsupported joint type {kind!r}")
    parent, child = el.find("parent"), el.find("child")
    if parent is None or child is None or not parent.get("link") or not child.get("link"):
        raise ParseError(f"joint {name!r}: missing parent or child link")
    axis = _floats(el.find("axis").get("xyz") if el.find("axis") is not None else None, 3, "axis", (1, 0, 0))
    norm = np.linalg.norm(axis)
    if kind != "fixed":
        if norm < 1e-12:
            raise ParseError(f"joint {name!r}: zero axis")
        axis = axis / norm
    limits = None
    lim = el.find("limit")
    if kind in ("revolute", "prismatic") and lim is not None:
        lo, hi = lim.get("lower"), lim.get("upper")
        if lo is not None or hi is not None:
            limits = (float(lo or 0.0), float(hi or 0.0))
    return Joint(name, kind, parent.get("link"), child.get("link"), _origin(el), axis, limits)


def parse_urdf(xml_text: str, base_dir=None, package_dirs=None) -> RobotModel:
    """Parse URDF text into a :class:`RobotModel`.

    Only ``collision`` geometry is loaded; ``visual`` and ``inertial`` tags
    are skipped. Mesh paths resolve against ``base_dir`` (default: cwd).
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from None
    if root.tag != "robot":
        raise ParseError(f"root element is <{root.tag}>, expected <robot>")
    cache: dict = {}
    links = [_parse_link(el, base_dir, package_dirs, cache) for el in root.findall("link")]
    joints = [_parse_joint(el) for el in root.findall("joint")]
    for el in root:
        if el.tag not in ("link", "joint", "material", "transmission", "gazebo"):
            log.debug("ignoring <%s> element", el.tag)
    return RobotModel(root.get("name", ""), links, joints)


def load_urdf(path, package_dirs=None) -> RobotModel:
    path = Path(path)
    return parse_urdf(path.read_text(), base_dir=path.parent, package_dirs=package_dirs)
