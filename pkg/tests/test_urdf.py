import numpy as np
import pytest

from robovdi.errors import KinematicTreeError, ParseError, UnsupportedFeatureError
from robovdi.mesh import box, write_stl
from robovdi.urdf import load_urdf, parse_urdf, resolve_mesh_path


def robot(body: str) -> str:
    return f'<robot name="r">{body}</robot>'


def joint(name, parent, child, kind="revolute"):
    return (f'<joint name="{name}" type="{kind}"><parent link="{parent}"/>'
            f'<child link="{child}"/><axis xyz="0 0 1"/></joint>')


def test_single_link():
    m = parse_urdf(robot('<link name="a"/>'))
    assert len(m.links) == 1 and len(m.joints) == 0
    assert m.root_link == "a"


def test_arm6(arm6):
    assert len(arm6.links) == 7
    assert len(arm6.joints) == 6
    assert arm6.root_link == "base_link"
    assert all(j.kind == "revolute" for j in arm6.joints)
    assert arm6.n_triangles == 84


def test_walk_visits_each_link_once(arm6):
    names = [n for n, _ in arm6.walk()]
    assert sorted(names) == sorted(lk.name for lk in arm6.links)
    assert names[0] == "base_link"


def test_self_loop_is_cycle():
    with pytest.raises(KinematicTreeError, match="cycle"):
        parse_urdf(robot('<link name="a"/>' + joint("j", "a", "a")))


def test_two_link_cycle():
    body = '<link name="a"/><link name="b"/><link name="c"/>'
    body += joint("j1", "a", "b") + joint("j2", "b", "c") + joint("j3", "c", "b")
    with pytest.raises(KinematicTreeError):
        parse_urdf(robot(body))


def test_undeclared_link():
    with pytest.raises(KinematicTreeError, match="undeclared"):
        parse_urdf(robot('<link name="a"/>' + joint("j", "a", "ghost")))


def test_disconnected_links():
    with pytest.raises(KinematicTreeError, match="single tree"):
        parse_urdf(robot('<link name="a"/><link name="b"/>'))


def test_planar_joint_unsupported():
    body = '<link name="a"/><link name="b"/>' + joint("j", "a", "b", kind="planar")
    with pytest.raises(UnsupportedFeatureError, match="planar"):
        parse_urdf(robot(body))


def test_malformed_xml():
    with pytest.raises(ParseError, match="malformed"):
        parse_urdf('<robot name="r"><link name="a"></robot>')


def test_tree_errors_are_parse_errors():
    assert issubclass(KinematicTreeError, ParseError)
    assert issubclass(UnsupportedFeatureError, ParseError)


def test_primitives_and_visual_ignored():
    body = """
    <link name="a">
      <visual><geometry><mesh filename="does_not_exist.dae"/></geometry></visual>
      <collision><origin xyz="0 0 0.5"/><geometry><cylinder radius="0.1" length="1"/></geometry></collision>
    </link>
    <link name="b"><collision><geometry><sphere radius="0.2"/></geometry></collision></link>
    """ + joint("j", "a", "b")
    m = parse_urdf(robot(body))
    a, b = m.link_map["a"], m.link_map["b"]
    assert a.mesh.n_triangles == 4 * 32
    np.testing.assert_allclose(a.mesh_transform.translation, [0, 0, 0.5])
    assert b.mesh.n_triangles > 0


def test_multiple_collisions_are_merged():
    body = """<link name="a">
      <collision><origin xyz="1 0 0"/><geometry><box size="1 1 1"/></geometry></collision>
      <collision><origin xyz="-1 0 0"/><geometry><box size="1 1 1"/></geometry></collision>
    </link>"""
    m = parse_urdf(robot(body))
    lo, hi = m.links[0].mesh.bounds()
    np.testing.assert_allclose(lo, [-1.5, -0.5, -0.5])
    np.testing.assert_allclose(hi, [1.5, 0.5, 0.5])


def test_stl_mesh_with_scale_and_package(tmp_path):
    (tmp_path / "meshes").mkdir()
    (tmp_path / "meshes" / "cube.stl").write_bytes(write_stl(box((1, 1, 1))))
    urdf = tmp_path / "r.urdf"
    urdf.write_text(robot(
        '<link name="a"><collision><geometry>'
        '<mesh filename="package://mypkg/meshes/cube.stl" scale="2 1 0.5"/>'
        '</geometry></collision></link>'))
    m = load_urdf(urdf, package_dirs={"mypkg": tmp_path})
    lo, hi = m.links[0].mesh.bounds()
    np.testing.assert_allclose(hi - lo, [2.0, 1.0, 0.5])


def test_missing_mesh_file(tmp_path):
    urdf = tmp_path / "r.urdf"
    urdf.write_text(robot('<link name="a"><collision><geometry>'
                          '<mesh filename="nope.stl"/></geometry></collision></link>'))
    with pytest.raises(ParseError, match="not found"):
        load_urdf(urdf)


def test_non_stl_mesh_unsupported():
    with pytest.raises(UnsupportedFeatureError, match="STL"):
        parse_urdf(robot('<link name="a"><collision><geometry>'
                         '<mesh filename="x.dae"/></geometry></collision></link>'))


def test_resolve_mesh_path(tmp_path):
    assert resolve_mesh_path("m.stl", tmp_path) == tmp_path / "m.stl"
    assert resolve_mesh_path("package://p/m.stl", tmp_path) == tmp_path / "m.stl"
    assert resolve_mesh_path("package://p/m.stl", tmp_path, {"p": "/opt"}).as_posix() == "/opt/m.stl"
