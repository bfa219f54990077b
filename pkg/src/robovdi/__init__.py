"""Virtual depth images of a robot and occlusion detection against real depth frames."""

__version__ = "0.1.0"

from .camera import CameraModel, deproject, load_camera, project
from .depth import DepthImage, read_depth, write_depth
from .handlers import PolicyConfig, Status, TrackState, cv_update, hold_update
from .kinematics import JointState, forward_kinematics, posed_meshes
from .mesh import TriangleMesh, parse_stl, write_stl
from .occlusion import (
    Label, OcclusionConfig, OcclusionMask, classify_pixel, occlusion_mask, overlay,
    region_occlusion_fraction, safe_deproject,
)
from .raster import render_frame, render_vdi
from .transforms import RigidTransform
from .urdf import Joint, Link, RobotModel, load_urdf, parse_urdf

__all__ = [
    "CameraModel", "DepthImage", "Joint", "JointState", "Label", "Link", "OcclusionConfig",
    "OcclusionMask", "PolicyConfig", "RigidTransform", "RobotModel", "Status", "TrackState",
    "TriangleMesh", "classify_pixel", "cv_update", "deproject", "forward_kinematics",
    "hold_update", "load_camera", "load_urdf", "occlusion_mask", "overlay", "parse_stl",
    "parse_urdf", "posed_meshes", "project", "read_depth", "region_occlusion_fraction",
    "render_frame", "render_vdi", "safe_deproject", "write_depth", "write_stl",
]
