"""Pinhole camera model and projection/deprojection.

Camera frame: +Z forward, +X right in the image, +Y down. Image coordinates
are continuous with the origin at the top-left corner; the center of pixel
(i, j) is (i + 0.5, j + 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .geometry import Pose, quat_from_matrix, quat_to_matrix


@dataclass
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: Pose  # camera-to-world

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise GeometryError("principal point outside image")

    @classmethod
    def from_fov(cls, width: int, height: int, fov_deg: float, pose: Pose) -> "Camera":
        """Square-pixel camera from a vertical field of view."""
        fy = (height / 2.0) / np.tan(np.radians(fov_deg) / 2.0)
        return cls(fy, fy, width / 2.0, height / 2.0, width, height, pose)

    def world_to_cam(self, points) -> np.ndarray:
        return self.pose.inverse_apply(points)

    def cam_to_world(self, points) -> np.ndarray:
        return self.pose.apply(points)

    def to_json(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
            "pose": {
                "position": self.pose.position.tolist(),
                "orientation": self.pose.orientation.tolist(),
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Camera":
        return cls(
            doc["fx"],
            doc["fy"],
            doc["cx"],
            doc["cy"],
            doc["width"],
            doc["height"],
            Pose(np.array(doc["pose"]["position"]), np.array(doc["pose"]["orientation"])),
        )


def look_at(eye, target, world_up=(0.0, 0.0, 1.0)) -> Pose:
    """Camera-to-world pose with +Z toward target and image up against gravity."""
    eye = np.asarray(eye, dtype=float)
    forward = np.asarray(target, dtype=float) - eye
    n = np.linalg.norm(forward)
    if n < 1e-9:
        raise GeometryError("look-at target coincides with eye")
    z = forward / n
    x = np.cross(z, np.asarray(world_up, dtype=float))
    nx = np.linalg.norm(x)
    if nx < 1e-6:
        raise GeometryError("look direction parallel to world up")
    x = x / nx
    y = np.cross(z, x)
    rot = np.column_stack([x, y, z])
    return Pose(eye, quat_from_matrix(rot))


def project(point_world, cam: Camera) -> tuple[float, float, float]:
    """Pinhole projection to (u, v, depth); raises for points behind the camera."""
    p = cam.world_to_cam(np.asarray(point_world, dtype=float))
    if p[2] <= 0:
        raise GeometryError("behind camera")
    u = cam.fx * p[0] / p[2] + cam.cx
    v = cam.fy * p[1] / p[2] + cam.cy
    return float(u), float(v), float(p[2])


def deproject(u: float, v: float, depth: float, cam: Camera) -> np.ndarray:
    """Inverse pinhole then camera-to-world; depth is camera-frame Z in meters."""
    if depth <= 0:
        raise GeometryError("non-positive depth")
    x = (u - cam.cx) / cam.fx * depth
    y = (v - cam.cy) / cam.fy * depth
    return cam.cam_to_world(np.array([x, y, depth]))


def deproject_pixels(ii, jj, depths, cam: Camera) -> np.ndarray:
    """Vectorized deprojection of pixel indices at their centers."""
    ii = np.asarray(ii, dtype=float)
    jj = np.asarray(jj, dtype=float)
    depths = np.asarray(depths, dtype=float)
    x = (ii + 0.5 - cam.cx) / cam.fx * depths
    y = (jj + 0.5 - cam.cy) / cam.fy * depths
    pts_cam = np.column_stack([x, y, depths])
    return pts_cam @ quat_to_matrix(cam.pose.orientation).T + cam.pose.position
