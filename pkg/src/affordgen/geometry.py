"""Geometry primitives: poses, triangle meshes, oriented boxes, footprints.

Conventions: lengths in meters, world up is +Z, quaternions are (w, x, y, z)
and unit-norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from shapely.geometry import MultiPoint, Polygon as _ShapelyPolygon
from shapely.geometry.polygon import orient as _shapely_orient

from .errors import GeometryError

_QUAT_NORM_TOL = 1e-9
IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# quaternions


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise GeometryError("zero-norm quaternion")
    return q / n


def quat_mul(a, b) -> np.ndarray:
    """Hamilton product a*b, both (w, x, y, z)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-12:
        raise GeometryError("zero-length rotation axis")
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis / n])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m) -> np.ndarray:
    """Shepperd's method; returns a unit quaternion with w >= 0."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_rotate(q, points) -> np.ndarray:
    """Rotate one point or an (N, 3) array of points."""
    return np.asarray(points, dtype=float) @ quat_to_matrix(q).T


# ---------------------------------------------------------------------------
# pose


@dataclass
class Pose:
    """Rigid transform: rotate by `orientation`, then translate by `position`."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.orientation = np.asarray(self.orientation, dtype=float).reshape(4)
        if abs(np.linalg.norm(self.orientation) - 1.0) > _QUAT_NORM_TOL:
            raise GeometryError("orientation quaternion is not unit-norm")

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), IDENTITY_QUAT.copy())

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.orientation)
        m[:3, 3] = self.position
        return m

    def apply(self, points) -> np.ndarray:
        return quat_rotate(self.orientation, points) + self.position

    def inverse_apply(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.position) @ quat_to_matrix(
            self.orientation
        )

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other (apply `other` first)."""
        return Pose(
            self.apply(other.position),
            quat_normalize(quat_mul(self.orientation, other.orientation)),
        )


# ---------------------------------------------------------------------------
# triangle mesh

_DEGENERATE_AREA = 1e-12


@dataclass
class TriMesh:
    vertices: np.ndarray  # (N, 3) float
    triangles: np.ndarray  # (M, 3) int

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(self.vertices) == 0 or len(self.triangles) == 0:
            raise GeometryError("degenerate geometry")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise GeometryError("triangle index out of range")

    @classmethod
    def cleaned(cls, vertices, triangles) -> "TriMesh":
        """Construct after dropping zero-area triangles."""
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if len(vertices) == 0 or len(triangles) == 0:
            raise GeometryError("degenerate geometry")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise GeometryError("triangle index out of range")
        a = vertices[triangles[:, 0]]
        b = vertices[triangles[:, 1]]
        c = vertices[triangles[:, 2]]
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        keep = areas > _DEGENERATE_AREA
        return cls(vertices, triangles[keep])

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed_vertices(self, pose: Pose) -> np.ndarray:
        return pose.apply(self.vertices)

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def concat_meshes(meshes: list[TriMesh]) -> TriMesh:
    verts, tris, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        offset += len(m.vertices)
    return TriMesh(np.vstack(verts), np.vstack(tris))


def load_obj(path: str | Path) -> TriMesh:
    """Load an ASCII OBJ (v/f records only, polygon faces fan-triangulated)."""
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(tok.split("/")[0]) - 1 for tok in parts[1:]]
                for k in range(1, len(idx) - 1):
                    tris.append([idx[0], idx[k], idx[k + 1]])
    if not verts or not tris:
        raise GeometryError("degenerate geometry")
    return TriMesh.cleaned(np.array(verts), np.array(tris))


def save_obj(mesh: TriMesh, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


# ---------------------------------------------------------------------------
# oriented bounding box


@dataclass
class Obb:
    center: np.ndarray
    half_extents: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)
        self.orientation = np.asarray(self.orientation, dtype=float).reshape(4)
        if np.any(self.half_extents <= 0):
            raise GeometryError("OBB half-extents must be positive")
        if abs(np.linalg.norm(self.orientation) - 1.0) > _QUAT_NORM_TOL:
            raise GeometryError("OBB orientation quaternion is not unit-norm")

    def axes(self) -> np.ndarray:
        """Columns are the box's local axes in world frame."""
        return quat_to_matrix(self.orientation)

    def corners(self) -> np.ndarray:
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float
        )
        return self.center + (signs * self.half_extents) @ self.axes().T

    def bottom(self) -> float:
        return float(self.corners()[:, 2].min())

    def top(self) -> float:
        return float(self.corners()[:, 2].max())

    def extent_along(self, axis) -> float:
        """Full extent of the box projected onto a unit axis."""
        return 2.0 * float(np.abs(np.asarray(axis, dtype=float) @ self.axes()) @ self.half_extents)

    def contains_points(self, points, tol: float = 0.0) -> np.ndarray:
        local = (np.atleast_2d(points) - self.center) @ self.axes()
        return np.all(np.abs(local) <= self.half_extents + tol, axis=1)


def world_obb(mesh: TriMesh, pose: Pose) -> Obb:
    """Tightest object-frame axis-aligned box, re-expressed in world frame."""
    if len(mesh.vertices) == 0:
        raise GeometryError("degenerate geometry")
    lo, hi = mesh.aabb()
    half = np.maximum((hi - lo) / 2.0, 1e-9)
    center = pose.apply((hi + lo) / 2.0)
    return Obb(center, half, pose.orientation.copy())


def obb_overlap(a: Obb, b: Obb) -> bool:
    """Separating-axis test over the 15 candidate axes (face normals + edge crosses)."""
    axes_a = a.axes()
    axes_b = b.axes()
    t = b.center - a.center
    candidates = [axes_a[:, i] for i in range(3)] + [axes_b[:, i] for i in range(3)]
    for i in range(3):
        for j in range(3):
            c = np.cross(axes_a[:, i], axes_b[:, j])
            if c @ c > 1e-12:
                candidates.append(c)
    for axis in candidates:
        axis = axis / np.linalg.norm(axis)
        ra = np.abs(axis @ axes_a) @ a.half_extents
        rb = np.abs(axis @ axes_b) @ b.half_extents
        if abs(axis @ t) > ra + rb:
            return False
    return True


# ---------------------------------------------------------------------------
# planar polygons (world XY plane)


def polygon_area(poly) -> float:
    """Signed shoelace area; positive for counterclockwise vertex order."""
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def ensure_ccw(poly) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    return p if polygon_area(p) >= 0 else p[::-1].copy()


def points_in_polygon(points, poly, tol: float = 1e-9) -> np.ndarray:
    """Membership test for a convex CCW polygon; boundary counts as inside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    p = np.asarray(poly, dtype=float)
    inside = np.ones(len(pts), dtype=bool)
    for i in range(len(p)):
        a, b = p[i], p[(i + 1) % len(p)]
        edge = b - a
        rel = pts - a
        cross = edge[0] * rel[:, 1] - edge[1] * rel[:, 0]
        inside &= cross >= -tol
    return inside


def convex_hull_xy(points) -> np.ndarray:
    """Convex hull of 2D points, CCW without repeated closing vertex."""
    hull = MultiPoint([tuple(p) for p in np.asarray(points, dtype=float)]).convex_hull
    if hull.geom_type != "Polygon":
        raise GeometryError("degenerate geometry")
    hull = _shapely_orient(hull, sign=1.0)
    coords = np.array(hull.exterior.coords[:-1], dtype=float)
    return coords


def clip_polygon(subject, boundary) -> np.ndarray | None:
    """Intersection of two simple polygons; None when empty/degenerate."""
    a = _ShapelyPolygon([tuple(p) for p in np.asarray(subject, dtype=float)])
    b = _ShapelyPolygon([tuple(p) for p in np.asarray(boundary, dtype=float)])
    inter = a.intersection(b)
    if inter.is_empty or inter.geom_type != "Polygon" or inter.area <= 0:
        return None
    inter = _shapely_orient(inter, sign=1.0)
    return np.array(inter.exterior.coords[:-1], dtype=float)
