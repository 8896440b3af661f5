"""Procedural asset palette, fixture archetypes, and the mesh repository.

Object meshes live in their own frame with the resting face at z = 0 and the
footprint centered on the XY origin. Fixtures are built in a local frame
where +Y faces away from the wall and z = 0 is the floor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, GeometryError
from .geometry import (
    TriMesh,
    concat_meshes,
    load_obj,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    quat_to_matrix,
    save_obj,
)
from .scene import SURFACE_LIFT, Joint

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


# ---------------------------------------------------------------------------
# mesh primitives


def box_mesh(sx: float, sy: float, sz: float, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned box spanning z in [0, sz], centered on XY, offset by center."""
    cx, cy, cz = center
    xs = (cx - sx / 2, cx + sx / 2)
    ys = (cy - sy / 2, cy + sy / 2)
    zs = (cz, cz + sz)
    verts = np.array([(x, y, z) for x in xs for y in ys for z in zs], dtype=float)
    quads = [
        (0, 1, 3, 2),  # x-
        (4, 6, 7, 5),  # x+
        (0, 4, 5, 1),  # y-
        (2, 3, 7, 6),  # y+
        (0, 2, 6, 4),  # z-
        (1, 5, 7, 3),  # z+
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append([a, b, c])
        tris.append([a, c, d])
    return TriMesh(verts, np.array(tris))


def cylinder_mesh(radius: float, height: float, segments: int = 20) -> TriMesh:
    ang = 2 * np.pi * np.arange(segments) / segments
    ring = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    bottom = np.column_stack([ring, np.zeros(segments)])
    top = np.column_stack([ring, np.full(segments, height)])
    verts = np.vstack([bottom, top, [[0, 0, 0]], [[0, 0, height]]])
    cb, ct = 2 * segments, 2 * segments + 1
    tris = []
    for i in range(segments):
        j = (i + 1) % segments
        tris.append([i, j, segments + j])
        tris.append([i, segments + j, segments + i])
        tris.append([cb, j, i])
        tris.append([ct, segments + i, segments + j])
    return TriMesh(verts, np.array(tris))


def sphere_mesh(radius: float, segments: int = 16, rings: int = 10) -> TriMesh:
    """UV sphere resting on z = 0."""
    verts = [np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 2 * radius])]
    for r in range(1, rings):
        phi = np.pi * r / rings
        z = radius * (1 - np.cos(phi))
        rr = radius * np.sin(phi)
        for s in range(segments):
            th = 2 * np.pi * s / segments
            verts.append(np.array([rr * np.cos(th), rr * np.sin(th), z]))
    tris = []

    def vid(r, s):
        return 2 + (r - 1) * segments + (s % segments)

    for s in range(segments):
        tris.append([0, vid(1, s + 1), vid(1, s)])
        tris.append([1, vid(rings - 1, s), vid(rings - 1, s + 1)])
    for r in range(1, rings - 1):
        for s in range(segments):
            a, b = vid(r, s), vid(r, s + 1)
            c, d = vid(r + 1, s), vid(r + 1, s + 1)
            tris.append([a, b, d])
            tris.append([a, d, c])
    return TriMesh(np.array(verts), np.array(tris))


def open_box_mesh(sx: float, sy: float, sz: float, wall: float) -> TriMesh:
    """Open-top container: floor slab plus four walls."""
    parts = [
        box_mesh(sx, sy, wall),  # floor
        box_mesh(wall, sy, sz - wall, center=(-(sx - wall) / 2, 0, wall)),
        box_mesh(wall, sy, sz - wall, center=((sx - wall) / 2, 0, wall)),
        box_mesh(sx - 2 * wall, wall, sz - wall, center=(0, -(sy - wall) / 2, wall)),
        box_mesh(sx - 2 * wall, wall, sz - wall, center=(0, (sy - wall) / 2, wall)),
    ]
    return concat_meshes(parts)


# ---------------------------------------------------------------------------
# stable poses

_FACE_CANDIDATES = [
    # (name, quaternion mapping the face normal to world -Z, face-area axes)
    ("z-", np.array([1.0, 0.0, 0.0, 0.0]), (0, 1)),
    ("z+", quat_from_axis_angle([1, 0, 0], np.pi), (0, 1)),
    ("x+", quat_from_axis_angle([0, 1, 0], np.pi / 2), (1, 2)),
    ("x-", quat_from_axis_angle([0, 1, 0], -np.pi / 2), (1, 2)),
    ("y+", quat_from_axis_angle([1, 0, 0], -np.pi / 2), (0, 2)),
    ("y-", quat_from_axis_angle([1, 0, 0], np.pi / 2), (0, 2)),
]


def compute_stable_poses(
    mesh: TriMesh, dominant_ratio: float = 0.6, upright_only: bool = False
) -> list[tuple[np.ndarray, float]]:
    """Orientations that rest a dominant bounding-box face on the surface.

    Returns (orientation, rest-height offset) pairs; placing the object at
    z = surface_height + offset puts its box bottom exactly on the surface.
    """
    lo, hi = mesh.aabb()
    ext = hi - lo
    corners = np.array([(x, y, z) for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    if upright_only:
        candidates = _FACE_CANDIDATES[:1]
    else:
        candidates = _FACE_CANDIDATES
    areas = [ext[a0] * ext[a1] for _, _, (a0, a1) in candidates]
    max_area = max(areas)
    poses = []
    for (name, q, _), area in zip(candidates, areas):
        if area < dominant_ratio * max_area:
            continue
        rotated = corners @ quat_to_matrix(q).T
        poses.append((quat_normalize(q), float(-rotated[:, 2].min())))
    return poses


# ---------------------------------------------------------------------------
# asset repository


@dataclass
class AssetSpec:
    name: str
    category: str
    mesh: TriMesh
    scale: float = 1.0
    is_container: bool = False
    stable_poses: list = field(default_factory=list)
    # container interior, object frame: (half_x, half_y, floor_z)
    interior: tuple[float, float, float] | None = None

    def __post_init__(self):
        if not self.stable_poses:
            self.stable_poses = compute_stable_poses(self.mesh, upright_only=self.is_container)


@dataclass
class AssetRepository:
    assets: list[AssetSpec]

    def __post_init__(self):
        if not self.assets:
            raise DataError("asset repository is empty")
        self.by_name = {a.name: a for a in self.assets}
        if len(self.by_name) != len(self.assets):
            raise DataError("duplicate asset names in repository")

    def mesh_for(self, name: str) -> TriMesh:
        return self.by_name[name].mesh

    def write_dir(self, path: str | Path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        manifest = {"version": MANIFEST_VERSION, "assets": []}
        for a in self.assets:
            fname = f"{a.name}.obj"
            save_obj(a.mesh, path / fname)
            manifest["assets"].append(
                {
                    "name": a.name,
                    "file": fname,
                    "category": a.category,
                    "scale": a.scale,
                    "is_container": a.is_container,
                    "stable_poses": [
                        {"orientation": q.tolist(), "offset": off} for q, off in a.stable_poses
                    ],
                    "interior": list(a.interior) if a.interior else None,
                }
            )
        with open(path / MANIFEST_NAME, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)

    @classmethod
    def load_dir(cls, path: str | Path) -> "AssetRepository":
        path = Path(path)
        manifest_path = path / MANIFEST_NAME
        if not manifest_path.exists():
            raise DataError(f"no {MANIFEST_NAME} in {path}")
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        if manifest.get("version") != MANIFEST_VERSION:
            raise DataError("unsupported asset manifest version")
        assets = []
        for entry in manifest["assets"]:
            mesh = load_obj(path / entry["file"])
            scale = entry.get("scale", 1.0)
            if scale != 1.0:
                mesh = TriMesh(mesh.vertices * scale, mesh.triangles)
            poses = [
                (np.array(p["orientation"]), p["offset"] * scale)
                for p in entry["stable_poses"]
            ]
            interior = entry.get("interior")
            assets.append(
                AssetSpec(
                    name=entry["name"],
                    category=entry["category"],
                    mesh=mesh,
                    scale=scale,
                    is_container=entry["is_container"],
                    stable_poses=poses,
                    interior=tuple(np.array(interior) * scale) if interior else None,
                )
            )
        return cls(assets)


def default_repository() -> AssetRepository:
    """Built-in tabletop palette used when no asset directory is configured."""
    crate_wall = 0.012
    crate = AssetSpec(
        "crate",
        "crate",
        open_box_mesh(0.32, 0.22, 0.125, crate_wall),
        is_container=True,
        interior=(0.32 / 2 - crate_wall - 0.004, 0.22 / 2 - crate_wall - 0.004, crate_wall),
    )
    specs = [
        AssetSpec("cracker_box", "cracker box", box_mesh(0.16, 0.06, 0.21)),
        AssetSpec("soup_can", "can", cylinder_mesh(0.034, 0.10, 20)),
        AssetSpec("mug", "mug", cylinder_mesh(0.042, 0.097, 20)),
        AssetSpec("plate", "plate", cylinder_mesh(0.11, 0.021, 24)),
        AssetSpec("bowl", "bowl", cylinder_mesh(0.08, 0.053, 24)),
        AssetSpec("bottle", "bottle", cylinder_mesh(0.036, 0.23, 16)),
        AssetSpec("book", "book", box_mesh(0.15, 0.21, 0.032)),
        AssetSpec("apple", "apple", sphere_mesh(0.04, 16, 10)),
        AssetSpec("cup", "cup", cylinder_mesh(0.035, 0.088, 16)),
        AssetSpec("tissue_box", "tissue box", box_mesh(0.24, 0.12, 0.09)),
        crate,
    ]
    return AssetRepository(specs)


# ---------------------------------------------------------------------------
# fixture archetypes

FIXTURE_ARCHETYPES = ("table", "counter", "shelf", "fridge", "drawer_unit", "floor")


def build_fixture(
    archetype: str, dims: dict, joint_states: list[float] | None = None
) -> tuple[TriMesh, list[tuple[np.ndarray, float]], list[Joint]]:
    """Fixture geometry in the local frame.

    Returns (mesh, surfaces, joints) where surfaces are (XY boundary, height)
    pairs already lifted for rendering, and joints carry the given states.
    """
    w, d, h = dims.get("w", 1.0), dims.get("d", 0.6), dims.get("h", 0.75)
    states = list(joint_states or [])
    surfaces: list[tuple[np.ndarray, float]] = []
    joints: list[Joint] = []

    def rect(cx, cy, hx, hy):
        return np.array(
            [[cx - hx, cy - hy], [cx + hx, cy - hy], [cx + hx, cy + hy], [cx - hx, cy + hy]]
        )

    if archetype == "floor":
        mesh = box_mesh(w, d, dims.get("t", 0.02), center=(0, 0, -dims.get("t", 0.02)))
        return mesh, [], []

    if archetype == "table":
        top_t = 0.04
        leg = 0.05
        parts = [box_mesh(w, d, top_t, center=(0, 0, h - top_t))]
        for sx in (-1, 1):
            for sy in (-1, 1):
                parts.append(
                    box_mesh(
                        leg, leg, h - top_t, center=(sx * (w / 2 - leg), sy * (d / 2 - leg), 0)
                    )
                )
        mesh = concat_meshes(parts)
        surfaces.append((rect(0, 0, w / 2, d / 2), h + SURFACE_LIFT))

    elif archetype == "counter":
        mesh = box_mesh(w, d, h)
        surfaces.append((rect(0, 0, w / 2, d / 2), h + SURFACE_LIFT))

    elif archetype == "shelf":
        side_t, board_t = 0.025, 0.03
        levels = [0.35 * h, 0.7 * h, h]
        parts = [
            box_mesh(side_t, d, h, center=(-(w - side_t) / 2, 0, 0)),
            box_mesh(side_t, d, h, center=((w - side_t) / 2, 0, 0)),
            box_mesh(w, board_t, h, center=(0, -(d - board_t) / 2, 0)),  # back
        ]
        inner_hx = w / 2 - side_t
        for z in levels:
            parts.append(box_mesh(2 * inner_hx, d, board_t, center=(0, 0, z - board_t)))
            surfaces.append((rect(0, 0, inner_hx, d / 2), z + SURFACE_LIFT))
        mesh = concat_meshes(parts)

    elif archetype == "fridge":
        door_t = 0.04
        body_d = d - door_t
        parts = [box_mesh(w, body_d, h, center=(0, -door_t / 2, 0))]
        angle = states[0] if states else 0.0
        joints.append(Joint("revolute", np.array([0.0, 0.0, 1.0]), (0.0, 2.0), angle))
        # door panel hinged on its left edge, swinging outward
        hinge = np.array([-w / 2, body_d / 2 - door_t / 2, 0.0])
        door = box_mesh(w, door_t, 0.94 * h, center=(w / 2, 0, 0.02 * h))
        rot = quat_to_matrix(quat_from_axis_angle([0, 0, 1], angle))
        door_verts = door.vertices @ rot.T + hinge
        parts.append(TriMesh(door_verts, door.triangles))
        mesh = concat_meshes(parts)
        surfaces.append((rect(0, -door_t / 2, w / 2, body_d / 2), h + SURFACE_LIFT))

    elif archetype == "drawer_unit":
        face_t = 0.03
        parts = [box_mesh(w, d - face_t, h, center=(0, -face_t / 2, 0))]
        n_drawers = 2
        for k in range(n_drawers):
            pull = states[k] if k < len(states) else 0.0
            joints.append(Joint("prismatic", np.array([0.0, 1.0, 0.0]), (0.0, 0.55 * d), pull))
            z0 = h * (0.12 + 0.44 * k)
            box_h = 0.32 * h
            # drawer front face plus an open tray that slides along +Y
            parts.append(
                box_mesh(w * 0.94, face_t, box_h, center=(0, (d - face_t) / 2 + pull, z0))
            )
            if pull > 0.02:
                tray = open_box_mesh(w * 0.88, min(pull, 0.5 * d), 0.6 * box_h, 0.012)
                tray_y = (d - face_t) / 2 + pull - min(pull, 0.5 * d) / 2 - face_t / 2
                parts.append(TriMesh(tray.vertices + np.array([0, tray_y, z0]), tray.triangles))
        mesh = concat_meshes(parts)
        surfaces.append((rect(0, -face_t / 2, w / 2, (d - face_t) / 2), h + SURFACE_LIFT))

    else:
        raise GeometryError(f"unknown fixture archetype {archetype!r}")

    return mesh, surfaces, joints
