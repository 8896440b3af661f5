"""Scene representation: posed objects, support surfaces, articulated fixtures.

Instances are treated as immutable after construction so scenes can be shared
read-only across parallel workers; operations that "add" to a scene return a
new one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .geometry import (
    Obb,
    Pose,
    TriMesh,
    clip_polygon,
    convex_hull_xy,
    ensure_ccw,
    polygon_area,
    world_obb,
)

SCENE_SCHEMA_VERSION = 1

#: support surfaces float this far above the solid face beneath them so the
#: z-buffer resolves them deterministically
SURFACE_LIFT = 1e-3


@dataclass
class ObjectInstance:
    id: int
    category: str
    asset: str  # repository mesh name
    mesh: TriMesh
    pose: Pose
    obb: Obb = None
    is_container: bool = False
    support_id: int | None = None  # SupportSurface the object rests on

    def __post_init__(self):
        if self.obb is None:
            self.obb = world_obb(self.mesh, self.pose)

    def world_vertices(self) -> np.ndarray:
        return self.mesh.transformed_vertices(self.pose)


@dataclass
class SupportSurface:
    id: int
    boundary: np.ndarray  # (K, 2) world-frame XY, counterclockwise
    height: float
    parent_body: int
    up_normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        self.boundary = ensure_ccw(np.asarray(self.boundary, dtype=float).reshape(-1, 2))
        self.up_normal = np.asarray(self.up_normal, dtype=float).reshape(3)
        if polygon_area(self.boundary) <= 0:
            raise GeometryError("support surface polygon has no area")

    def area(self) -> float:
        return polygon_area(self.boundary)

    def centroid(self) -> np.ndarray:
        b = self.boundary
        return np.array([b[:, 0].mean(), b[:, 1].mean(), self.height])

    def mesh(self) -> TriMesh:
        """Thin fan-triangulated sheet at the surface height (for rendering)."""
        b = self.boundary
        verts = np.column_stack([b, np.full(len(b), self.height)])
        tris = [[0, k, k + 1] for k in range(1, len(b) - 1)]
        return TriMesh(verts, np.array(tris))


@dataclass
class Joint:
    kind: str  # "revolute" | "prismatic"
    axis: np.ndarray  # fixture-local unit vector
    limits: tuple[float, float]
    state: float

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float).reshape(3)
        lo, hi = self.limits
        if not (lo <= self.state <= hi):
            raise GeometryError("joint state outside limits")
        if self.kind not in ("revolute", "prismatic"):
            raise GeometryError(f"unknown joint kind {self.kind!r}")


@dataclass
class Fixture:
    """Static furniture body; mesh is posed with joints already applied."""

    id: int
    archetype: str
    dims: dict
    pose: Pose
    mesh: TriMesh
    joints: list[Joint] = field(default_factory=list)
    obb: Obb = None

    def __post_init__(self):
        if self.obb is None:
            self.obb = world_obb(self.mesh, self.pose)


@dataclass
class Scene:
    objects: list[ObjectInstance]
    surfaces: list[SupportSurface]
    fixtures: list[Fixture]
    seed: int
    room_size: tuple[float, float] = (4.0, 4.0)

    def __post_init__(self):
        ids = [o.id for o in self.objects] + [s.id for s in self.surfaces] + [
            f.id for f in self.fixtures
        ]
        if len(ids) != len(set(ids)):
            raise GeometryError("scene entity ids are not unique")

    @property
    def joints(self) -> list[Joint]:
        return [j for f in self.fixtures for j in f.joints]

    def object_by_id(self, oid: int) -> ObjectInstance:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    def surface_by_id(self, sid: int) -> SupportSurface:
        for s in self.surfaces:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def next_id(self) -> int:
        ids = [o.id for o in self.objects] + [s.id for s in self.surfaces] + [
            f.id for f in self.fixtures
        ]
        return max(ids, default=0) + 1

    def without_object(self, oid: int) -> "Scene":
        """Scene minus one object (and any surfaces it carries)."""
        return Scene(
            objects=[o for o in self.objects if o.id != oid],
            surfaces=[s for s in self.surfaces if s.parent_body != oid],
            fixtures=self.fixtures,
            seed=self.seed,
            room_size=self.room_size,
        )

    def with_objects(self, objects: list[ObjectInstance], surfaces: list[SupportSurface]) -> "Scene":
        return Scene(
            objects=self.objects + objects,
            surfaces=self.surfaces + surfaces,
            fixtures=self.fixtures,
            seed=self.seed,
            room_size=self.room_size,
        )


def footprint(obj: ObjectInstance, surface: SupportSurface) -> np.ndarray:
    """Object's resting region on a surface.

    Convex hull of the posed mesh vertices projected along the surface up
    direction (world +Z), clipped to the surface boundary. Returns a CCW
    (K, 2) polygon in world XY.
    """
    if not np.allclose(surface.up_normal, [0.0, 0.0, 1.0], atol=1e-9):
        raise GeometryError("support surfaces must face world +Z")
    hull = convex_hull_xy(obj.world_vertices()[:, :2])
    clipped = clip_polygon(hull, surface.boundary)
    if clipped is None:
        raise GeometryError("object not over surface")
    return clipped


# ---------------------------------------------------------------------------
# serialization (versioned JSON; meshes are rebuilt from the asset repository
# and fixture archetype parameters rather than embedded)


def _pose_to_json(pose: Pose) -> dict:
    return {"position": pose.position.tolist(), "orientation": pose.orientation.tolist()}


def _pose_from_json(doc: dict) -> Pose:
    return Pose(np.array(doc["position"]), np.array(doc["orientation"]))


def scene_to_json(scene: Scene) -> dict:
    return {
        "version": SCENE_SCHEMA_VERSION,
        "seed": scene.seed,
        "room_size": list(scene.room_size),
        "fixtures": [
            {
                "id": f.id,
                "archetype": f.archetype,
                "dims": f.dims,
                "pose": _pose_to_json(f.pose),
                "joints": [
                    {
                        "kind": j.kind,
                        "axis": j.axis.tolist(),
                        "limits": list(j.limits),
                        "state": j.state,
                    }
                    for j in f.joints
                ],
            }
            for f in scene.fixtures
        ],
        "surfaces": [
            {
                "id": s.id,
                "boundary": s.boundary.tolist(),
                "height": s.height,
                "parent_body": s.parent_body,
                "up_normal": s.up_normal.tolist(),
            }
            for s in scene.surfaces
        ],
        "objects": [
            {
                "id": o.id,
                "category": o.category,
                "asset": o.asset,
                "pose": _pose_to_json(o.pose),
                "is_container": o.is_container,
                "support_id": o.support_id,
            }
            for o in scene.objects
        ],
    }


def scene_from_json(doc: dict, mesh_for_asset, build_fixture_mesh) -> Scene:
    """Rebuild a scene from its JSON document.

    mesh_for_asset(asset_name) -> TriMesh resolves object geometry;
    build_fixture_mesh(archetype, dims, joint_states) -> TriMesh rebuilds
    fixture geometry in the fixture frame.
    """
    if doc.get("version") != SCENE_SCHEMA_VERSION:
        raise GeometryError(f"unsupported scene schema version {doc.get('version')!r}")
    fixtures = []
    for fd in doc["fixtures"]:
        joints = [
            Joint(jd["kind"], np.array(jd["axis"]), tuple(jd["limits"]), jd["state"])
            for jd in fd["joints"]
        ]
        mesh = build_fixture_mesh(fd["archetype"], fd["dims"], [j.state for j in joints])
        fixtures.append(
            Fixture(fd["id"], fd["archetype"], fd["dims"], _pose_from_json(fd["pose"]), mesh, joints)
        )
    surfaces = [
        SupportSurface(
            sd["id"], np.array(sd["boundary"]), sd["height"], sd["parent_body"], np.array(sd["up_normal"])
        )
        for sd in doc["surfaces"]
    ]
    objects = [
        ObjectInstance(
            id=od["id"],
            category=od["category"],
            asset=od["asset"],
            mesh=mesh_for_asset(od["asset"]),
            pose=_pose_from_json(od["pose"]),
            is_container=od["is_container"],
            support_id=od["support_id"],
        )
        for od in doc["objects"]
    ]
    return Scene(
        objects=objects,
        surfaces=surfaces,
        fixtures=fixtures,
        seed=doc["seed"],
        room_size=tuple(doc["room_size"]),
    )
