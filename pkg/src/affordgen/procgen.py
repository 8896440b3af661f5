"""Randomized scene layout, stable object placement, and camera sampling.

Everything draws from explicit random streams, so generation is reproducible
per (config, seed) and embarrassingly parallel across scenes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assets import AssetRepository, build_fixture
from .camera import Camera, look_at
from .errors import GenerationError
from .geometry import Pose, obb_overlap, quat_from_axis_angle, quat_mul, quat_normalize, quat_to_matrix, world_obb
from .raster import FrameBuffers, visible_pixel_counts
from .relations import RelationConfig, RelationTuple, compute_relations
from .scene import SURFACE_LIFT, Fixture, ObjectInstance, Scene, SupportSurface

log = logging.getLogger(__name__)

FLOOR_ARCHETYPE = "floor"


@dataclass
class ArchetypeSpec:
    kind: str
    width: tuple[float, float]
    depth: tuple[float, float]
    height: tuple[float, float]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "width": list(self.width),
            "depth": list(self.depth),
            "height": list(self.height),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ArchetypeSpec":
        return cls(doc["kind"], tuple(doc["width"]), tuple(doc["depth"]), tuple(doc["height"]))


def default_fixture_palette() -> list[ArchetypeSpec]:
    return [
        ArchetypeSpec("table", (0.9, 1.4), (0.6, 0.9), (0.72, 0.78)),
        ArchetypeSpec("counter", (1.2, 1.8), (0.6, 0.7), (0.85, 0.95)),
        ArchetypeSpec("shelf", (0.7, 1.1), (0.3, 0.45), (1.0, 1.4)),
        ArchetypeSpec("fridge", (0.6, 0.8), (0.6, 0.75), (1.4, 1.7)),
        ArchetypeSpec("drawer_unit", (0.5, 0.9), (0.45, 0.6), (0.7, 0.9)),
    ]


@dataclass
class GenConfig:
    seed: int = 0
    n_scenes: int = 10
    objects_per_scene: tuple[int, int] = (4, 8)
    cameras_per_scene: int = 6
    fixture_palette: list[ArchetypeSpec] = field(default_factory=default_fixture_palette)
    min_visible_objects: int = 3
    min_mask_pixels: int = 100
    image_size: tuple[int, int] = (640, 480)
    room_size: tuple[float, float] = (4.0, 4.0)
    fov_deg: float = 60.0
    camera_distance: tuple[float, float] = (0.5, 3.0)
    camera_elevation_deg: tuple[float, float] = (10.0, 75.0)
    fixture_attempts: int = 1000
    placement_attempts: int = 100
    camera_attempts: int = 500
    container_place_prob: float = 0.25

    def __post_init__(self):
        if not self.fixture_palette:
            raise GenerationError("fixture palette is empty")
        lo, hi = self.objects_per_scene
        if lo > hi or lo < 0:
            raise GenerationError("objects_per_scene range is invalid")
        if self.n_scenes <= 0 or self.cameras_per_scene <= 0:
            raise GenerationError("counts must be positive")
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise GenerationError("image size must be positive")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "n_scenes": self.n_scenes,
            "objects_per_scene": list(self.objects_per_scene),
            "cameras_per_scene": self.cameras_per_scene,
            "fixture_palette": [a.to_json() for a in self.fixture_palette],
            "min_visible_objects": self.min_visible_objects,
            "min_mask_pixels": self.min_mask_pixels,
            "image_size": list(self.image_size),
            "room_size": list(self.room_size),
            "fov_deg": self.fov_deg,
            "camera_distance": list(self.camera_distance),
            "camera_elevation_deg": list(self.camera_elevation_deg),
            "fixture_attempts": self.fixture_attempts,
            "placement_attempts": self.placement_attempts,
            "camera_attempts": self.camera_attempts,
            "container_place_prob": self.container_place_prob,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GenConfig":
        doc = dict(doc)
        if "fixture_palette" in doc:
            doc["fixture_palette"] = [ArchetypeSpec.from_json(a) for a in doc["fixture_palette"]]
        for key in ("objects_per_scene", "image_size", "room_size", "camera_distance", "camera_elevation_deg"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


@dataclass
class StablePoseSet:
    """Per-category resting orientations with their rest-height offsets."""

    poses: dict[str, list[tuple[np.ndarray, float]]]

    def __post_init__(self):
        for cat, entries in self.poses.items():
            if not entries:
                raise GenerationError(f"no stable poses for category {cat!r}")

    @classmethod
    def from_repo(cls, repo: AssetRepository) -> "StablePoseSet":
        return cls({a.category: a.stable_poses for a in repo.assets})

    def for_category(self, category: str) -> list[tuple[np.ndarray, float]]:
        return self.poses[category]


# ---------------------------------------------------------------------------
# layout

_WALL_YAWS = (0.0, np.pi / 2, np.pi, -np.pi / 2)  # south, east, north, west


def generate_layout(cfg: GenConfig, rng: np.random.Generator) -> Scene:
    """Room with 2..6 wall-aligned fixtures (at most one per palette archetype)."""
    rx, ry = cfg.room_size
    next_id = 1

    floor_dims = {"w": rx + 0.6, "d": ry + 0.6, "h": 0.0, "t": 0.02}
    floor_mesh, _, _ = build_fixture(FLOOR_ARCHETYPE, floor_dims)
    fixtures = [Fixture(next_id, FLOOR_ARCHETYPE, floor_dims, Pose.identity(), floor_mesh)]
    next_id += 1

    n_fixtures = int(rng.integers(2, 7))
    n_fixtures = max(1, min(n_fixtures, len(cfg.fixture_palette)))
    order = rng.permutation(len(cfg.fixture_palette))[:n_fixtures]

    surfaces: list[SupportSurface] = []
    for pal_idx in order:
        arch = cfg.fixture_palette[int(pal_idx)]
        placed = False
        for _ in range(cfg.fixture_attempts):
            dims = {
                "w": float(rng.uniform(*arch.width)),
                "d": float(rng.uniform(*arch.depth)),
                "h": float(rng.uniform(*arch.height)),
            }
            # discover joints, then sample states within their limits
            _, _, proto_joints = build_fixture(arch.kind, dims)
            states = [float(rng.uniform(*j.limits)) for j in proto_joints]
            mesh, local_surfaces, joints = build_fixture(arch.kind, dims, states)

            wall = int(rng.integers(0, 4))
            yaw = _WALL_YAWS[wall]
            along_max = (rx if wall in (0, 2) else ry) / 2 - dims["w"] / 2 - 0.05
            if along_max <= 0:
                continue
            along = float(rng.uniform(-along_max, along_max))
            back = (ry if wall in (0, 2) else rx) / 2 - dims["d"] / 2 - 0.02
            if wall == 0:
                pos = np.array([along, -back, 0.0])
            elif wall == 1:
                pos = np.array([back, along, 0.0])
            elif wall == 2:
                pos = np.array([-along, back, 0.0])
            else:
                pos = np.array([-back, -along, 0.0])
            pose = Pose(pos, quat_from_axis_angle([0, 0, 1], yaw))
            obb = world_obb(mesh, pose)
            if any(
                obb_overlap(obb, f.obb) for f in fixtures if f.archetype != FLOOR_ARCHETYPE
            ):
                continue
            fixture = Fixture(next_id, arch.kind, dims, pose, mesh, joints, obb)
            next_id += 1
            for boundary_local, height in local_surfaces:
                b3 = np.column_stack([boundary_local, np.zeros(len(boundary_local))])
                world_xy = pose.apply(b3)[:, :2]
                surfaces.append(SupportSurface(next_id, world_xy, height, fixture.id))
                next_id += 1
            fixtures.append(fixture)
            placed = True
            break
        if not placed:
            log.info("layout: skipped %s after %d attempts", arch.kind, cfg.fixture_attempts)

    if not surfaces:
        raise GenerationError("layout failed")
    return Scene(objects=[], surfaces=surfaces, fixtures=fixtures, seed=cfg.seed, room_size=cfg.room_size)


# ---------------------------------------------------------------------------
# object placement


def _sample_point_in_polygon(poly: np.ndarray, rng: np.random.Generator, tries: int = 64):
    from .geometry import points_in_polygon

    lo = poly.min(axis=0)
    hi = poly.max(axis=0)
    for _ in range(tries):
        p = rng.uniform(lo, hi)
        if points_in_polygon(p[None, :], poly)[0]:
            return p
    return None


def place_objects(
    scene: Scene, repo: AssetRepository, cfg: GenConfig, rng: np.random.Generator
) -> Scene:
    """Scatter objects over support surfaces with collision rejection.

    Each object sits at a uniformly sampled surface point in a stable
    orientation plus a random yaw; candidates whose box overlaps anything
    already placed are resampled up to the attempt budget, then skipped.
    """
    if not repo.assets:
        raise GenerationError("asset repository is empty")
    if not scene.surfaces:
        raise GenerationError("scene has no support surfaces")

    pose_set = StablePoseSet.from_repo(repo)
    lo, hi = cfg.objects_per_scene
    count = int(rng.integers(lo, hi + 1))

    new_objects: list[ObjectInstance] = []
    new_surfaces: list[SupportSurface] = []
    next_id = scene.next_id()
    fixture_by_id = {f.id: f for f in scene.fixtures}

    for _ in range(count):
        asset = repo.assets[int(rng.integers(len(repo.assets)))]
        placed = False
        for _ in range(cfg.placement_attempts):
            surf_pool = scene.surfaces + new_surfaces
            areas = np.array([s.area() for s in surf_pool])
            surf = surf_pool[int(rng.choice(len(surf_pool), p=areas / areas.sum()))]
            pt = _sample_point_in_polygon(surf.boundary, rng)
            if pt is None:
                continue
            stable_q, offset = asset.stable_poses[int(rng.integers(len(asset.stable_poses)))]
            yaw = float(rng.uniform(0, 2 * np.pi))
            orientation = quat_normalize(quat_mul(quat_from_axis_angle([0, 0, 1], yaw), stable_q))
            lo_v, hi_v = asset.mesh.aabb()
            center_rot = quat_to_matrix(orientation) @ ((lo_v + hi_v) / 2.0)
            pos = np.array([pt[0] - center_rot[0], pt[1] - center_rot[1], surf.height + offset])
            pose = Pose(pos, orientation)
            obb = world_obb(asset.mesh, pose)

            collision = False
            for other in scene.objects + new_objects:
                if other.id == surf.parent_body:
                    continue
                if obb_overlap(obb, other.obb):
                    collision = True
                    break
            if not collision:
                for f in scene.fixtures:
                    if f.archetype == FLOOR_ARCHETYPE or f.id == surf.parent_body:
                        continue
                    if obb_overlap(obb, f.obb):
                        collision = True
                        break
            # tall objects must not poke out of their parent fixture envelope
            if not collision and surf.parent_body in fixture_by_id:
                parent = fixture_by_id[surf.parent_body]
                if parent.archetype == "shelf" and obb.top() > parent.obb.top() + 1e-6:
                    collision = True
            if collision:
                continue

            obj = ObjectInstance(
                id=next_id,
                category=asset.category,
                asset=asset.name,
                mesh=asset.mesh,
                pose=pose,
                is_container=asset.is_container,
                support_id=surf.id,
            )
            next_id += 1
            new_objects.append(obj)
            if asset.is_container and asset.interior is not None:
                half_x, half_y, floor_z = asset.interior
                corners = np.array(
                    [
                        [-half_x, -half_y, floor_z],
                        [half_x, -half_y, floor_z],
                        [half_x, half_y, floor_z],
                        [-half_x, half_y, floor_z],
                    ]
                )
                world = pose.apply(corners)
                new_surfaces.append(
                    SupportSurface(next_id, world[:, :2], float(world[0, 2]) + SURFACE_LIFT, obj.id)
                )
                next_id += 1
            placed = True
            break
        if not placed:
            log.info("placement: skipped %s after %d attempts", asset.name, cfg.placement_attempts)

    return scene.with_objects(new_objects, new_surfaces)


# ---------------------------------------------------------------------------
# camera sampling


def camera_validity(
    scene: Scene,
    cam: Camera,
    fb: FrameBuffers,
    cfg: GenConfig,
    rel_cfg: RelationConfig,
    cam_id: int = 0,
) -> tuple[bool, set[int], list[RelationTuple]]:
    """Validity filter: enough visible objects plus at least one object-pair
    relation. Returns (ok, visible entity ids, tuples among visible)."""
    counts = visible_pixel_counts(fb)
    vis_objects = {o.id for o in scene.objects if counts.get(o.id, 0) >= cfg.min_mask_pixels}
    if len(vis_objects) < cfg.min_visible_objects:
        return False, set(), []
    vis_surfaces = {s.id for s in scene.surfaces if counts.get(s.id, 0) >= cfg.min_mask_pixels}
    visible = vis_objects | vis_surfaces
    tuples = compute_relations(scene, cam, visible, rel_cfg, cam_id=cam_id)
    has_object_pair = any(all(r in vis_objects for r in t.refs) for t in tuples)
    return has_object_pair, visible, tuples


def sample_cameras(
    scene: Scene,
    buffers_fn: Callable[[Scene, Camera], FrameBuffers],
    cfg: GenConfig,
    rng: np.random.Generator,
    rel_cfg: RelationConfig | None = None,
) -> list[Camera]:
    """Up to cameras_per_scene viewpoints passing the visibility filter.

    Eyes are sampled on a shell around look-at targets biased toward support
    surface centroids; slots that fail every attempt are left unfilled.
    """
    rel_cfg = rel_cfg or RelationConfig()
    if len(scene.objects) < cfg.min_visible_objects:
        return []

    w, h = cfg.image_size
    objects_on = {s.id: 0 for s in scene.surfaces}
    for o in scene.objects:
        if o.support_id in objects_on:
            objects_on[o.support_id] += 1
    weights = np.array([1.0 + 3.0 * objects_on[s.id] for s in scene.surfaces])
    weights = weights / weights.sum()

    cameras: list[Camera] = []
    for slot in range(cfg.cameras_per_scene):
        for _ in range(cfg.camera_attempts):
            surf = scene.surfaces[int(rng.choice(len(scene.surfaces), p=weights))]
            target = surf.centroid() + np.array(
                [rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(0.0, 0.2)]
            )
            dist = float(rng.uniform(*cfg.camera_distance))
            elev = np.radians(float(rng.uniform(*cfg.camera_elevation_deg)))
            azim = float(rng.uniform(0, 2 * np.pi))
            eye = target + dist * np.array(
                [np.cos(elev) * np.cos(azim), np.cos(elev) * np.sin(azim), np.sin(elev)]
            )
            if eye[2] < 0.1:
                continue
            cam = Camera.from_fov(w, h, cfg.fov_deg, look_at(eye, target))
            fb = buffers_fn(scene, cam)
            ok, _, _ = camera_validity(scene, cam, fb, cfg, rel_cfg, cam_id=slot)
            if ok:
                cameras.append(cam)
                break
    return cameras
