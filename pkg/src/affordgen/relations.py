"""Camera-perspective spatial relation predicates over 3D bounding boxes.

Left/Right/InFront/Behind and the surface part splits follow the camera
frame; Above/Below/On/Inside/NextTo are gravity-grounded in world frame.
Margins are expressed relative to the participants' box extents and are
config constants so generated datasets stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .camera import Camera
from .geometry import Obb, points_in_polygon, quat_to_matrix
from .scene import ObjectInstance, Scene, SupportSurface


class RelationType(Enum):
    Left = "left"
    Right = "right"
    InFront = "in_front"
    Behind = "behind"
    Above = "above"
    Below = "below"
    NextTo = "next_to"
    On = "on"
    Inside = "inside"
    Between = "between"
    OnLeftPart = "on_left_part"
    OnRightPart = "on_right_part"
    OnFrontPart = "on_front_part"
    OnBackPart = "on_back_part"


_RELATION_ORDER = {r: i for i, r in enumerate(RelationType)}

#: relations whose reference slot is a surface half
SURFACE_PART_RELATIONS = (
    RelationType.OnLeftPart,
    RelationType.OnRightPart,
    RelationType.OnFrontPart,
    RelationType.OnBackPart,
)


@dataclass(frozen=True)
class RelationTuple:
    subject: int
    relation: RelationType
    refs: tuple[int, ...]
    camera: int = 0

    def __post_init__(self):
        if self.subject in self.refs:
            raise ValueError("relation subject cannot be its own reference")
        if len(set(self.refs)) != len(self.refs):
            raise ValueError("relation references must be distinct")
        n_expected = 2 if self.relation is RelationType.Between else 1
        if len(self.refs) != n_expected:
            raise ValueError(f"{self.relation.name} takes {n_expected} reference(s)")

    def sort_key(self):
        return (self.subject, _RELATION_ORDER[self.relation], self.refs)


@dataclass
class RelationConfig:
    margin: float = 0.5  # μ, in units of mean extent along the tested axis
    next_to_factor: float = 1.5
    between_factor: float = 1.5
    on_tolerance: float = 0.01  # meters
    surface_thickness: float = 0.01  # synthetic OBB depth for surface refs

    def to_json(self) -> dict:
        return {
            "margin": self.margin,
            "next_to_factor": self.next_to_factor,
            "between_factor": self.between_factor,
            "on_tolerance": self.on_tolerance,
            "surface_thickness": self.surface_thickness,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RelationConfig":
        return cls(**doc)


# ---------------------------------------------------------------------------
# entity view: objects and surfaces share one predicate-facing shape


@dataclass
class EntityView:
    id: int
    obb: Obb
    is_surface: bool
    is_container: bool = False
    polygon: np.ndarray | None = None  # surfaces only, world XY
    height: float | None = None  # surfaces only


#: the synthetic surface box hangs this far below the rendered sheet so that
#: objects resting exactly at surface height clear its top decisively instead
#: of tying at zero gap
SURFACE_BOX_DROP = 1e-6


def surface_obb(surface: SupportSurface, thickness: float) -> Obb:
    """Axis-aligned stand-in box so surfaces can fill any reference slot."""
    b = surface.boundary
    lo = b.min(axis=0)
    hi = b.max(axis=0)
    half_xy = np.maximum((hi - lo) / 2.0, 1e-6)
    top = surface.height - SURFACE_BOX_DROP
    center = np.array([(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, top - thickness / 2.0])
    return Obb(center, np.array([half_xy[0], half_xy[1], thickness / 2.0]), np.array([1.0, 0, 0, 0]))


def entity_view(scene: Scene, entity_id: int, cfg: RelationConfig) -> EntityView:
    for o in scene.objects:
        if o.id == entity_id:
            return EntityView(o.id, o.obb, False, o.is_container)
    for s in scene.surfaces:
        if s.id == entity_id:
            return EntityView(
                s.id, surface_obb(s, cfg.surface_thickness), True, False, s.boundary, s.height
            )
    raise KeyError(entity_id)


# ---------------------------------------------------------------------------
# box measurements


def _horizontal_radius(obb: Obb) -> float:
    """Norm of the box half-extent projected onto the world XY axes."""
    axes = obb.axes()
    rx = np.abs(np.array([1.0, 0, 0]) @ axes) @ obb.half_extents
    ry = np.abs(np.array([0, 1.0, 0]) @ axes) @ obb.half_extents
    return float(np.hypot(rx, ry))


def _vertical_interval(obb: Obb) -> tuple[float, float]:
    corners_z = obb.corners()[:, 2]
    return float(corners_z.min()), float(corners_z.max())


def _top_face_xy(obb: Obb) -> np.ndarray:
    """Top face corners projected to world XY, counterclockwise."""
    axes = obb.axes()
    h = obb.half_extents
    signs = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    pts = [obb.center + axes @ (np.array([sx * h[0], sy * h[1], h[2]])) for sx, sy in signs]
    poly = np.array([p[:2] for p in pts])
    from .geometry import ensure_ccw

    return ensure_ccw(poly)


def _cam_axes(cam: Camera) -> np.ndarray:
    return quat_to_matrix(cam.pose.orientation)  # columns: right, down, forward


# ---------------------------------------------------------------------------
# predicates


def rel_left(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    return _left_right(sub, ref, cam, cfg, left=True)


def rel_right(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    return _left_right(sub, ref, cam, cfg, left=False)


def _left_right(sub, ref, cam, cfg, left: bool) -> bool:
    cs = cam.world_to_cam(sub.obb.center)
    cr = cam.world_to_cam(ref.obb.center)
    # the pair must be comparably placed in depth
    if abs(cs[2] - cr[2]) >= min(cs[2], cr[2]):
        return False
    x_axis = _cam_axes(cam)[:, 0]
    ext = sub.obb.extent_along(x_axis) + ref.obb.extent_along(x_axis)
    dx = cr[0] - cs[0] if left else cs[0] - cr[0]
    return dx > cfg.margin * ext / 2.0


def rel_in_front(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    return _front_behind(sub, ref, cam, cfg, front=True)


def rel_behind(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    return _front_behind(sub, ref, cam, cfg, front=False)


def _front_behind(sub, ref, cam, cfg, front: bool) -> bool:
    zs = cam.world_to_cam(sub.obb.center)[2]
    zr = cam.world_to_cam(ref.obb.center)[2]
    z_axis = _cam_axes(cam)[:, 2]
    ext = sub.obb.extent_along(z_axis) + ref.obb.extent_along(z_axis)
    gap = zr - zs if front else zs - zr
    return gap > cfg.margin * ext / 2.0


def rel_above(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    s_bottom, _ = _vertical_interval(sub.obb)
    _, r_top = _vertical_interval(ref.obb)
    if s_bottom - r_top < 0:
        return False
    return _horizontal_close(sub, ref)


def rel_below(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    _, s_top = _vertical_interval(sub.obb)
    r_bottom, _ = _vertical_interval(ref.obb)
    if r_bottom - s_top < 0:
        return False
    return _horizontal_close(sub, ref)


def _horizontal_close(sub: EntityView, ref: EntityView) -> bool:
    offset = float(np.linalg.norm(sub.obb.center[:2] - ref.obb.center[:2]))
    return offset < _horizontal_radius(sub.obb) + _horizontal_radius(ref.obb)


def rel_next_to(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    dist = float(np.linalg.norm(sub.obb.center[:2] - ref.obb.center[:2]))
    if dist >= cfg.next_to_factor * (_horizontal_radius(sub.obb) + _horizontal_radius(ref.obb)):
        return False
    s_bottom, s_top = _vertical_interval(sub.obb)
    r_bottom, r_top = _vertical_interval(ref.obb)
    return min(s_top, r_top) - max(s_bottom, r_bottom) > 0


def rel_on(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    s_bottom, _ = _vertical_interval(sub.obb)
    center_xy = sub.obb.center[:2]
    if ref.is_surface:
        if abs(s_bottom - ref.height) > cfg.on_tolerance:
            return False
        return bool(points_in_polygon(center_xy[None, :], ref.polygon)[0])
    _, r_top = _vertical_interval(ref.obb)
    if abs(s_bottom - r_top) > cfg.on_tolerance:
        return False
    return bool(points_in_polygon(center_xy[None, :], _top_face_xy(ref.obb))[0])


def rel_inside(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    if not ref.is_container:
        return False
    if not bool(ref.obb.contains_points(sub.obb.center[None, :])[0]):
        return False
    _, s_top = _vertical_interval(sub.obb)
    _, r_top = _vertical_interval(ref.obb)
    return s_top < r_top


def rel_between(sub: EntityView, ref_a: EntityView, ref_b: EntityView, cam: Camera, cfg: RelationConfig) -> bool:
    # camera-frame horizontal plane: (right, forward) components
    def hproj(p):
        c = cam.world_to_cam(p)
        return np.array([c[0], c[2]])

    ps, pa, pb = hproj(sub.obb.center), hproj(ref_a.obb.center), hproj(ref_b.obb.center)
    seg = pb - pa
    L2 = float(seg @ seg)
    if L2 < 1e-18:
        return False
    t = float((ps - pa) @ seg) / L2
    if not (0.0 < t < 1.0):
        return False
    dist = float(np.linalg.norm(ps - (pa + t * seg)))
    return dist < cfg.between_factor * float(np.linalg.norm(sub.obb.half_extents))


def _surface_part(sub: EntityView, ref: EntityView, cam: Camera, cfg: RelationConfig, axis: int, lower: bool) -> bool:
    """Half-plane split of a surface in camera coordinates.

    axis 0 = camera X (left/right), axis 2 = camera Z (front/back); the median
    line is the midpoint of the polygon's projected coordinate range, and the
    split is median-exclusive on both sides.
    """
    if not ref.is_surface:
        return False
    if not rel_on(sub, ref, cam, cfg):
        return False
    poly3 = np.column_stack([ref.polygon, np.full(len(ref.polygon), ref.height)])
    proj = cam.world_to_cam(poly3)[:, axis]
    median = (proj.min() + proj.max()) / 2.0
    c = cam.world_to_cam(sub.obb.center)[axis]
    return c < median if lower else c > median


def rel_on_left_part(sub, ref, cam, cfg) -> bool:
    return _surface_part(sub, ref, cam, cfg, axis=0, lower=True)


def rel_on_right_part(sub, ref, cam, cfg) -> bool:
    return _surface_part(sub, ref, cam, cfg, axis=0, lower=False)


def rel_on_front_part(sub, ref, cam, cfg) -> bool:
    return _surface_part(sub, ref, cam, cfg, axis=2, lower=True)


def rel_on_back_part(sub, ref, cam, cfg) -> bool:
    return _surface_part(sub, ref, cam, cfg, axis=2, lower=False)


_SINGLE_REF_PREDICATES = {
    RelationType.Left: rel_left,
    RelationType.Right: rel_right,
    RelationType.InFront: rel_in_front,
    RelationType.Behind: rel_behind,
    RelationType.Above: rel_above,
    RelationType.Below: rel_below,
    RelationType.NextTo: rel_next_to,
    RelationType.On: rel_on,
    RelationType.Inside: rel_inside,
    RelationType.OnLeftPart: rel_on_left_part,
    RelationType.OnRightPart: rel_on_right_part,
    RelationType.OnFrontPart: rel_on_front_part,
    RelationType.OnBackPart: rel_on_back_part,
}


def relation_holds(
    relation: RelationType,
    scene: Scene,
    subject_id: int,
    ref_ids: tuple[int, ...],
    cam: Camera,
    cfg: RelationConfig | None = None,
) -> bool:
    """Evaluate one predicate from raw scene geometry. Total: never raises for
    valid entity ids."""
    cfg = cfg or RelationConfig()
    sub = entity_view(scene, subject_id, cfg)
    refs = [entity_view(scene, rid, cfg) for rid in ref_ids]
    if relation is RelationType.Between:
        return rel_between(sub, refs[0], refs[1], cam, cfg)
    return _SINGLE_REF_PREDICATES[relation](sub, refs[0], cam, cfg)


def compute_relations(
    scene: Scene,
    cam: Camera,
    visible: set[int],
    cfg: RelationConfig | None = None,
    cam_id: int = 0,
) -> list[RelationTuple]:
    """All relation tuples that hold among the visible entities.

    Subjects are always objects; references may be objects or surfaces
    (Between references are object pairs). Output is deduplicated and sorted
    by (subject id, relation, ref ids).
    """
    cfg = cfg or RelationConfig()
    objs = sorted((o for o in scene.objects if o.id in visible), key=lambda o: o.id)
    surfs = sorted((s for s in scene.surfaces if s.id in visible), key=lambda s: s.id)
    views = {o.id: entity_view(scene, o.id, cfg) for o in objs}
    views.update({s.id: entity_view(scene, s.id, cfg) for s in surfs})

    out: list[RelationTuple] = []
    for s in objs:
        sub = views[s.id]
        for r in objs:
            if r.id == s.id:
                continue
            ref = views[r.id]
            for rel in (
                RelationType.Left,
                RelationType.Right,
                RelationType.InFront,
                RelationType.Behind,
                RelationType.Above,
                RelationType.Below,
                RelationType.NextTo,
                RelationType.On,
                RelationType.Inside,
            ):
                if _SINGLE_REF_PREDICATES[rel](sub, ref, cam, cfg):
                    out.append(RelationTuple(s.id, rel, (r.id,), cam_id))
        for surf in surfs:
            ref = views[surf.id]
            for rel in (
                RelationType.Left,
                RelationType.Right,
                RelationType.InFront,
                RelationType.Behind,
                RelationType.Above,
                RelationType.Below,
                RelationType.NextTo,
                RelationType.On,
                RelationType.OnLeftPart,
                RelationType.OnRightPart,
                RelationType.OnFrontPart,
                RelationType.OnBackPart,
            ):
                if _SINGLE_REF_PREDICATES[rel](sub, ref, cam, cfg):
                    out.append(RelationTuple(s.id, rel, (surf.id,), cam_id))
        for ia in range(len(objs)):
            for ib in range(ia + 1, len(objs)):
                a, b = objs[ia], objs[ib]
                if s.id in (a.id, b.id):
                    continue
                if rel_between(sub, views[a.id], views[b.id], cam, cfg):
                    out.append(RelationTuple(s.id, RelationType.Between, (a.id, b.id), cam_id))

    uniq = {(t.subject, t.relation, t.refs): t for t in out}
    return sorted(uniq.values(), key=lambda t: t.sort_key())
