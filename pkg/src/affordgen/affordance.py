"""Ground-truth affordance labels: point sampling, free-space masks, and
visual prompt drawing.

Label soundness contract: every emitted point's pre-rounding pixel is a
member of its mask, and the 2-decimal rounded value maps back into the mask
as well, so self-evaluation of generated answers always scores 100%.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import Camera, deproject_pixels
from .errors import LabelError
from .geometry import points_in_polygon
from .points import MAX_POINTS, PointSet
from .raster import FrameBuffers, Mask, instance_mask, rasterize
from .relations import RelationTuple
from .scene import Scene, footprint

PROMPT_COLORS = {"red": (255, 0, 0), "green": (0, 255, 0)}
PROMPT_ORDER = ("red", "green")  # first reference red, second green
DEFAULT_STROKE = 2


@dataclass
class VisualPrompt:
    bbox: tuple[int, int, int, int]  # inclusive pixel rect (x0, y0, x1, y1)
    color: str
    stroke: int = DEFAULT_STROKE

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if x1 < x0 or y1 < y0:
            raise LabelError("degenerate prompt bbox")
        if self.color not in PROMPT_COLORS:
            raise LabelError(f"unknown prompt color {self.color!r}")


@dataclass
class InstructionSample:
    image: str
    query: str
    answer: str
    kind: str  # object_ref | space_ref | vqa | detection
    id: str | None = None
    annotations: dict | None = None

    def to_json(self) -> dict:
        doc = {
            "id": self.id,
            "image": self.image,
            "query": self.query,
            "answer": self.answer,
            "kind": self.kind,
        }
        if self.annotations is not None:
            doc["annotations"] = self.annotations
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "InstructionSample":
        return cls(
            image=doc["image"],
            query=doc["query"],
            answer=doc["answer"],
            kind=doc["kind"],
            id=doc.get("id"),
            annotations=doc.get("annotations"),
        )


def sample_points_in_mask(mask: Mask, n: int, rng: np.random.Generator) -> PointSet:
    """Uniformly sample n mask pixels as normalized points.

    Sampling is restricted to pixels whose rounded (2-decimal) coordinates
    still map back inside the mask, keeping rounded answers sound. Without
    replacement when enough such pixels exist, else with replacement.
    """
    if not (1 <= n <= MAX_POINTS):
        raise ValueError(f"point count {n} outside [1, {MAX_POINTS}]")
    rows, cols = mask.indices()
    if len(rows) == 0:
        raise LabelError("unreferencable target")
    w, h = mask.width, mask.height
    xs = (cols + 0.5) / w
    ys = (rows + 0.5) / h
    # pixel the rounded text value resolves to on the evaluation side
    rx = np.floor(np.floor(xs * 100.0 + 0.5) / 100.0 * (w - 1) + 0.5).astype(int)
    ry = np.floor(np.floor(ys * 100.0 + 0.5) / 100.0 * (h - 1) + 0.5).astype(int)
    ok = mask.pixels[ry, rx]
    idx = np.flatnonzero(ok)
    if len(idx) == 0:
        raise LabelError("unreferencable target")
    chosen = rng.choice(idx, size=n, replace=len(idx) < n)
    raw = [(float(xs[k]), float(ys[k])) for k in chosen]
    return PointSet.from_raw(raw)


def free_space_mask(scene: Scene, target_id: int, cam: Camera, buffers_fn=None) -> Mask:
    """Vacant-region mask left behind by removing the target object.

    The scene minus the target is re-rendered; member pixels are those owned
    by the target's support surface whose 3D location falls inside the
    target's footprint on that surface.
    """
    reduced = scene.without_object(target_id)
    fb = (buffers_fn or rasterize)(reduced, cam)
    return free_space_from_rerender(scene, target_id, cam, fb)


def free_space_from_rerender(
    scene: Scene, target_id: int, cam: Camera, fb_removed: FrameBuffers
) -> Mask:
    obj = scene.object_by_id(target_id)
    if obj.support_id is None:
        raise LabelError("target does not rest on a recorded support surface")
    surface = scene.surface_by_id(obj.support_id)
    region = footprint(obj, surface)

    pixels = fb_removed.instance_map == surface.id
    rows, cols = np.nonzero(pixels)
    if len(rows) == 0:
        raise LabelError("free region invisible")
    depths = fb_removed.depth_map[rows, cols]
    world = deproject_pixels(cols, rows, depths, cam)
    inside = points_in_polygon(world[:, :2], region)
    out = np.zeros_like(pixels)
    out[rows[inside], cols[inside]] = True
    if not out.any():
        raise LabelError("free region invisible")
    return Mask(out)


def relation_target_mask(
    scene: Scene,
    tup: RelationTuple,
    cam: Camera,
    fb: FrameBuffers,
    kind: str,
    fb_removed: FrameBuffers | None = None,
) -> Mask:
    """Ground-truth mask for one sample.

    object_ref uses the subject's instance mask from the rendered buffers;
    space_ref uses the free-space mask computed from the re-render with the
    subject removed (supplied or computed on the fly).
    """
    if kind == "object_ref":
        m = instance_mask(fb, tup.subject)
        if m.is_empty():
            raise LabelError("unreferencable target")
        return m
    if kind == "space_ref":
        if fb_removed is None:
            return free_space_mask(scene, tup.subject, cam)
        return free_space_from_rerender(scene, tup.subject, cam, fb_removed)
    raise ValueError(f"no target mask for kind {kind!r}")


def prompt_pixels(prompts: list[VisualPrompt], width: int, height: int) -> np.ndarray:
    """Boolean map of all stroke pixels the prompts would draw."""
    band = np.zeros((height, width), dtype=bool)
    for p in prompts:
        x0, y0, x1, y1 = p.bbox
        for k in range(1, p.stroke + 1):
            ex0, ey0, ex1, ey1 = x0 - k, y0 - k, x1 + k, y1 + k
            cx0, cx1 = max(0, ex0), min(width - 1, ex1)
            cy0, cy1 = max(0, ey0), min(height - 1, ey1)
            if cx0 > cx1 or cy0 > cy1:
                continue
            if 0 <= ey0 < height:
                band[ey0, cx0 : cx1 + 1] = True
            if 0 <= ey1 < height:
                band[ey1, cx0 : cx1 + 1] = True
            if 0 <= ex0 < width:
                band[cy0 : cy1 + 1, ex0] = True
            if 0 <= ex1 < width:
                band[cy0 : cy1 + 1, ex1] = True
    return band


def draw_prompt(rgb: np.ndarray, prompts: list[VisualPrompt]) -> np.ndarray:
    """Rectangle markers around referenced entities; source pixels elsewhere
    are untouched. At most two prompts (red then green)."""
    if len(prompts) > 2:
        raise LabelError("at most two visual prompts per sample")
    out = rgb.copy()
    h, w = rgb.shape[:2]
    for p in prompts:
        band = prompt_pixels([p], w, h)
        out[band] = PROMPT_COLORS[p.color]
    return out


def prompts_for_refs(ref_ids: list[int], fb: FrameBuffers, stroke: int = DEFAULT_STROKE) -> list[VisualPrompt]:
    """Mask-bbox prompts for the referenced entities, red then green."""
    if len(ref_ids) > 2:
        raise LabelError("at most two references can be prompted")
    prompts = []
    for color, rid in zip(PROMPT_ORDER, ref_ids):
        m = instance_mask(fb, rid)
        if m.is_empty():
            raise LabelError("reference entity has no visible pixels")
        prompts.append(VisualPrompt(m.bbox(), color, stroke))
    return prompts
