"""Software z-buffer rasterizer producing instance-id, depth, and flat-shaded
color buffers.

Coverage is sampled at pixel centers with no anti-aliasing so instance masks
stay crisp. Depth is interpolated perspective-correctly (1/z is affine in
screen space), which keeps every rasterized depth on its triangle's plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .camera import Camera, deproject
from .errors import GeometryError
from .scene import Scene

Z_NEAR = 0.02

BACKGROUND_ID = 0
BACKGROUND_COLOR = (238, 238, 238)

# muted base colors; channels stay inside [45, 225] so visual-prompt strokes
# (pure red/green) can never collide with shaded scene pixels
_PALETTE = np.array(
    [
        (166, 124, 82),
        (96, 125, 139),
        (121, 134, 203),
        (77, 182, 172),
        (212, 180, 131),
        (149, 117, 205),
        (176, 190, 97),
        (100, 181, 246),
        (188, 143, 143),
        (134, 172, 113),
        (218, 152, 165),
        (141, 110, 99),
        (120, 144, 156),
        (197, 163, 87),
        (86, 160, 150),
        (171, 130, 190),
    ],
    dtype=float,
)

_LIGHT_DIR = np.array([-0.35, -0.25, 0.9])
_LIGHT_DIR = _LIGHT_DIR / np.linalg.norm(_LIGHT_DIR)


def entity_color(entity_id: int) -> np.ndarray:
    return _PALETTE[entity_id % len(_PALETTE)]


@dataclass
class FrameBuffers:
    instance_map: np.ndarray  # (H, W) int32, 0 = background
    depth_map: np.ndarray  # (H, W) float64 meters, 0 = no hit
    rgb: np.ndarray | None = None  # (H, W, 3) uint8

    @property
    def width(self) -> int:
        return self.instance_map.shape[1]

    @property
    def height(self) -> int:
        return self.instance_map.shape[0]


@dataclass
class Mask:
    pixels: np.ndarray  # (H, W) bool

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def population(self) -> int:
        return int(self.pixels.sum())

    def is_empty(self) -> bool:
        return not self.pixels.any()

    def contains(self, i: int, j: int) -> bool:
        if 0 <= i < self.width and 0 <= j < self.height:
            return bool(self.pixels[j, i])
        return False

    def indices(self) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of member pixels in row-major order."""
        rows, cols = np.nonzero(self.pixels)
        return rows, cols

    def bbox(self) -> tuple[int, int, int, int]:
        """Inclusive (x0, y0, x1, y1) of member pixels."""
        rows, cols = np.nonzero(self.pixels)
        if len(rows) == 0:
            raise GeometryError("empty mask has no bounding box")
        return int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max())

    def intersect(self, other: "Mask") -> "Mask":
        return Mask(self.pixels & other.pixels)

    def minus(self, other_pixels: np.ndarray) -> "Mask":
        return Mask(self.pixels & ~other_pixels)


def scene_render_entities(scene: Scene) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """(entity_id, world vertices, triangles) for everything rasterizable."""
    out = []
    for f in scene.fixtures:
        out.append((f.id, f.mesh.transformed_vertices(f.pose), f.mesh.triangles))
    for s in scene.surfaces:
        m = s.mesh()
        out.append((s.id, m.vertices, m.triangles))
    for o in scene.objects:
        out.append((o.id, o.world_vertices(), o.mesh.triangles))
    return out


def _clip_near(tri_cam: np.ndarray, z_near: float) -> list[np.ndarray]:
    """Clip one camera-frame triangle against z >= z_near; 0..2 triangles out."""
    out_pts: list[np.ndarray] = []
    for k in range(3):
        a, b = tri_cam[k], tri_cam[(k + 1) % 3]
        a_in, b_in = a[2] >= z_near, b[2] >= z_near
        if a_in:
            out_pts.append(a)
        if a_in != b_in:
            t = (z_near - a[2]) / (b[2] - a[2])
            out_pts.append(a + t * (b - a))
    if len(out_pts) < 3:
        return []
    poly = np.array(out_pts)
    return [poly[[0, k, k + 1]] for k in range(1, len(poly) - 1)]


def _shade(world_verts: np.ndarray, tris: np.ndarray, base: np.ndarray) -> np.ndarray:
    a = world_verts[tris[:, 0]]
    n = np.cross(world_verts[tris[:, 1]] - a, world_verts[tris[:, 2]] - a)
    norms = np.linalg.norm(n, axis=1)
    norms[norms == 0] = 1.0
    lam = np.abs(n @ _LIGHT_DIR) / norms
    factor = 0.55 + 0.45 * lam
    return np.clip(base[None, :] * factor[:, None], 0, 255).astype(np.uint8)


def rasterize(scene: Scene, cam: Camera, with_rgb: bool = True) -> FrameBuffers:
    """Z-buffered perspective rasterization of all scene geometry."""
    w, h = cam.width, cam.height
    zbuf = np.full((h, w), np.inf)
    inst = np.zeros((h, w), dtype=np.int32)
    rgb = None
    if with_rgb:
        rgb = np.empty((h, w, 3), dtype=np.uint8)
        rgb[:] = BACKGROUND_COLOR

    px = np.arange(w, dtype=float) + 0.5
    py = np.arange(h, dtype=float) + 0.5

    def raster_tri(u, v, iz, entity_id, color):
        area = (u[1] - u[0]) * (v[2] - v[0]) - (v[1] - v[0]) * (u[2] - u[0])
        if abs(area) < 1e-12:
            return
        x0 = max(0, int(np.ceil(u.min() - 0.5)))
        x1 = min(w - 1, int(np.floor(u.max() - 0.5)))
        y0 = max(0, int(np.ceil(v.min() - 0.5)))
        y1 = min(h - 1, int(np.floor(v.max() - 0.5)))
        if x0 > x1 or y0 > y1:
            return
        sx = px[x0 : x1 + 1][None, :]
        sy = py[y0 : y1 + 1][:, None]
        w0 = (v[1] - v[2]) * sx + (u[2] - u[1]) * sy + (u[1] * v[2] - u[2] * v[1])
        w1 = (v[2] - v[0]) * sx + (u[0] - u[2]) * sy + (u[2] * v[0] - u[0] * v[2])
        w2 = (v[0] - v[1]) * sx + (u[1] - u[0]) * sy + (u[0] * v[1] - u[1] * v[0])
        if area > 0:
            inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        else:
            inside = (w0 <= 0) & (w1 <= 0) & (w2 <= 0)
        if not inside.any():
            return
        inv_z = (w0 * iz[0] + w1 * iz[1] + w2 * iz[2]) / area
        zslice = zbuf[y0 : y1 + 1, x0 : x1 + 1]
        with np.errstate(divide="ignore"):
            depth = 1.0 / inv_z
        closer = inside & (inv_z > 0) & (depth < zslice)
        if not closer.any():
            return
        zslice[closer] = depth[closer]
        inst[y0 : y1 + 1, x0 : x1 + 1][closer] = entity_id
        if rgb is not None:
            rgb[y0 : y1 + 1, x0 : x1 + 1][closer] = color

    for entity_id, world_verts, tris in scene_render_entities(scene):
        if len(tris) == 0:
            continue
        vc = cam.world_to_cam(world_verts)
        z = vc[:, 2]
        tri_behind = z[tris] < Z_NEAR
        n_behind = tri_behind.sum(axis=1)

        colors = (
            _shade(world_verts, tris, entity_color(entity_id))
            if with_rgb
            else np.zeros((len(tris), 3), dtype=np.uint8)
        )

        safe = np.flatnonzero(n_behind == 0)
        if len(safe):
            iz_all = 1.0 / z
            u_all = cam.fx * vc[:, 0] * iz_all + cam.cx
            v_all = cam.fy * vc[:, 1] * iz_all + cam.cy
            for ti in safe:
                t = tris[ti]
                raster_tri(u_all[t], v_all[t], iz_all[t], entity_id, colors[ti])

        for ti in np.flatnonzero((n_behind > 0) & (n_behind < 3)):
            for sub in _clip_near(vc[tris[ti]], Z_NEAR):
                iz = 1.0 / sub[:, 2]
                u = cam.fx * sub[:, 0] * iz + cam.cx
                v = cam.fy * sub[:, 1] * iz + cam.cy
                raster_tri(u, v, iz, entity_id, colors[ti])

    depth_map = np.where(inst != BACKGROUND_ID, zbuf, 0.0)
    return FrameBuffers(instance_map=inst, depth_map=depth_map, rgb=rgb)


def instance_mask(fb: FrameBuffers, entity_id: int) -> Mask:
    return Mask(fb.instance_map == entity_id)


def visible_pixel_counts(fb: FrameBuffers) -> dict[int, int]:
    ids, counts = np.unique(fb.instance_map, return_counts=True)
    return {int(i): int(c) for i, c in zip(ids, counts) if i != BACKGROUND_ID}


def target_from_points(points, fb: FrameBuffers, cam: Camera, offset=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Average 3D location of image points (via the depth map) plus an offset.

    Points are continuous (u, v) image coordinates; each is deprojected with
    the depth stored at its pixel. Points that fall off-image or on pixels
    with no depth are skipped.
    """
    hits = []
    for u, v in points:
        i, j = int(np.floor(u)), int(np.floor(v))
        if not (0 <= i < fb.width and 0 <= j < fb.height):
            continue
        d = fb.depth_map[j, i]
        if d <= 0:
            continue
        hits.append(deproject(u, v, d, cam))
    if not hits:
        raise GeometryError("no valid depth")
    return np.mean(hits, axis=0) + np.asarray(offset, dtype=float)


# ---------------------------------------------------------------------------
# buffer file formats


def save_instance_png(instance: np.ndarray, path: str | Path) -> None:
    """16-bit grayscale; pixel value is the owning entity id (0 = background)."""
    if instance.max() > 0xFFFF:
        raise GeometryError("instance id exceeds 16-bit range")
    Image.fromarray(instance.astype(np.uint16)).save(path)


def load_instance_png(path: str | Path) -> np.ndarray:
    return np.array(Image.open(path), dtype=np.int32)


def save_depth_png(depth_m: np.ndarray, path: str | Path) -> None:
    """16-bit millimeters, 0 = invalid."""
    mm = np.clip(np.round(depth_m * 1000.0), 0, 0xFFFF).astype(np.uint16)
    Image.fromarray(mm).save(path)


def load_depth_png(path: str | Path) -> np.ndarray:
    """Depth in meters."""
    return np.array(Image.open(path), dtype=np.float64) / 1000.0


def save_rgb_png(rgb: np.ndarray, path: str | Path) -> None:
    Image.fromarray(rgb, mode="RGB").save(path)


def load_rgb_png(path: str | Path) -> np.ndarray:
    return np.array(Image.open(path).convert("RGB"), dtype=np.uint8)


def save_mask_png(mask: Mask, path: str | Path) -> None:
    Image.fromarray((mask.pixels * 255).astype(np.uint8)).save(path)


def load_mask_png(path: str | Path) -> Mask:
    return Mask(np.array(Image.open(path)) > 0)
