import numpy as np
import pytest

from affordgen.assets import box_mesh, build_fixture, default_repository
from affordgen.camera import Camera, look_at
from affordgen.geometry import Pose, TriMesh, quat_from_axis_angle
from affordgen.scene import SURFACE_LIFT, Fixture, ObjectInstance, Scene, SupportSurface


def centered_cube(size: float = 1.0) -> TriMesh:
    m = box_mesh(size, size, size)
    return TriMesh(m.vertices - np.array([0, 0, size / 2.0]), m.triangles)


def random_pose(rng: np.random.Generator) -> Pose:
    axis = rng.normal(size=3)
    angle = rng.uniform(0, 2 * np.pi)
    return Pose(rng.uniform(-2, 2, size=3), quat_from_axis_angle(axis, angle))


def random_mesh(rng: np.random.Generator, n: int = 50) -> TriMesh:
    verts = rng.uniform(-0.5, 0.5, size=(n, 3))
    tris = rng.integers(0, n, size=(2 * n, 3))
    keep = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    return TriMesh.cleaned(verts, tris[keep])


def table_scene(
    objects: list[tuple[str, tuple[float, float, float], tuple[float, float]]] = (),
    table_size: tuple[float, float] = (1.2, 0.8),
    table_height: float = 0.75,
    seed: int = 0,
) -> Scene:
    """Minimal hand-built scene: one table surface plus box objects.

    `objects` entries are (category, (sx, sy, sz), (x, y)) resting on the
    table; ids are assigned 3, 4, ... (table fixture = 1, surface = 2).
    """
    tw, td = table_size
    mesh, _, _ = build_fixture("table", {"w": tw, "d": td, "h": table_height})
    fixture = Fixture(1, "table", {"w": tw, "d": td, "h": table_height}, Pose.identity(), mesh)
    surf_h = table_height + SURFACE_LIFT
    boundary = np.array([[-tw / 2, -td / 2], [tw / 2, -td / 2], [tw / 2, td / 2], [-tw / 2, td / 2]])
    surface = SupportSurface(2, boundary, surf_h, 1)
    objs = []
    next_id = 3
    for category, (sx, sy, sz), (x, y) in objects:
        m = box_mesh(sx, sy, sz)
        objs.append(
            ObjectInstance(
                id=next_id,
                category=category,
                asset=category,
                mesh=m,
                pose=Pose(np.array([x, y, surf_h]), np.array([1.0, 0, 0, 0])),
                support_id=2,
            )
        )
        next_id += 1
    return Scene(objects=objs, surfaces=[surface], fixtures=[fixture], seed=seed)


def simple_camera(eye, target, width=320, height=240, fov=60.0) -> Camera:
    return Camera.from_fov(width, height, fov, look_at(eye, target))


def topdown_camera(center_xy=(0.0, 0.0), height=3.0, width=320, hpx=240, fov=60.0) -> Camera:
    """Straight-down camera with exact axis-aligned orientation."""
    pose = Pose(np.array([center_xy[0], center_xy[1], height]), np.array([0.0, 1.0, 0.0, 0.0]))
    return Camera.from_fov(width, hpx, fov, pose)


@pytest.fixture(scope="session")
def repo():
    return default_repository()


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
