import numpy as np
import pytest

from affordgen.assets import box_mesh, cylinder_mesh, sphere_mesh
from affordgen.camera import Camera, deproject, look_at, project
from affordgen.errors import GeometryError
from affordgen.geometry import Pose, TriMesh, quat_from_axis_angle
from affordgen.raster import (
    instance_mask,
    load_depth_png,
    load_instance_png,
    load_mask_png,
    rasterize,
    save_depth_png,
    save_instance_png,
    save_mask_png,
    scene_render_entities,
    target_from_points,
    visible_pixel_counts,
)
from affordgen.scene import Fixture, ObjectInstance, Scene

from conftest import centered_cube, simple_camera, table_scene
from oracles import raycast_depths

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def single_entity_scene(mesh: TriMesh, pose: Pose | None = None, eid: int = 1) -> Scene:
    return Scene(
        objects=[],
        surfaces=[],
        fixtures=[Fixture(eid, "probe", {}, pose or Pose.identity(), mesh)],
        seed=0,
    )


def forward_camera(width=640, height=480, fov=60.0) -> Camera:
    return Camera.from_fov(width, height, fov, Pose.identity())


# ---------------------------------------------------------------------------
# rasterize


def test_constant_depth_plane():
    tri = TriMesh(np.array([[-50, -50, 2], [50, -50, 2], [0, 100, 2]], float), np.array([[0, 1, 2]]))
    fb = rasterize(single_entity_scene(tri), forward_camera())
    assert set(np.unique(fb.instance_map)) == {1}
    assert np.all(np.abs(fb.depth_map - 2.0) < 1e-4)
    assert instance_mask(fb, 1).population() == 640 * 480


def test_zbuffer_prefers_nearer_square():
    def square(z, eid, dx=0.0):
        v = np.array(
            [[dx - 0.5, -0.5, z], [dx + 0.5, -0.5, z], [dx + 0.5, 0.5, z], [dx - 0.5, 0.5, z]]
        )
        return Fixture(eid, "sq", {}, Pose.identity(), TriMesh(v, np.array([[0, 1, 2], [0, 2, 3]])))

    # near square shifted right so part of the far square stays visible
    scene = Scene(objects=[], surfaces=[], fixtures=[square(2.0, 1), square(1.0, 2, dx=0.6)], seed=0)
    fb = rasterize(scene, forward_camera())
    # overlap region (the near square's full extent) must belong to id 2
    m2 = instance_mask(fb, 2)
    assert m2.population() > 0
    near_region_depths = fb.depth_map[m2.pixels]
    assert np.all(np.abs(near_region_depths - 1.0) < 1e-6)
    # the far square only owns pixels outside the near square's projection
    m1 = instance_mask(fb, 1)
    assert m1.population() > 0
    assert np.all(np.abs(fb.depth_map[m1.pixels] - 2.0) < 1e-6)


def test_cube_visible_pixels_match_analytic_projection():
    cube = centered_cube(1.0)
    pose = Pose(np.array([0.0, 0.0, 2.0]), IDENTITY)
    cam = Camera(320.0, 320.0, 320.0, 240.0, 640, 480, Pose.identity())  # 90 deg horizontal FOV
    fb = rasterize(single_entity_scene(cube, pose), cam)
    pop = instance_mask(fb, 1).population()
    side = 2 * 320.0 * 0.5 / 1.5  # front face at z = 1.5
    predicted = side * side
    assert pop == pytest.approx(predicted, rel=0.03)


def test_empty_scene_all_background():
    scene = Scene(objects=[], surfaces=[], fixtures=[], seed=0)
    fb = rasterize(scene, forward_camera(64, 48))
    assert not fb.instance_map.any()
    assert not fb.depth_map.any()


def test_near_plane_clipping_keeps_visible_part():
    # triangle straddling the camera plane: must neither vanish nor blow up
    tri = TriMesh(
        np.array([[0.0, -0.5, -1.0], [0.5, -0.5, 3.0], [-0.5, 0.5, 3.0]]), np.array([[0, 1, 2]])
    )
    fb = rasterize(single_entity_scene(tri), forward_camera(160, 120))
    assert instance_mask(fb, 1).population() > 0
    assert fb.depth_map[fb.instance_map == 1].min() >= 0.02 - 1e-12


def test_rasterize_deterministic(rng):
    scene = table_scene([("box", (0.2, 0.3, 0.25), (0.1, -0.1)), ("box", (0.15, 0.15, 0.4), (-0.3, 0.2))])
    cam = simple_camera([1.5, -1.5, 1.6], [0, 0, 0.75])
    a = rasterize(scene, cam)
    b = rasterize(scene, cam)
    assert np.array_equal(a.instance_map, b.instance_map)
    assert np.array_equal(a.depth_map, b.depth_map)
    assert np.array_equal(a.rgb, b.rgb)


# ---------------------------------------------------------------------------
# project / deproject


def test_project_principal_point():
    cam = forward_camera()
    u, v, d = project(np.array([0.0, 0.0, 1.0]), cam)
    assert (u, v, d) == pytest.approx((cam.cx, cam.cy, 1.0))


def test_project_closed_form():
    cam = Camera(500.0, 500.0, 320.0, 240.0, 640, 480, Pose.identity())
    u, v, d = project(np.array([0.1, 0.0, 1.0]), cam)
    assert u == pytest.approx(370.0)
    assert v == pytest.approx(240.0)


def test_project_behind_camera_errors():
    with pytest.raises(GeometryError, match="behind camera"):
        project(np.array([0.0, 0.0, -1.0]), forward_camera())


def test_deproject_bad_depth_errors():
    with pytest.raises(GeometryError):
        deproject(320, 240, 0.0, forward_camera())


def test_deproject_principal_axis():
    cam = simple_camera([1.0, 2.0, 1.5], [0.0, 0.0, 0.5])
    p = deproject(cam.cx, cam.cy, 1.0, cam)
    forward = cam.cam_to_world(np.array([0.0, 0.0, 1.0])) - cam.pose.position
    assert np.allclose(p, cam.pose.position + forward, atol=1e-12)


def test_project_deproject_roundtrip(rng):
    cam = simple_camera([2.0, -1.0, 1.8], [0.0, 0.3, 0.6])
    for _ in range(1000):
        u = rng.uniform(0, cam.width)
        v = rng.uniform(0, cam.height)
        d = rng.uniform(0.1, 8.0)
        p = deproject(u, v, d, cam)
        u2, v2, d2 = project(p, cam)
        err = np.linalg.norm(np.array([u2, v2, d2]) - np.array([u, v, d]))
        assert err <= 1e-6 * max(1.0, abs(u), abs(v), abs(d))


# ---------------------------------------------------------------------------
# depth vs ray-casting oracle


def test_depth_matches_raycast_oracle(rng):
    for trial in range(3):
        meshes = [
            (centered_cube(0.5), Pose(np.array([-0.4, 0.1, 2.0]), IDENTITY)),
            (cylinder_mesh(0.3, 0.5, 16), Pose(np.array([0.5, -0.2, 2.5]), quat_from_axis_angle([0, 0, 1], rng.uniform(0, 3)))),
            (sphere_mesh(0.25, 12, 8), Pose(np.array([0.0, 0.4, 3.0 + trial]), IDENTITY)),
        ]
        scene = Scene(
            objects=[],
            surfaces=[],
            fixtures=[Fixture(i + 1, "m", {}, pose, mesh) for i, (mesh, pose) in enumerate(meshes)],
            seed=0,
        )
        cam = forward_camera(64, 48)
        fb = rasterize(scene, cam)
        oracle = raycast_depths(
            [(verts, tris) for _, verts, tris in scene_render_entities(scene)], cam
        )
        hit = fb.instance_map != 0
        assert hit.any()
        assert np.all(oracle[hit] > 0), "oracle must also hit every rasterized pixel"
        assert np.all(np.abs(fb.depth_map[hit] - oracle[hit]) <= 1e-3)
        # z-buffer correctness: nothing in the scene is strictly nearer
        assert np.all(oracle[hit] <= fb.depth_map[hit] + 1e-6)


# ---------------------------------------------------------------------------
# masks


def test_instance_mask_absent_id_empty():
    scene = table_scene()
    fb = rasterize(scene, simple_camera([1.5, -1.5, 1.5], [0, 0, 0.7]))
    assert instance_mask(fb, 999).is_empty()


def test_instance_mask_population_matches_recount():
    scene = table_scene([("box", (0.3, 0.3, 0.3), (0.0, 0.0))])
    fb = rasterize(scene, simple_camera([1.2, -1.2, 1.5], [0, 0, 0.75]))
    oid = scene.objects[0].id
    m = instance_mask(fb, oid)
    recount = int(sum(1 for v in fb.instance_map.ravel() if v == oid))
    assert m.population() == recount
    assert visible_pixel_counts(fb)[oid] == recount


# ---------------------------------------------------------------------------
# target_from_points


def test_target_single_point_matches_deproject():
    tri = TriMesh(np.array([[-50, -50, 2], [50, -50, 2], [0, 100, 2]], float), np.array([[0, 1, 2]]))
    cam = forward_camera(160, 120)
    fb = rasterize(single_entity_scene(tri), cam)
    p = target_from_points([(80.2, 60.7)], fb, cam)
    assert np.allclose(p, deproject(80.2, 60.7, fb.depth_map[60, 80], cam), atol=1e-12)


def test_target_symmetric_pair_on_plane():
    tri = TriMesh(np.array([[-50, -50, 2], [50, -50, 2], [0, 100, 2]], float), np.array([[0, 1, 2]]))
    cam = forward_camera(160, 120)
    fb = rasterize(single_entity_scene(tri), cam)
    p = target_from_points([(60.5, 60.5), (100.5, 60.5)], fb, cam)
    assert p[2] == pytest.approx(2.0, abs=1e-9)  # midpoint stays on the plane
    assert p[0] == pytest.approx(deproject(80.5, 60.5, 2.0, cam)[0], abs=1e-9)


def test_target_cluster_on_table_with_offset():
    scene = table_scene(table_size=(2.0, 2.0))
    cam = simple_camera([1.4, -1.4, 2.0], [0, 0, 0.75])
    fb = rasterize(scene, cam)
    m = instance_mask(fb, scene.surfaces[0].id)
    rows, cols = m.indices()
    pts = [(cols[k] + 0.5, rows[k] + 0.5) for k in range(0, min(50, len(rows)))]
    offset = np.array([0.0, 0.0, 0.1])
    p = target_from_points(pts, fb, cam, offset)
    assert p[2] == pytest.approx(scene.surfaces[0].height + 0.1, abs=1e-3)


def test_target_no_valid_depth_errors():
    scene = Scene(objects=[], surfaces=[], fixtures=[], seed=0)
    cam = forward_camera(64, 48)
    fb = rasterize(scene, cam)
    with pytest.raises(GeometryError, match="no valid depth"):
        target_from_points([(10, 10), (-5, 2), (1000, 3)], fb, cam)


# ---------------------------------------------------------------------------
# file formats


def test_buffer_png_roundtrips(tmp_path):
    scene = table_scene([("box", (0.3, 0.2, 0.25), (0.0, 0.0))])
    cam = simple_camera([1.3, -1.1, 1.6], [0, 0, 0.75], width=160, height=120)
    fb = rasterize(scene, cam)

    save_instance_png(fb.instance_map, tmp_path / "i.png")
    assert np.array_equal(load_instance_png(tmp_path / "i.png"), fb.instance_map)

    save_depth_png(fb.depth_map, tmp_path / "d.png")
    back = load_depth_png(tmp_path / "d.png")
    assert np.all(np.abs(back - fb.depth_map) <= 0.0005 + 1e-12)  # mm quantization
    assert np.array_equal(back == 0, fb.depth_map == 0)

    m = instance_mask(fb, scene.objects[0].id)
    save_mask_png(m, tmp_path / "m.png")
    assert np.array_equal(load_mask_png(tmp_path / "m.png").pixels, m.pixels)
