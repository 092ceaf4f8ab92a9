import numpy as np
import pytest

import poicast as pc
from poicast import synth
from poicast.casting import (
    CastConfig,
    adaptive_downsample,
    cast_cloud,
    contact_fraction,
    resolve_scale_bounds,
    scale_cloud,
    target_point_count,
)
from poicast.errors import NoContactError
from poicast.projection import SegmentCloud, mask_to_cloud


def make_cloud(points, center=(0, 0, 0), pixels=None):
    points = np.asarray(points, dtype=float)
    return SegmentCloud(
        points=points,
        camera_center=np.asarray(center, dtype=float),
        frame_id="f0",
        source_pixel_count=pixels if pixels is not None else len(points),
    )


def test_config_paper_defaults():
    cfg = CastConfig()
    assert cfg.growth_factor == 1.01
    assert cfg.contact_threshold == 0.22
    assert cfg.contact_tolerance == 0.005
    assert (cfg.downsample_min, cfg.downsample_max) == (200, 2000)


def test_config_validation():
    with pytest.raises(ValueError):
        CastConfig(growth_factor=1.0)
    with pytest.raises(ValueError):
        CastConfig(contact_threshold=1.5)
    with pytest.raises(ValueError):
        CastConfig(initial_scale=2.0, max_scale=1.0)
    with pytest.raises(ValueError):
        CastConfig(downsample_min=10, downsample_max=5)


def test_scale_cloud_identity():
    cloud = make_cloud([[1, 2, 3], [4, 5, 6]])
    assert np.array_equal(scale_cloud(cloud, 1.0), cloud.points)


def test_scale_cloud_doubles_from_center():
    cloud = make_cloud([[0, 0, 1]])
    assert np.allclose(scale_cloud(cloud, 2.0), [[0, 0, 2]])


def test_scale_cloud_anchored_at_camera():
    cloud = make_cloud([[2, 1, 1]], center=(1, 1, 1))
    assert np.allclose(scale_cloud(cloud, 3.0), [[4, 1, 1]])


def test_scaled_points_keep_ray_property():
    rng = np.random.default_rng(2)
    center = rng.normal(size=3)
    points = center + rng.normal(size=(50, 3))
    cloud = make_cloud(points, center=center)
    for s in (0.5, 1.7, 10.0):
        scaled = scale_cloud(cloud, s)
        a = points - center
        b = scaled - center
        cross = np.cross(a, b)
        assert (np.linalg.norm(cross, axis=1) < 1e-9 * np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1) + 1e-15).all()


def test_downsample_keeps_small_clouds():
    rng = np.random.default_rng(0)
    cloud = make_cloud(rng.normal(size=(50, 3)) + 5)
    out = adaptive_downsample(cloud, CastConfig())
    assert np.array_equal(out.points, cloud.points)


def test_downsample_bounds_for_huge_masks():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 2, size=(100_000, 3)) + 3
    cloud = make_cloud(pts, pixels=1_000_000)
    out = adaptive_downsample(cloud, CastConfig())
    assert 200 <= len(out) <= 2000
    assert len(out) == target_point_count(1_000_000, CastConfig())  # clamped to 2000
    assert len(out) == 2000


def test_downsample_preserves_bounds_within_5_percent():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, size=(100_000, 3)) + np.array([5.0, 6.0, 7.0])
    cloud = make_cloud(pts)
    out = adaptive_downsample(cloud, CastConfig())
    ext = pts.max(axis=0) - pts.min(axis=0)
    assert (np.abs(out.points.min(axis=0) - pts.min(axis=0)) <= 0.05 * ext).all()
    assert (np.abs(out.points.max(axis=0) - pts.max(axis=0)) <= 0.05 * ext).all()


def test_downsample_scales_with_object_size():
    rng = np.random.default_rng(4)
    cfg = CastConfig()
    small = adaptive_downsample(make_cloud(rng.normal(size=(5000, 3)) + 9, pixels=5000), cfg)
    large = adaptive_downsample(make_cloud(rng.normal(size=(50_000, 3)) + 9, pixels=50_000), cfg)
    assert len(large) > len(small)  # larger objects retain more points


def wall_mesh():
    """A single wall at x=5 spanning y,z in [0,10] x [0,3], fine grid."""
    v, t = synth.room_shell(size=(10.0, 10.0, 3.0), cell=0.5)
    return pc.TriMesh(v, t)


def test_cast_immediate_acceptance_iterations_zero():
    mesh = wall_mesh()
    # points already on the floor z=0, camera above
    rng = np.random.default_rng(5)
    pts = np.column_stack([rng.uniform(2, 8, 300), rng.uniform(2, 8, 300), np.zeros(300)])
    cloud = make_cloud(pts, center=(5, 5, 2))
    cfg = CastConfig(initial_scale=1.0, max_scale=2.0)
    result = cast_cloud(mesh, cloud, cfg)
    assert result.iterations == 0
    assert result.accepted_scale == 1.0
    assert result.contact_fraction == 1.0


def test_cast_accepted_scale_is_power_of_growth():
    mesh = wall_mesh()
    rng = np.random.default_rng(6)
    pts = np.column_stack([rng.uniform(2, 8, 300), rng.uniform(2, 8, 300), np.full(300, 1.0)])
    # camera at z=2: the cloud reaches the floor when scaled by 2
    cloud = make_cloud(pts, center=(5, 5, 2))
    cfg = CastConfig(initial_scale=1.0, max_scale=4.0)
    result = cast_cloud(mesh, cloud, cfg)
    assert result.iterations > 0
    assert result.accepted_scale == 1.0 * cfg.growth_factor**result.iterations


def test_cast_first_crossing_property(standard_scene_session, standard_mesh, standard_casts):
    scene = standard_scene_session
    mesh = standard_mesh
    cfg = CastConfig()
    tol = cfg.contact_tolerance * mesh.bbox_diagonal
    result = standard_casts[0]
    res = synth.render_analytic(scene, 0)
    cloud = mask_to_cloud(scene.models[0], scene.poses[0], res.masks[0], res.depth_map)
    cloud = adaptive_downsample(cloud, cfg)
    at = contact_fraction(mesh, scale_cloud(cloud, result.accepted_scale), tol)
    before = contact_fraction(mesh, scale_cloud(cloud, result.accepted_scale / cfg.growth_factor), tol)
    assert at >= cfg.contact_threshold
    assert before < cfg.contact_threshold


def test_cast_contacts_verified_against_mesh(standard_mesh, standard_casts):
    cfg = CastConfig()
    tol = cfg.contact_tolerance * standard_mesh.bbox_diagonal
    for result in standard_casts:
        assert (standard_mesh.distances(result.contact_points) <= tol).all()
        assert result.contact_fraction >= cfg.contact_threshold


def test_cast_hidden_scale_recovery_single(standard_scene_session, standard_mesh):
    scene = standard_scene_session
    res = synth.render_analytic(scene, 0)
    g = 2.0
    emitted = res.true_depth * g
    emitted[res.hit_triangle < 0] = 0.0
    cloud = mask_to_cloud(scene.models[0], scene.poses[0], res.masks[0], pc.DepthMap(values=emitted))
    cloud = adaptive_downsample(cloud, CastConfig())
    result = cast_cloud(standard_mesh, cloud, CastConfig())
    assert abs(result.accepted_scale * g - 1.0) <= 0.02


def test_cast_determinism(standard_scene_session, standard_mesh):
    scene = standard_scene_session
    res = synth.render_analytic(scene, 1)
    cloud = mask_to_cloud(scene.models[1], scene.poses[1], res.masks[0], res.depth_map)
    cloud = adaptive_downsample(cloud, CastConfig())
    a = cast_cloud(standard_mesh, cloud, CastConfig())
    b = cast_cloud(standard_mesh, cloud, CastConfig())
    assert a.accepted_scale == b.accepted_scale
    assert a.iterations == b.iterations
    assert np.array_equal(a.contact_points, b.contact_points)


def test_cast_no_contact_when_geometry_missing():
    scene = synth.standard_scene(extra_poi=True, carve_extra=True)
    mesh = pc.TriMesh(scene.vertices, scene.recon_triangles)
    res = synth.render_analytic(scene, 2)  # the view whose overshoot exits cleanly
    cloud = mask_to_cloud(scene.models[2], scene.poses[2], res.masks[1], res.depth_map)
    cloud = adaptive_downsample(cloud, CastConfig())
    with pytest.raises(NoContactError):
        cast_cloud(mesh, cloud, CastConfig())


def test_cast_through_hole_beats_per_pixel_raycast():
    """Whole-cloud casting tolerates a hole that defeats per-pixel rays."""
    # a wall patch is annotated; a hole is punched through its center in the
    # "reconstruction", so single rays fly through while the cloud still lands
    scene = synth.standard_scene()
    model, pose = scene.models[0], scene.poses[0]
    res = synth.render_analytic(scene, 0)

    # annotate a wall region around (10, y~4, z~1): pixels hitting the far wall
    rows, cols = np.nonzero((res.hit_poi == -1) & (res.true_depth > 0))
    origin, dirs = synth.pixel_rays(model, pose, rows, cols)
    hits = origin + dirs * res.true_depth[rows, cols][:, None]
    sel = (hits[:, 0] > 9.99) & (np.abs(hits[:, 1] - 4.0) < 0.7) & (np.abs(hits[:, 2] - 1.0) < 0.7)
    bits = np.zeros(res.hit_poi.shape, dtype=bool)
    bits[rows[sel], cols[sel]] = True
    mask = pc.SegMask(bits=bits, frame_id="frame_000")

    # punch the hole: remove far-wall faces within 0.5 of the patch center
    centroids = scene.vertices[scene.triangles].mean(axis=1)
    hole = (centroids[:, 0] > 9.99) & (np.linalg.norm(centroids[:, 1:] - np.array([4.0, 1.0]), axis=1) < 0.5)
    assert hole.any()
    holed = pc.TriMesh(scene.vertices, scene.triangles[~hole])

    cloud = mask_to_cloud(model, pose, mask, res.depth_map)
    cloud = adaptive_downsample(cloud, CastConfig())
    result = cast_cloud(holed, cloud, CastConfig())  # must still accept
    assert result.contact_fraction >= 0.22
    assert abs(result.accepted_scale - 1.0) < 0.03

    # the per-pixel rays through the hole leave the room and hit nothing
    t_hit, _ = synth.reference_raycast(holed.vertices, holed.triangles, origin, dirs[sel])
    missed = ~np.isfinite(t_hit)
    assert missed.mean() > 0.2


def test_resolve_scale_bounds_auto():
    mesh = wall_mesh()
    rng = np.random.default_rng(8)
    pts = rng.normal(size=(100, 3)) * 0.1 + np.array([5, 5, 1])
    cloud = make_cloud(pts, center=(5, 5, 2))
    cfg = CastConfig()
    initial, max_scale = resolve_scale_bounds(cloud, mesh, cfg)
    dists = np.linalg.norm(cloud.points - cloud.camera_center, axis=1)
    assert initial == pytest.approx(0.01 * mesh.bbox_diagonal / np.percentile(dists, 95))
    assert max_scale == pytest.approx(mesh.bbox_diagonal / np.percentile(dists, 5))
