import numpy as np
import pytest

from poicast.box import OrientedBox
from poicast.casting import CastResult
from poicast.clustering import (
    ClusterConfig,
    PoiInstance,
    aggregate_casts,
    dbscan,
    dbscan_reference,
    extract_poi,
    pca_box,
)
from poicast.errors import EmptyInputError, NoResultsError


def make_result(points, frame_id):
    return CastResult(
        contact_points=np.asarray(points, dtype=float),
        accepted_scale=1.0,
        iterations=0,
        contact_fraction=1.0,
        frame_id=frame_id,
    )


def test_aggregate_concatenates_in_frame_order():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(100, 3))
    b = rng.normal(size=(100, 3))
    c = rng.normal(size=(100, 3))
    # pass frames out of order; aggregation sorts by frame id
    agg = aggregate_casts([make_result(b, "f1"), make_result(c, "f2"), make_result(a, "f0")])
    assert agg.shape == (300, 3)
    assert np.array_equal(agg[:100], a)
    assert np.array_equal(agg[100:200], b)


def test_aggregate_single_frame_identity():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(40, 3))
    assert np.array_equal(aggregate_casts([make_result(a, "f0")]), a)


def test_aggregate_empty_raises():
    with pytest.raises(NoResultsError):
        aggregate_casts([])


# -- dbscan -------------------------------------------------------------------

def test_two_separated_blobs():
    rng = np.random.default_rng(2)
    cfg = ClusterConfig(epsilon=0.01, min_pts=4)
    diag = 10.0  # radius 0.1
    a = rng.normal(scale=0.02, size=(50, 3))
    b = rng.normal(scale=0.02, size=(50, 3)) + np.array([10.0, 0, 0])  # 100x radius apart
    labels = dbscan(np.vstack([a, b]), cfg, diag)
    assert set(labels.tolist()) == {0, 1}
    assert (labels[:50] == labels[0]).all()
    assert (labels[50:] == labels[50]).all()


def test_isolated_points_are_noise():
    cfg = ClusterConfig(epsilon=0.01, min_pts=8)
    pts = np.array([[0, 0, 0], [5, 0, 0], [0, 5, 0], [0, 0, 5], [5, 5, 5]], dtype=float)
    labels = dbscan(pts, cfg, diag=10.0)
    assert (labels == -1).all()


def _random_instance(rng):
    n_blobs = rng.integers(1, 5)
    parts = []
    for _ in range(n_blobs):
        center = rng.uniform(-5, 5, 3)
        parts.append(center + rng.normal(scale=rng.uniform(0.05, 0.5), size=(rng.integers(5, 120), 3)))
    parts.append(rng.uniform(-8, 8, size=(rng.integers(0, 40), 3)))  # scatter
    return np.vstack(parts)


def test_dbscan_matches_brute_force_reference():
    rng = np.random.default_rng(3)
    for _ in range(25):
        pts = _random_instance(rng)[:500]
        cfg = ClusterConfig(epsilon=float(rng.uniform(0.005, 0.08)), min_pts=int(rng.integers(2, 12)))
        fast = dbscan(pts, cfg, diag=10.0)
        slow = dbscan_reference(pts, cfg, diag=10.0)
        assert np.array_equal(fast, slow)


def test_dbscan_order_independent():
    rng = np.random.default_rng(4)
    pts = _random_instance(rng)[:300]
    cfg = ClusterConfig(epsilon=0.03, min_pts=5)
    base = dbscan(pts, cfg, diag=10.0)
    perm = rng.permutation(len(pts))
    shuffled = dbscan(pts[perm], cfg, diag=10.0)
    assert np.array_equal(base[perm], shuffled)


def test_dbscan_partition_property():
    rng = np.random.default_rng(5)
    pts = _random_instance(rng)[:400]
    cfg = ClusterConfig()
    labels = dbscan(pts, cfg, diag=10.0)
    assert labels.shape == (len(pts),)
    assert labels.min() >= -1
    if labels.max() >= 0:
        sizes = [(labels == c).sum() for c in range(labels.max() + 1)]
        assert sizes == sorted(sizes, reverse=True)  # canonical order


def test_dbscan_empty_raises():
    with pytest.raises(EmptyInputError):
        dbscan(np.zeros((0, 3)), ClusterConfig(), diag=1.0)


# -- pca box ------------------------------------------------------------------

def test_pca_box_unit_cube_corners():
    corners = np.array(
        [[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)]
    )
    box = pca_box(corners, diag=1.0)
    assert np.abs(box.half_extents - 0.5).max() < 1e-9
    assert np.abs(box.center - 0.5).max() < 1e-9
    assert box.volume == pytest.approx(1.0, abs=1e-9)
    # tie-break: axes align with the world frame (any permutation/sign)
    assert np.abs(np.abs(box.axes) - np.eye(3)).max() < 1e-9


def test_pca_box_line_segment_principal_axis():
    t = np.linspace(0, 1, 101)
    pts = np.column_stack([t, t, np.zeros_like(t)])
    box = pca_box(pts, diag=np.sqrt(2))
    main = box.axes[:, 0]
    expected = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    assert min(np.linalg.norm(main - expected), np.linalg.norm(main + expected)) < 1e-6
    # aligned box beats the axis-aligned one on volume for diagonal lines
    aabb_volume = 1.0 * 1.0 * max(2e-4 * np.sqrt(2), 1e-12) * 8 / 8
    assert box.volume <= aabb_volume + 1e-9


def test_pca_box_contains_all_inputs():
    rng = np.random.default_rng(6)
    for _ in range(20):
        pts = rng.normal(size=(rng.integers(4, 300), 3)) * rng.uniform(0.1, 5, 3)
        diag = float(np.linalg.norm(pts.max(0) - pts.min(0)))
        box = pca_box(pts, diag=diag)
        assert box.contains(pts, tol=1e-6 * diag).all()


def test_pca_box_rigid_equivariance():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(200, 3)) * np.array([3.0, 1.0, 0.4])
    diag = float(np.linalg.norm(pts.max(0) - pts.min(0)))
    box = pca_box(pts, diag=diag)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    rot = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
    shift = rng.uniform(-4, 4, 3)
    moved = pca_box(pts @ rot.T + shift, diag=diag)
    assert np.abs(moved.center - (rot @ box.center + shift)).max() < 1e-6
    assert np.abs(np.sort(moved.half_extents) - np.sort(box.half_extents)).max() < 1e-6


def test_pca_box_planar_floor():
    rng = np.random.default_rng(8)
    pts = np.column_stack([rng.uniform(0, 2, 100), rng.uniform(0, 1, 100), np.zeros(100)])
    box = pca_box(pts, diag=13.0)
    assert box.half_extents.min() == pytest.approx(1e-4 * 13.0)
    assert box.volume > 0


def test_pca_box_single_point():
    box = pca_box(np.array([[1.0, 2.0, 3.0]]), diag=10.0)
    assert np.allclose(box.center, [1, 2, 3])
    assert (box.half_extents > 0).all()


def test_pca_box_empty_raises():
    with pytest.raises(EmptyInputError):
        pca_box(np.zeros((0, 3)))


def test_pca_box_axes_right_handed():
    rng = np.random.default_rng(9)
    for _ in range(10):
        pts = rng.normal(size=(50, 3)) * rng.uniform(0.5, 3, 3)
        box = pca_box(pts)
        assert np.linalg.det(box.axes) == pytest.approx(1.0, abs=1e-9)


# -- extract ------------------------------------------------------------------

def test_extract_poi_empty_results():
    poi = extract_poi(PoiInstance(id="a", label="door"), [], ClusterConfig(), diag=10.0)
    assert poi.status == "failed"
    assert poi.failure_reason == "no_results"


def test_extract_poi_all_noise():
    pts = np.array([[0, 0, 0], [5, 0, 0], [0, 5, 0], [5, 5, 0], [2, 2, 4]], dtype=float)
    results = [make_result(pts, "f0")]
    poi = extract_poi(PoiInstance(id="a", label="door"), results, ClusterConfig(epsilon=0.001, min_pts=8), diag=10.0)
    assert poi.status == "failed"
    assert poi.failure_reason == "all_noise"


def test_extract_poi_largest_cluster_wins():
    rng = np.random.default_rng(10)
    big = rng.normal(scale=0.05, size=(120, 3))
    small = rng.normal(scale=0.05, size=(30, 3)) + np.array([5.0, 0, 0])
    results = [make_result(np.vstack([big, small]), "f0")]
    poi = extract_poi(PoiInstance(id="a", label="door"), results, ClusterConfig(epsilon=0.02, min_pts=5), diag=10.0)
    assert poi.status == "cast"
    assert poi.support_count == 120
    assert poi.cluster_sizes == [120, 30]
    assert poi.box.contains(big, tol=1e-6).all()


def test_extract_poi_deterministic(standard_casts, standard_mesh):
    a = extract_poi(PoiInstance(id="a", label="box"), standard_casts, ClusterConfig(), standard_mesh.bbox_diagonal)
    b = extract_poi(PoiInstance(id="a", label="box"), standard_casts, ClusterConfig(), standard_mesh.bbox_diagonal)
    assert a.support_count == b.support_count
    assert np.array_equal(a.box.center, b.box.center)
    assert np.array_equal(a.box.axes, b.box.axes)
    assert np.array_equal(a.box.half_extents, b.box.half_extents)
