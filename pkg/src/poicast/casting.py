"""Unified segmentation-cloud casting against the reconstructed mesh.

The back-projected cloud has an unknown global scale, so it is grown from
the camera optical center by a fixed per-iteration factor (default 1.01)
until at least a threshold fraction (default 22%) of its points lie within
a contact tolerance of the mesh surface. Growing the whole cloud at once,
rather than raycasting pixels one by one, keeps the object's shape and
tolerates local mesh defects such as holes.

Scaling is anchored at the optical center so each point slides along its
own pixel ray. "In contact" means within contact_tolerance times the mesh
bounding-box diagonal, keeping every parameter scale-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyCloudError, NoContactError
from .mesh import TriMesh
from .projection import SegmentCloud

GROWTH_FACTOR_DEFAULT = 1.01
CONTACT_THRESHOLD_DEFAULT = 0.22
CONTACT_TOLERANCE_DEFAULT = 0.005
DOWNSAMPLE_MIN_DEFAULT = 200
DOWNSAMPLE_MAX_DEFAULT = 2000

# Auto initial scale: shrink the cloud until its 95th-percentile camera
# distance is 1% of the scene diagonal, so the search always starts below
# the true scale and only ever grows.
INITIAL_REACH_FRACTION = 0.01


@dataclass(frozen=True)
class CastConfig:
    """Knobs for the scale search; serialized with every run for provenance.

    initial_scale / max_scale of None are resolved per cloud: the start is
    the scale putting the 95th-percentile camera distance at 1% of the mesh
    diagonal, the cap is the scale pushing the 5th percentile past the full
    diagonal.
    """

    growth_factor: float = GROWTH_FACTOR_DEFAULT
    contact_threshold: float = CONTACT_THRESHOLD_DEFAULT
    contact_tolerance: float = CONTACT_TOLERANCE_DEFAULT
    initial_scale: float | None = None
    max_scale: float | None = None
    downsample_min: int = DOWNSAMPLE_MIN_DEFAULT
    downsample_max: int = DOWNSAMPLE_MAX_DEFAULT

    def __post_init__(self):
        if not self.growth_factor > 1:
            raise ValueError("growth_factor must be > 1")
        if not 0 < self.contact_threshold < 1:
            raise ValueError("contact_threshold must be in (0, 1)")
        if not self.contact_tolerance > 0:
            raise ValueError("contact_tolerance must be > 0")
        if self.initial_scale is not None and self.initial_scale <= 0:
            raise ValueError("initial_scale must be > 0")
        if (
            self.initial_scale is not None
            and self.max_scale is not None
            and not self.initial_scale < self.max_scale
        ):
            raise ValueError("initial_scale must be < max_scale")
        if not 0 < self.downsample_min <= self.downsample_max:
            raise ValueError("need 0 < downsample_min <= downsample_max")

    def to_dict(self) -> dict:
        return {
            "growth_factor": self.growth_factor,
            "contact_threshold": self.contact_threshold,
            "contact_tolerance": self.contact_tolerance,
            "initial_scale": self.initial_scale,
            "max_scale": self.max_scale,
            "downsample_min": self.downsample_min,
            "downsample_max": self.downsample_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CastConfig":
        return cls(
            growth_factor=float(d.get("growth_factor", GROWTH_FACTOR_DEFAULT)),
            contact_threshold=float(d.get("contact_threshold", CONTACT_THRESHOLD_DEFAULT)),
            contact_tolerance=float(d.get("contact_tolerance", CONTACT_TOLERANCE_DEFAULT)),
            initial_scale=None if d.get("initial_scale") is None else float(d["initial_scale"]),
            max_scale=None if d.get("max_scale") is None else float(d["max_scale"]),
            downsample_min=int(d.get("downsample_min", DOWNSAMPLE_MIN_DEFAULT)),
            downsample_max=int(d.get("downsample_max", DOWNSAMPLE_MAX_DEFAULT)),
        )


@dataclass(frozen=True)
class CastResult:
    """Outcome of one per-frame cast: in-contact points at the accepted scale."""

    contact_points: np.ndarray
    accepted_scale: float
    iterations: int
    contact_fraction: float
    frame_id: str

    def __post_init__(self):
        p = np.ascontiguousarray(self.contact_points, dtype=np.float64).reshape(-1, 3)
        if len(p) == 0:
            raise ValueError("cast result must carry at least one contact point")
        p.flags.writeable = False
        object.__setattr__(self, "contact_points", p)


def target_point_count(source_pixel_count: int, config: CastConfig) -> int:
    """Retained-point budget: 4*sqrt(mask pixels), clamped to the config bounds."""
    n = int(round(4.0 * np.sqrt(max(source_pixel_count, 0))))
    return int(np.clip(n, config.downsample_min, config.downsample_max))


def _voxel_representatives(points: np.ndarray, edge: float) -> np.ndarray:
    """One point per occupied voxel, the one nearest its voxel center.

    The grid is anchored half a cell before the cloud minimum so boundary
    voxel centers sit on the cloud's faces, which keeps the subsample's
    bounds tight against the original's.
    """
    lo = points.min(axis=0)
    origin = lo - 0.5 * edge
    cell = np.floor((points - origin) / edge).astype(np.int64)
    centers = origin + (cell + 0.5) * edge
    dist = np.linalg.norm(points - centers, axis=1)
    # group by voxel key; lexsort makes ties resolve to the lowest index
    key = cell[:, 0] * 73856093 ^ cell[:, 1] * 19349663 ^ cell[:, 2] * 83492791
    order = np.lexsort((np.arange(len(points)), dist, key))
    skey = key[order]
    first = np.ones(len(points), dtype=bool)
    first[1:] = skey[1:] != skey[:-1]
    return order[first]


def adaptive_downsample(cloud: SegmentCloud, config: CastConfig) -> SegmentCloud:
    """Voxel-grid subsample to ~4*sqrt(mask pixels) points, preserving shape.

    Larger objects keep more points. Deterministic: a bisection on the voxel
    edge reaches at least the target occupancy, then the spare points with
    the worst center alignment are trimmed to hit the target exactly. Clouds
    already at or under the target pass through untouched.
    """
    target = target_point_count(cloud.source_pixel_count, config)
    pts = cloud.points
    if len(pts) <= target:
        return cloud

    ext = pts.max(axis=0) - pts.min(axis=0)
    diag = float(np.linalg.norm(ext))
    if diag == 0.0:
        keep = np.arange(target)
        return replace(cloud, points=pts[keep])

    # bisect the voxel edge until the occupied-voxel count reaches the target
    lo_edge, hi_edge = diag * 1e-6, diag * 2.0
    best_idx = None
    for _ in range(48):
        edge = 0.5 * (lo_edge + hi_edge)
        idx = _voxel_representatives(pts, edge)
        if len(idx) >= target:
            best_idx = idx
            lo_edge = edge
        else:
            hi_edge = edge
        if best_idx is not None and target <= len(best_idx) <= int(target * 1.05):
            break
    if best_idx is None:
        best_idx = _voxel_representatives(pts, lo_edge)

    if len(best_idx) > target:
        sel = pts[best_idx]
        lo = pts.min(axis=0)
        edge = lo_edge
        origin = lo - 0.5 * edge
        centers = origin + (np.floor((sel - origin) / edge) + 0.5) * edge
        score = np.linalg.norm(sel - centers, axis=1)
        keep_local = np.lexsort((best_idx, score))[:target]
        best_idx = best_idx[keep_local]

    best_idx = np.sort(best_idx)  # keep row-major pixel order
    return replace(cloud, points=pts[best_idx])


def scale_cloud(cloud: SegmentCloud, scale: float) -> np.ndarray:
    """Points scaled about the optical center: c + s*(p - c).

    Anchoring at the camera center slides each point along its own pixel
    ray, so the ray geometry of the back-projection is preserved.
    """
    if scale <= 0:
        raise ValueError("scale must be > 0")
    return cloud.camera_center + scale * (cloud.points - cloud.camera_center)


def resolve_scale_bounds(cloud: SegmentCloud, mesh: TriMesh, config: CastConfig) -> tuple[float, float]:
    """Fill in automatic initial/max scales for one cloud against one mesh."""
    dists = np.linalg.norm(cloud.points - cloud.camera_center, axis=1)
    q95 = float(np.percentile(dists, 95))
    q05 = float(np.percentile(dists, 5))
    diag = mesh.bbox_diagonal
    initial = config.initial_scale
    if initial is None:
        initial = INITIAL_REACH_FRACTION * diag / q95
    max_scale = config.max_scale
    if max_scale is None:
        max_scale = diag / q05
    if not initial < max_scale:
        raise ValueError(f"resolved initial_scale {initial} >= max_scale {max_scale}")
    return initial, max_scale


def contact_fraction(mesh: TriMesh, points: np.ndarray, tolerance: float) -> float:
    return float((mesh.distances(points) <= tolerance).mean())


def cast_cloud(mesh: TriMesh, cloud: SegmentCloud, config: CastConfig | None = None) -> CastResult:
    """Grow the cloud by growth_factor per step until contact, return contacts.

    Returns the first scale on the geometric grid meeting the threshold;
    raises NoContactError once the scale cap is passed (the missing-geometry
    failure class). Deterministic for identical inputs.
    """
    if config is None:
        config = CastConfig()
    if mesh.n_triangles == 0:
        raise EmptyCloudError("mesh has no triangles to cast against")
    if len(cloud) == 0:
        raise EmptyCloudError("empty cloud")

    initial, max_scale = resolve_scale_bounds(cloud, mesh, config)
    tol = config.contact_tolerance * mesh.bbox_diagonal

    scale = initial
    iterations = 0
    best_fraction = 0.0
    while scale <= max_scale:
        pts = scale_cloud(cloud, scale)
        dists = mesh.distances(pts)
        in_contact = dists <= tol
        fraction = float(in_contact.mean())
        if fraction > best_fraction:
            best_fraction = fraction
        if fraction >= config.contact_threshold:
            return CastResult(
                contact_points=pts[in_contact],
                accepted_scale=scale,
                iterations=iterations,
                contact_fraction=fraction,
                frame_id=cloud.frame_id,
            )
        iterations += 1
        scale = initial * config.growth_factor**iterations
    raise NoContactError(
        f"no scale in [{initial:.6g}, {max_scale:.6g}] reached contact fraction "
        f"{config.contact_threshold} (best {best_fraction:.3f})",
        last_scale=scale,
        best_fraction=best_fraction,
    )
