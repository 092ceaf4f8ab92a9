"""Multi-frame aggregation, density clustering, and oriented-box fitting.

Casting the same annotation from several frames yields a densely
overlapping point cloud. DBSCAN drops outliers and keeps the coherent
region, then the principal axes of the surviving cluster give a tight,
direction-aware approximation of the minimum-volume bounding box.

The DBSCAN here processes points in a canonical coordinate order so its
labeling is independent of input order (clusters are additionally
canonicalized: sorted by size, ties by smallest member point).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .box import OrientedBox
from .casting import CastResult
from .errors import EmptyInputError, NoResultsError

EPSILON_DEFAULT = 0.01  # neighborhood radius as a fraction of the scene diagonal
MIN_PTS_DEFAULT = 8
HALF_EXTENT_FLOOR = 1e-4  # fraction of diag; keeps planar clusters (doors) boxable
_EIG_TIE_REL = 1e-8

STATUS_PENDING = "pending"
STATUS_CAST = "cast"
STATUS_FAILED = "failed"

FAIL_MISSING_POSE = "missing_pose"
FAIL_NO_CONTACT = "no_contact"
FAIL_NO_RESULTS = "no_results"
FAIL_ALL_NOISE = "all_noise"


@dataclass(frozen=True)
class ClusterConfig:
    """DBSCAN radius (relative to scene diagonal), core size, cluster rule."""

    epsilon: float = EPSILON_DEFAULT
    min_pts: int = MIN_PTS_DEFAULT
    cluster_selection: str = "largest"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.min_pts >= 1:
            raise ValueError("min_pts must be >= 1")
        if self.cluster_selection not in ("largest",):
            raise ValueError(f"unknown cluster_selection {self.cluster_selection!r}")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "min_pts": self.min_pts,
            "cluster_selection": self.cluster_selection,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterConfig":
        return cls(
            epsilon=float(d.get("epsilon", EPSILON_DEFAULT)),
            min_pts=int(d.get("min_pts", MIN_PTS_DEFAULT)),
            cluster_selection=str(d.get("cluster_selection", "largest")),
        )


@dataclass
class PoiInstance:
    """One annotated facility: label, contributing frames, fitted box, status."""

    id: str
    label: str
    description: str = ""
    frame_ids: list[str] = field(default_factory=list)
    box: OrientedBox | None = None
    support_count: int = 0
    status: str = STATUS_PENDING
    failure_reason: str | None = None
    cluster_sizes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "description": self.description,
            "frame_ids": list(self.frame_ids),
            "box": self.box.to_dict() if self.box is not None else None,
            "support_count": self.support_count,
            "status": self.status,
            "failure_reason": self.failure_reason,
            "cluster_sizes": list(self.cluster_sizes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PoiInstance":
        return cls(
            id=str(d["id"]),
            label=str(d.get("label", "")),
            description=str(d.get("description", "")),
            frame_ids=[str(f) for f in d.get("frame_ids", [])],
            box=OrientedBox.from_dict(d["box"]) if d.get("box") else None,
            support_count=int(d.get("support_count", 0)),
            status=str(d.get("status", STATUS_PENDING)),
            failure_reason=d.get("failure_reason"),
            cluster_sizes=[int(s) for s in d.get("cluster_sizes", [])],
        )


def aggregate_casts(results: list[CastResult]) -> np.ndarray:
    """Concatenate contact points across frames, ordered by frame id."""
    if not results:
        raise NoResultsError("no cast results to aggregate")
    ordered = sorted(results, key=lambda r: r.frame_id)
    return np.concatenate([r.contact_points for r in ordered], axis=0)


def _expand_clusters(points: np.ndarray, neighbors, min_pts: int) -> np.ndarray:
    """Classic density expansion over a fixed canonical point order."""
    n = len(points)
    order = np.lexsort((points[:, 2], points[:, 1], points[:, 0]))
    labels = np.full(n, -1, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    cluster = 0
    for i in order:
        if visited[i]:
            continue
        visited[i] = True
        seed_neighbors = neighbors(i)
        if len(seed_neighbors) < min_pts:
            continue  # provisional noise; a later cluster may claim it as border
        labels[i] = cluster
        queue = deque(seed_neighbors)
        while queue:
            j = queue.popleft()
            if labels[j] == -1:
                labels[j] = cluster
            if not visited[j]:
                visited[j] = True
                js = neighbors(j)
                if len(js) >= min_pts:
                    queue.extend(js)
        cluster += 1
    return labels


def _canonicalize(points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Relabel clusters by descending size, ties by smallest member point."""
    ids = [c for c in np.unique(labels) if c >= 0]
    def sort_key(c):
        members = points[labels == c]
        smallest = min(map(tuple, members))
        return (-(labels == c).sum(), smallest)
    new = np.full_like(labels, -1)
    for rank, c in enumerate(sorted(ids, key=sort_key)):
        new[labels == c] = rank
    return new


def dbscan(points: np.ndarray, config: ClusterConfig, diag: float) -> np.ndarray:
    """Density clustering with radius epsilon*diag; returns labels, -1 = noise.

    Neighborhoods include the point itself and use <= radius. Labels come
    out canonicalized, so the result is independent of input ordering up to
    exact coordinate ties.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyInputError("dbscan needs at least one point")
    radius = config.epsilon * diag
    tree = cKDTree(pts)
    lists = tree.query_ball_point(pts, r=radius)
    cache = [np.sort(np.asarray(l, dtype=np.int64)) for l in lists]
    labels = _expand_clusters(pts, lambda i: cache[i], config.min_pts)
    return _canonicalize(pts, labels)


def dbscan_reference(points: np.ndarray, config: ClusterConfig, diag: float) -> np.ndarray:
    """Brute-force O(n^2) reference with identical semantics, for verification."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyInputError("dbscan needs at least one point")
    radius = config.epsilon * diag
    diffs = pts[:, None, :] - pts[None, :, :]
    within = (diffs**2).sum(axis=2) <= radius * radius
    cache = [np.nonzero(row)[0] for row in within]
    labels = _expand_clusters(pts, lambda i: cache[i], config.min_pts)
    return _canonicalize(pts, labels)


def _world_aligned_basis(subspace: np.ndarray) -> np.ndarray:
    """Orthonormal basis of a (3,k) eigen-subspace chosen nearest world axes."""
    k = subspace.shape[1]
    proj = subspace @ subspace.T
    basis = []
    for _ in range(k):
        best = None
        best_norm = 1e-12
        for e in np.eye(3):
            q = proj @ e
            for b in basis:
                q = q - (q @ b) * b
            norm = np.linalg.norm(q)
            if norm > best_norm:
                best_norm = norm
                best = q / norm
        basis.append(best)
    return np.column_stack(basis)


def pca_box(points: np.ndarray, diag: float | None = None) -> OrientedBox:
    """Fit an oriented box whose axes are the principal components.

    Axes are ordered by descending eigenvalue and made right-handed; exact
    eigenvalue ties are broken toward the world axes so symmetric inputs
    come out deterministic. Half extents are the half projection ranges,
    floored at 1e-4*diag so planar clusters still produce a valid volume.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyInputError("cannot fit a box to zero points")
    if diag is None:
        ext = pts.max(axis=0) - pts.min(axis=0)
        diag = float(np.linalg.norm(ext))
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / len(pts)
    evals, evecs = np.linalg.eigh(cov)  # ascending
    order = np.argsort(evals, kind="stable")[::-1]
    evals = evals[order]
    axes = evecs[:, order]

    # regroup tied eigenvalues and realign those subspaces to the world axes
    scale = max(float(evals[0]), 1e-30)
    groups = []
    start = 0
    for i in range(1, 3):
        if abs(evals[i] - evals[i - 1]) > _EIG_TIE_REL * scale:
            groups.append((start, i))
            start = i
    groups.append((start, 3))
    for lo, hi in groups:
        if hi - lo >= 2:
            axes[:, lo:hi] = _world_aligned_basis(axes[:, lo:hi])

    # deterministic signs: dominant component of each axis points positive
    for k in range(3):
        col = axes[:, k]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            axes[:, k] = -col
    if np.linalg.det(axes) < 0:
        axes[:, 2] = -axes[:, 2]

    proj = centered @ axes
    lo = proj.min(axis=0)
    hi = proj.max(axis=0)
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    floor = max(HALF_EXTENT_FLOOR * diag, 1e-12)
    half = np.maximum(half, floor)
    return OrientedBox(center=mean + axes @ mid, axes=axes, half_extents=half)


def extract_poi(
    poi: PoiInstance,
    results: list[CastResult],
    config: ClusterConfig,
    diag: float,
) -> PoiInstance:
    """Aggregate casts, filter with DBSCAN, fit the box for the kept cluster.

    Failures never raise; they are encoded in the returned instance's
    status and failure_reason.
    """
    if not results:
        poi.status = STATUS_FAILED
        poi.failure_reason = FAIL_NO_RESULTS
        return poi
    points = aggregate_casts(results)
    labels = dbscan(points, config, diag)
    sizes = [int((labels == c).sum()) for c in range(int(labels.max()) + 1)] if labels.max() >= 0 else []
    poi.frame_ids = sorted({r.frame_id for r in results})
    poi.cluster_sizes = sizes
    if not sizes:
        poi.status = STATUS_FAILED
        poi.failure_reason = FAIL_ALL_NOISE
        return poi
    selected = points[labels == 0]  # canonical label 0 is the largest cluster
    poi.box = pca_box(selected, diag)
    poi.support_count = len(selected)
    poi.status = STATUS_CAST
    poi.failure_reason = None
    return poi
