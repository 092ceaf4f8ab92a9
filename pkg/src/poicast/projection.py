"""Forward pinhole projection and depth-guided back-projection.

Forward: p_cam = R p + t, then (u, v) = (fx x/z + cx, fy y/z + cy) with the
camera-frame z as the depth. Back-projection inverts it for a pixel at a
known relative depth d:

    p_world = R^T (d * Kinv [u, v, 1]^T - t)

Depth maps carry relative (unitless) values and are used untouched; the
unknown global scale is recovered later by the casting stage. Integer mask
indices are sampled at pixel centers (u + 0.5, v + 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraModel, CameraPose, Pixel
from .errors import (
    BehindCameraError,
    DimensionMismatchError,
    EmptyCloudError,
    NonPositiveDepthError,
)

DEPTH_INVALID = 0.0  # sentinel for pixels without a usable depth


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel positive relative depth; invalid pixels hold the 0 sentinel."""

    values: np.ndarray  # (height, width) float

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("depth map must be 2-D")
        if (v < 0).any() or not np.isfinite(v).all():
            raise ValueError("depth values must be finite and >= 0 (0 marks invalid)")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def valid(self) -> np.ndarray:
        return self.values > DEPTH_INVALID


@dataclass(frozen=True)
class SegMask:
    """Binary per-pixel membership for one object in one frame."""

    bits: np.ndarray  # (height, width) bool
    frame_id: str = ""

    def __post_init__(self):
        b = np.ascontiguousarray(self.bits).astype(bool)
        if b.ndim != 2:
            raise ValueError("mask must be 2-D")
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def area(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class SegmentCloud:
    """Back-projected mask pixels (pre-scale) plus the camera optical center."""

    points: np.ndarray  # (n, 3) world points, row-major pixel order
    camera_center: np.ndarray  # (3,)
    frame_id: str
    source_pixel_count: int

    def __post_init__(self):
        p = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 3)
        c = np.ascontiguousarray(self.camera_center, dtype=np.float64).reshape(3)
        if len(p) == 0:
            raise EmptyCloudError("segment cloud needs at least one point")
        if (np.linalg.norm(p - c, axis=1) == 0).any():
            raise ValueError("cloud contains a point coincident with the camera center")
        p.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "camera_center", c)

    def __len__(self) -> int:
        return len(self.points)


def project_point(model: CameraModel, pose: CameraPose, point) -> tuple[Pixel, float]:
    """Project one world point; raises BehindCameraError when z_cam <= 0.

    Returns the continuous pixel position (no clipping to image bounds)
    and the camera-frame depth.
    """
    p_cam = pose.rotation @ np.asarray(point, dtype=np.float64) + pose.translation
    z = p_cam[2]
    if z <= 0:
        raise BehindCameraError(f"point has camera depth {z}")
    u = model.fx * p_cam[0] / z + model.cx
    v = model.fy * p_cam[1] / z + model.cy
    return Pixel(float(u), float(v)), float(z)


def project_points(model: CameraModel, pose: CameraPose, points: np.ndarray):
    """Vectorized projection: returns (uv (n,2), depth (n,), in_front (n,) bool).

    Points behind the camera get NaN pixel coordinates and in_front False;
    batch callers skip them instead of erroring.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    p_cam = pts @ pose.rotation.T + pose.translation
    z = p_cam[:, 2]
    in_front = z > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        u = model.fx * p_cam[:, 0] / z + model.cx
        v = model.fy * p_cam[:, 1] / z + model.cy
    uv = np.column_stack([u, v])
    uv[~in_front] = np.nan
    return uv, z, in_front


def back_project_pixel(model: CameraModel, pose: CameraPose, pixel: Pixel, depth: float) -> np.ndarray:
    """Lift a pixel at a known relative depth to a world point."""
    if depth <= 0:
        raise NonPositiveDepthError(f"depth must be > 0, got {depth}")
    ray = np.array(
        [(pixel.u - model.cx) / model.fx, (pixel.v - model.cy) / model.fy, 1.0]
    )
    return pose.rotation.T @ (depth * ray - pose.translation)


def back_project_pixels(model: CameraModel, pose: CameraPose, uv: np.ndarray, depths: np.ndarray) -> np.ndarray:
    """Vectorized back-projection of (n,2) pixel coordinates at (n,) depths."""
    uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    d = np.asarray(depths, dtype=np.float64).reshape(-1)
    if (d <= 0).any():
        raise NonPositiveDepthError("all depths must be > 0")
    rays = np.column_stack(
        [(uv[:, 0] - model.cx) / model.fx, (uv[:, 1] - model.cy) / model.fy, np.ones(len(uv))]
    )
    cam_pts = rays * d[:, None]
    return (cam_pts - pose.translation) @ pose.rotation


def mask_to_cloud(model: CameraModel, pose: CameraPose, mask: SegMask, depth: DepthMap) -> SegmentCloud:
    """Back-project every set mask pixel that has a valid depth.

    Points come out in deterministic row-major pixel order; pixels with the
    invalid-depth sentinel are skipped. Raises EmptyCloudError when nothing
    survives.
    """
    if (mask.height, mask.width) != (depth.height, depth.width):
        raise DimensionMismatchError(
            f"mask {mask.width}x{mask.height} vs depth {depth.width}x{depth.height}"
        )
    if (mask.height, mask.width) != (model.height, model.width):
        raise DimensionMismatchError(
            f"mask {mask.width}x{mask.height} vs camera {model.width}x{model.height}"
        )
    source_count = mask.area
    rows, cols = np.nonzero(mask.bits & depth.valid())
    if len(rows) == 0:
        raise EmptyCloudError("no mask pixel has a valid depth")
    uv = np.column_stack([cols + 0.5, rows + 0.5])
    d = depth.values[rows, cols]
    points = back_project_pixels(model, pose, uv, d)
    return SegmentCloud(
        points=points,
        camera_center=pose.camera_center(),
        frame_id=mask.frame_id,
        source_pixel_count=source_count,
    )
