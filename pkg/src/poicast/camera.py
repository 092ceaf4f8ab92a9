"""Camera intrinsics, extrinsics, and pixel coordinates.

Coordinate conventions used throughout the package:

World frame (right-handed):
  - Scene units are whatever the reconstruction delivered; there is no
    metric scale. All tolerances elsewhere are expressed relative to the
    mesh bounding-box diagonal, never as absolute lengths.

Camera frame (right-handed, standard computer vision):
  - Origin at the optical center, X right, Y down, Z forward along the
    optical axis. A point is in front of the camera iff its camera-frame
    z is positive.

Image frame:
  - Origin top-left, u along width (right), v along height (down), in
    pixels. Integer raster indices address pixel cells; the cell center
    sits at (u + 0.5, v + 0.5).

The pose maps world to camera: p_cam = rotation @ p_world + translation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHO_TOL = 1e-6


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics: focal lengths, principal point, image size (pixels)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 < self.cx < self.width):
            raise ValueError(f"principal point cx={self.cx} outside (0, {self.width})")
        if not (0 < self.cy < self.height):
            raise ValueError(f"principal point cy={self.cy} outside (0, {self.height})")

    def intrinsic_matrix(self) -> np.ndarray:
        """3x3 matrix [[fx,0,cx],[0,fy,cy],[0,0,1]]."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraModel":
        return cls(
            fx=float(d["fx"]),
            fy=float(d["fy"]),
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            width=int(d["width"]),
            height=int(d["height"]),
        )


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform: p_cam = rotation @ p_world + translation.

    rotation must be a proper rotation (orthonormal, det +1) within 1e-6.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if not np.allclose(r.T @ r, np.eye(3), atol=ORTHO_TOL):
            raise ValueError("rotation is not orthonormal within 1e-6")
        if abs(np.linalg.det(r) - 1.0) > ORTHO_TOL:
            raise ValueError("rotation determinant differs from +1 by more than 1e-6")
        object.__setattr__(self, "rotation", _readonly(r))
        object.__setattr__(self, "translation", _readonly(t))

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    @classmethod
    def from_quaternion(cls, qw, qx, qy, qz, tx, ty, tz) -> "CameraPose":
        """Build from a (w, x, y, z) quaternion plus translation, normalizing first."""
        q = np.array([qw, qx, qy, qz], dtype=np.float64)
        n = np.linalg.norm(q)
        if n == 0:
            raise ValueError("zero quaternion")
        w, x, y, z = q / n
        r = np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
            ]
        )
        return cls(rotation=r, translation=np.array([tx, ty, tz], dtype=np.float64))

    def camera_center(self) -> np.ndarray:
        """Optical center in world coordinates: -R^T t."""
        return -self.rotation.T @ self.translation

    def to_dict(self) -> dict:
        return {
            "rotation": [float(v) for v in self.rotation.reshape(-1)],
            "translation": [float(v) for v in self.translation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraPose":
        return cls(
            rotation=np.array(d["rotation"], dtype=np.float64).reshape(3, 3),
            translation=np.array(d["translation"], dtype=np.float64),
        )


@dataclass(frozen=True)
class Pixel:
    """Image coordinate, u along width and v along height, origin top-left."""

    u: float
    v: float

    def inside(self, model: CameraModel) -> bool:
        return 0 <= self.u < model.width and 0 <= self.v < model.height


def look_at_pose(eye, target, up=(0.0, 0.0, 1.0)) -> CameraPose:
    """World-to-camera pose for a camera at `eye` looking toward `target`.

    Camera X is chosen right-handed against `up`; degenerate when the view
    direction is parallel to `up`.
    """
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    fwd = target - eye
    n = np.linalg.norm(fwd)
    if n == 0:
        raise ValueError("eye and target coincide")
    fwd = fwd / n
    right = np.cross(fwd, up)
    rn = np.linalg.norm(right)
    if rn < 1e-12:
        raise ValueError("view direction parallel to up vector")
    right = right / rn
    down = np.cross(fwd, right)
    # rows of R are the camera axes expressed in world coordinates
    r = np.stack([right, down, fwd])
    t = -r @ eye
    return CameraPose(rotation=r, translation=t)
