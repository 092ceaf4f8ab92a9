"""Oriented bounding box: center, orthonormal axes (columns), half extents."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class OrientedBox:
    center: np.ndarray
    axes: np.ndarray  # columns are the box axes, right-handed
    half_extents: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).reshape(3)
        a = np.asarray(self.axes, dtype=np.float64).reshape(3, 3)
        h = np.asarray(self.half_extents, dtype=np.float64).reshape(3)
        if not np.allclose(a.T @ a, np.eye(3), atol=ORTHO_TOL):
            raise ValueError("box axes are not orthonormal within 1e-6")
        if not (h > 0).all():
            raise ValueError(f"half extents must be positive, got {h}")
        for arr in (c, a, h):
            arr.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "axes", a)
        object.__setattr__(self, "half_extents", h)

    @property
    def volume(self) -> float:
        return float(8.0 * np.prod(self.half_extents))

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Componentwise |axes^T (p - center)| <= half_extents + tol."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        local = np.abs((pts - self.center) @ self.axes)
        return (local <= self.half_extents + tol).all(axis=1)

    def corners(self) -> np.ndarray:
        """The 8 corner points, ordered by sign pattern (---, --+, -+-, ...)."""
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=np.float64,
        )
        return self.center + (signs * self.half_extents) @ self.axes.T

    def transformed(self, rotation: np.ndarray, translation) -> "OrientedBox":
        r = np.asarray(rotation, dtype=np.float64)
        return OrientedBox(
            center=r @ self.center + np.asarray(translation, dtype=np.float64),
            axes=r @ self.axes,
            half_extents=self.half_extents.copy(),
        )

    def to_dict(self) -> dict:
        return {
            "center": [float(v) for v in self.center],
            "axes": [float(v) for v in self.axes.reshape(-1)],  # row-major 9 floats
            "half_extents": [float(v) for v in self.half_extents],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OrientedBox":
        return cls(
            center=np.array(d["center"], dtype=np.float64),
            axes=np.array(d["axes"], dtype=np.float64).reshape(3, 3),
            half_extents=np.array(d["half_extents"], dtype=np.float64),
        )

    @classmethod
    def axis_aligned(cls, lo, hi) -> "OrientedBox":
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        return cls(center=(lo + hi) / 2.0, axes=np.eye(3), half_extents=(hi - lo) / 2.0)


def box_mesh(box: OrientedBox):
    """8 vertices and 12 triangles (outward-facing) for a box, for OBJ export."""
    c = box.corners()  # sign order: 0:---, 1:--+, 2:-+-, 3:-++, 4:+--, 5:+-+, 6:++-, 7:+++
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, cc, d in quads:
        tris.append((a, b, cc))
        tris.append((a, cc, d))
    return c, np.asarray(tris, dtype=np.int64)
