"""Estimator-style facade over the localization pipeline.

FacilityLocalizer follows the scikit-learn contract (constructor params
stored verbatim, `fit` binds the scene and returns self, `get_params` /
`set_params` inherited) so the pipeline drops into that ecosystem's
tooling: cloning, grid search over casting thresholds, pipelines.

fit() takes the reconstructed mesh; predict() takes per-annotation
observation lists and returns fitted PoiInstances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .casting import CastConfig, adaptive_downsample, cast_cloud
from .clustering import (
    FAIL_NO_CONTACT,
    FAIL_NO_RESULTS,
    STATUS_FAILED,
    ClusterConfig,
    PoiInstance,
    extract_poi,
)
from .camera import CameraModel, CameraPose
from .errors import NoContactError
from .mesh import TriMesh
from .projection import DepthMap, SegMask, mask_to_cloud


@dataclass(frozen=True)
class Observation:
    """One frame's evidence for an annotation: mask plus depth plus camera."""

    frame_id: str
    model: CameraModel
    pose: CameraPose
    mask: SegMask
    depth: DepthMap


def check_observation(obs: Observation) -> Observation:
    if not isinstance(obs, Observation):
        raise TypeError(f"expected Observation, got {type(obs).__name__}")
    if (obs.mask.height, obs.mask.width) != (obs.depth.height, obs.depth.width):
        raise ValueError(
            f"{obs.frame_id}: mask {obs.mask.width}x{obs.mask.height} does not match "
            f"depth {obs.depth.width}x{obs.depth.height}"
        )
    if (obs.mask.height, obs.mask.width) != (obs.model.height, obs.model.width):
        raise ValueError(f"{obs.frame_id}: raster size does not match the camera model")
    return obs


def check_mesh(mesh) -> TriMesh:
    if not isinstance(mesh, TriMesh):
        raise TypeError(f"fit expects a TriMesh, got {type(mesh).__name__}")
    if mesh.n_triangles == 0:
        raise ValueError("cannot localize against an empty mesh")
    return mesh


class FacilityLocalizer(BaseEstimator):
    """Casts 2D annotation masks into oriented 3D boxes on a fitted mesh.

    Parameters mirror the casting and clustering knobs; defaults are the
    production values (1% growth per step, 22% contact threshold).
    """

    def __init__(
        self,
        growth_factor: float = 1.01,
        contact_threshold: float = 0.22,
        contact_tolerance: float = 0.005,
        initial_scale: float | None = None,
        max_scale: float | None = None,
        downsample_min: int = 200,
        downsample_max: int = 2000,
        epsilon: float = 0.01,
        min_pts: int = 8,
        cluster_selection: str = "largest",
    ):
        self.growth_factor = growth_factor
        self.contact_threshold = contact_threshold
        self.contact_tolerance = contact_tolerance
        self.initial_scale = initial_scale
        self.max_scale = max_scale
        self.downsample_min = downsample_min
        self.downsample_max = downsample_max
        self.epsilon = epsilon
        self.min_pts = min_pts
        self.cluster_selection = cluster_selection

    def _cast_config(self) -> CastConfig:
        return CastConfig(
            growth_factor=self.growth_factor,
            contact_threshold=self.contact_threshold,
            contact_tolerance=self.contact_tolerance,
            initial_scale=self.initial_scale,
            max_scale=self.max_scale,
            downsample_min=self.downsample_min,
            downsample_max=self.downsample_max,
        )

    def _cluster_config(self) -> ClusterConfig:
        return ClusterConfig(
            epsilon=self.epsilon,
            min_pts=self.min_pts,
            cluster_selection=self.cluster_selection,
        )

    def fit(self, mesh: TriMesh, y=None):
        """Bind the reconstructed scene; its spatial index backs all casts."""
        self.mesh_ = check_mesh(mesh)
        self.diagonal_ = mesh.bbox_diagonal
        # validate eagerly so bad params fail at fit, not mid-predict
        self._cast_config()
        self._cluster_config()
        return self

    def predict(self, annotations: list[list[Observation]]) -> list[PoiInstance]:
        """Localize each annotation (a list of Observations) to a PoiInstance."""
        if not hasattr(self, "mesh_"):
            raise RuntimeError("fit the localizer with a mesh before predicting")
        cast_config = self._cast_config()
        cluster_config = self._cluster_config()
        out = []
        for index, observations in enumerate(annotations):
            poi = PoiInstance(id=f"annotation-{index}", label="")
            results = []
            attempted = 0
            for obs in observations:
                check_observation(obs)
                try:
                    cloud = mask_to_cloud(obs.model, obs.pose, obs.mask, obs.depth)
                except Exception:
                    continue
                cloud = adaptive_downsample(cloud, cast_config)
                attempted += 1
                try:
                    results.append(cast_cloud(self.mesh_, cloud, cast_config))
                except NoContactError:
                    continue
            if not results:
                poi.status = STATUS_FAILED
                poi.failure_reason = FAIL_NO_CONTACT if attempted else FAIL_NO_RESULTS
                out.append(poi)
                continue
            out.append(extract_poi(poi, results, cluster_config, self.diagonal_))
        return out

    def fit_predict(self, mesh: TriMesh, annotations: list[list[Observation]]) -> list[PoiInstance]:
        return self.fit(mesh).predict(annotations)
