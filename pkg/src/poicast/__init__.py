"""Depth-guided casting of 2D indoor annotations into oriented 3D boxes.

The pipeline: back-project a segmentation mask through estimated per-pixel
depth, grow the resulting cloud along its camera rays until it contacts the
reconstructed mesh, pool contacts across frames, filter with DBSCAN, and
fit a PCA-aligned bounding box. An annotation service, CLI, and synthetic
evaluation harness wrap the core.
"""

__version__ = "0.1.0"

from .box import OrientedBox
from .camera import CameraModel, CameraPose, Pixel, look_at_pose
from .casting import CastConfig, CastResult, adaptive_downsample, cast_cloud, scale_cloud
from .clustering import ClusterConfig, PoiInstance, aggregate_casts, dbscan, extract_poi, pca_box
from .errors import PoicastError
from .estimator import FacilityLocalizer, Observation
from .mesh import TriMesh, load_mesh, load_obj, load_ply, mesh_distance, save_obj, save_ply
from .projection import (
    DepthMap,
    SegMask,
    SegmentCloud,
    back_project_pixel,
    back_project_pixels,
    mask_to_cloud,
    project_point,
    project_points,
)
from .rle import decode_mask, encode_mask
from .segmentation import AnnotationSession, FallbackSegmenter, PromptPoint, RemoteProvider, propagate
from .store import Project, export_poi_report, init_project, load_project, persist_project

__all__ = [
    "AnnotationSession",
    "CameraModel",
    "CameraPose",
    "CastConfig",
    "CastResult",
    "ClusterConfig",
    "DepthMap",
    "FacilityLocalizer",
    "FallbackSegmenter",
    "Observation",
    "OrientedBox",
    "Pixel",
    "PoiInstance",
    "PoicastError",
    "Project",
    "PromptPoint",
    "RemoteProvider",
    "SegMask",
    "SegmentCloud",
    "TriMesh",
    "adaptive_downsample",
    "aggregate_casts",
    "back_project_pixel",
    "back_project_pixels",
    "cast_cloud",
    "dbscan",
    "decode_mask",
    "encode_mask",
    "export_poi_report",
    "extract_poi",
    "init_project",
    "load_mesh",
    "load_obj",
    "load_ply",
    "load_project",
    "look_at_pose",
    "mask_to_cloud",
    "mesh_distance",
    "pca_box",
    "persist_project",
    "project_point",
    "project_points",
    "propagate",
    "save_obj",
    "save_ply",
    "scale_cloud",
]
