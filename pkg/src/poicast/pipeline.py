"""Localization runner: annotation masks in, oriented boxes out.

Shared by the CLI, the service jobs, and the estimator facade. Failures are
never raised out of here; they land in each instance's status, mirroring
the two field failure classes: frames the reconstruction never posed
(missing_pose, checked on the anchor frame before any computation) and
geometry the reconstruction never built (no_contact from the scale search).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .casting import CastConfig, CastResult, adaptive_downsample, cast_cloud
from .clustering import (
    FAIL_MISSING_POSE,
    FAIL_NO_CONTACT,
    FAIL_NO_RESULTS,
    STATUS_FAILED,
    ClusterConfig,
    PoiInstance,
    extract_poi,
)
from .errors import EmptyCloudError, NoContactError
from .images import load_mask_png
from .mesh import TriMesh
from .projection import SegMask, mask_to_cloud
from .store import AnnotationRecord, Project, load_frame_depth


@dataclass
class FrameCastDetail:
    frame_id: str
    status: str  # cast | no_contact | skipped
    note: str = ""
    accepted_scale: float | None = None
    iterations: int | None = None
    contact_count: int | None = None

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "status": self.status,
            "note": self.note,
            "accepted_scale": self.accepted_scale,
            "iterations": self.iterations,
            "contact_count": self.contact_count,
        }


@dataclass
class LocalizeOutcome:
    poi: PoiInstance
    frames: list[FrameCastDetail] = field(default_factory=list)


def localize_annotation(
    project: Project,
    annotation: AnnotationRecord,
    mesh: TriMesh | None = None,
    cast_config: CastConfig | None = None,
    cluster_config: ClusterConfig | None = None,
) -> LocalizeOutcome:
    """Cast every usable frame of one annotation and fit its box."""
    mesh = mesh if mesh is not None else project.mesh()
    cast_config = cast_config or project.cast_config
    cluster_config = cluster_config or project.cluster_config

    poi = PoiInstance(id=annotation.id, label=annotation.label, description=annotation.description)
    anchor = project.frame(annotation.frame_id)
    if not anchor.has_pose:
        poi.status = STATUS_FAILED
        poi.failure_reason = FAIL_MISSING_POSE
        poi.frame_ids = [annotation.frame_id]
        return LocalizeOutcome(poi=poi, frames=[
            FrameCastDetail(frame_id=annotation.frame_id, status="skipped", note="anchor frame has no pose")
        ])

    details: list[FrameCastDetail] = []
    results: list[CastResult] = []
    attempted = 0
    for frame_id in sorted(annotation.mask_paths):
        frame = project.frame(frame_id)
        if not frame.has_pose:
            details.append(FrameCastDetail(frame_id=frame_id, status="skipped", note="no pose"))
            continue
        if not frame.depth_path or not project.resolve(frame.depth_path).exists():
            details.append(FrameCastDetail(frame_id=frame_id, status="skipped", note="no depth map"))
            continue
        mask_path = project.resolve(annotation.mask_paths[frame_id])
        if not mask_path.exists():
            details.append(FrameCastDetail(frame_id=frame_id, status="skipped", note="mask file missing"))
            continue
        bits = load_mask_png(mask_path)
        mask = SegMask(bits=bits, frame_id=frame_id)
        if mask.area == 0:
            details.append(FrameCastDetail(frame_id=frame_id, status="skipped", note="empty mask"))
            continue
        depth = load_frame_depth(project, frame)
        try:
            cloud = mask_to_cloud(frame.model, frame.pose, mask, depth)
        except EmptyCloudError:
            details.append(FrameCastDetail(frame_id=frame_id, status="skipped", note="no valid depth under mask"))
            continue
        cloud = adaptive_downsample(cloud, cast_config)
        attempted += 1
        try:
            result = cast_cloud(mesh, cloud, cast_config)
        except NoContactError as exc:
            details.append(
                FrameCastDetail(
                    frame_id=frame_id,
                    status="no_contact",
                    note=f"best contact fraction {exc.best_fraction:.3f}",
                )
            )
            continue
        results.append(result)
        details.append(
            FrameCastDetail(
                frame_id=frame_id,
                status="cast",
                accepted_scale=result.accepted_scale,
                iterations=result.iterations,
                contact_count=len(result.contact_points),
            )
        )

    if not results:
        poi.status = STATUS_FAILED
        poi.failure_reason = FAIL_NO_CONTACT if attempted else FAIL_NO_RESULTS
        poi.frame_ids = sorted(annotation.mask_paths)
        return LocalizeOutcome(poi=poi, frames=details)

    poi = extract_poi(poi, results, cluster_config, mesh.bbox_diagonal)
    return LocalizeOutcome(poi=poi, frames=details)


def localize_project(
    project: Project,
    annotation_ids: list[str] | None = None,
    jobs: int = 1,
) -> list[LocalizeOutcome]:
    """Localize selected (default all) annotations; updates project.pois.

    Parallel across annotations against the one shared mesh index; output
    order follows annotation id regardless of completion order.
    """
    if annotation_ids is None:
        records = sorted(project.annotations, key=lambda a: a.id)
    else:
        records = [project.annotation(a) for a in sorted(annotation_ids)]
    mesh = project.mesh()

    if jobs > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda a: localize_annotation(project, a, mesh=mesh), records))
    else:
        outcomes = [localize_annotation(project, a, mesh=mesh) for a in records]

    by_id = {o.poi.id: o.poi for o in outcomes}
    kept = [p for p in project.pois if p.id not in by_id]
    project.pois = sorted(kept + list(by_id.values()), key=lambda p: p.id)
    return outcomes
