"""HTTP service backing the annotation and review front ends.

REST + JSON (snake_case, UTC ISO-8601 times), polling for job progress.
Sessions mutate the project manifest write-through: every change is
persisted before the response goes out. Jobs run on a small worker pool;
confirming a session enqueues mask propagation and, when that succeeds,
chains a localization job automatically.
"""

from __future__ import annotations

import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from .camera import Pixel
from .clustering import STATUS_FAILED
from .errors import NoPositivePromptError, PoicastError, ProviderUnavailableError
from .images import load_image_rgb, save_mask_png
from .pipeline import localize_annotation
from .projection import SegMask
from .rle import encode_mask
from .segmentation import (
    EXIT_PROVIDER,
    EXIT_SEQUENCE,
    FallbackSegmenter,
    PromptPoint,
    RemoteProvider,
)
from .store import AnnotationRecord, Project, persist_project, utc_now_iso

JOB_QUEUED = "queued"
JOB_RUNNING = "running"
JOB_DONE = "done"
JOB_FAILED = "failed"


@dataclass
class Job:
    id: str
    kind: str  # propagate | localize
    project_id: str
    session_id: str
    state: str = JOB_QUEUED
    failure_reason: str | None = None
    created_at: str = field(default_factory=utc_now_iso)
    started_at: str | None = None
    finished_at: str | None = None
    duration_sec: float | None = None
    progress: float = 0.0
    next_job_id: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "project_id": self.project_id,
            "session_id": self.session_id,
            "state": self.state,
            "failure_reason": self.failure_reason,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "duration_sec": self.duration_sec,
            "progress": self.progress,
            "next_job_id": self.next_job_id,
        }


class SessionCreate(BaseModel):
    frame_id: str
    label: str = Field(min_length=1)
    description: str = ""


class PromptIn(BaseModel):
    u: float
    v: float
    polarity: str | None = None  # omitted: the click-on-mask rule decides


class ServiceState:
    """Everything the handlers share: projects, sessions, jobs, workers."""

    def __init__(self, projects, provider_url: str | None = None, workers: int = 2, tau: float | None = None):
        self.projects: dict[str, Project] = {p.id: p for p in projects}
        self.locks = {pid: threading.RLock() for pid in self.projects}
        self.session_project: dict[str, str] = {}
        self.jobs: dict[str, Job] = {}
        self.jobs_lock = threading.Lock()
        self.executor = ThreadPoolExecutor(max_workers=workers)
        self.segmenter = FallbackSegmenter(**({"tau": tau} if tau is not None else {}))
        self.remote = RemoteProvider(provider_url) if provider_url else None
        self._counter = itertools.count(1)
        for pid, project in self.projects.items():
            for record in project.annotations:
                self.session_project[record.id] = pid

    # -- helpers ---------------------------------------------------------

    def project(self, pid: str) -> Project:
        if pid not in self.projects:
            raise HTTPException(404, f"unknown project {pid!r}")
        return self.projects[pid]

    def session(self, sid: str) -> tuple[Project, AnnotationRecord]:
        pid = self.session_project.get(sid)
        if pid is None:
            raise HTTPException(404, f"unknown session {sid!r}")
        return self.projects[pid], self.projects[pid].annotation(sid)

    def new_id(self, prefix: str) -> str:
        return f"{prefix}-{next(self._counter):04d}"

    def make_job(self, kind: str, project_id: str, session_id: str) -> Job:
        job = Job(id=self.new_id("job"), kind=kind, project_id=project_id, session_id=session_id)
        with self.jobs_lock:
            self.jobs[job.id] = job
        return job

    def frame_image(self, project: Project, frame_id: str):
        frame = project.frame(frame_id)
        return load_image_rgb(project.resolve(frame.image_path))

    def mask_file(self, project: Project, session_id: str, frame_id: str) -> Path:
        rel = f"masks/{session_id}/{frame_id}.png"
        (project.root / "masks" / session_id).mkdir(parents=True, exist_ok=True)
        return project.resolve(rel)

    # -- segmentation ----------------------------------------------------

    def run_segment(self, project: Project, record: AnnotationRecord):
        image = self.frame_image(project, record.frame_id)
        if self.remote is not None:
            bits = self.remote.segment(image, record.prompts, frame_id=record.frame_id)
        else:
            bits = self.segmenter.segment(image, record.prompts)
        return bits

    def run_propagation(self, project: Project, record: AnnotationRecord):
        """Forward propagation from the anchor over the ordered frame list."""
        frame_ids = [f.frame_id for f in project.frames]
        start = frame_ids.index(record.frame_id)
        run = frame_ids[start:]

        from .images import load_mask_png

        anchor_bits = load_mask_png(project.resolve(record.mask_paths[record.frame_id]))
        if self.remote is not None:
            frame = project.frame(record.frame_id)
            masks, reason = self.remote.propagate_refs(
                record.id, record.frame_id, anchor_bits, run[1:],
                frame_size=(frame.model.width, frame.model.height),
            )
            produced = [(record.frame_id, anchor_bits)] + masks
        else:
            from .segmentation import AnnotationSession, propagate

            session = AnnotationSession(
                id=record.id,
                frame_id=record.frame_id,
                label=record.label,
                description=record.description,
                prompts=list(record.prompts),
                current_mask=SegMask(bits=anchor_bits, frame_id=record.frame_id),
                state="confirmed",
            )
            frames = [(fid, self.frame_image(project, fid)) for fid in run]
            outcome = propagate(session, frames, segmenter=self.segmenter)
            produced = [(fid, m.bits) for fid, m in outcome.masks.items()]
            reason = outcome.termination_reason
        for fid, bits in produced:
            path = self.mask_file(project, record.id, fid)
            save_mask_png(path, bits)
            record.mask_paths[fid] = str(path.relative_to(project.root))
        record.state = "propagated"
        return reason


def _job_runner(state: ServiceState, job: Job, fn):
    import time

    def run():
        t0 = time.monotonic()
        job.state = JOB_RUNNING
        job.started_at = utc_now_iso()
        try:
            fn(job)
            if job.state == JOB_RUNNING:
                job.state = JOB_DONE
                job.progress = 1.0
        except Exception as exc:  # terminal failure, reason surfaced via polling
            job.state = JOB_FAILED
            job.failure_reason = job.failure_reason or str(exc)
        job.finished_at = utc_now_iso()
        job.duration_sec = round(time.monotonic() - t0, 3)

    state.executor.submit(run)


def create_app(
    projects,
    provider_url: str | None = None,
    workers: int = 2,
    cors_origin: str = "*",
    tau: float | None = None,
) -> FastAPI:
    state = ServiceState(projects, provider_url=provider_url, workers=workers, tau=tau)
    app = FastAPI(title="poicast annotation service")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin] if cors_origin != "*" else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def session_payload(project: Project, record: AnnotationRecord) -> dict:
        payload = {
            "id": record.id,
            "project_id": project.id,
            "frame_id": record.frame_id,
            "label": record.label,
            "description": record.description,
            "state": record.state,
            "prompts": [p.to_dict() for p in record.prompts],
            "mask_rle": None,
            "width": None,
            "height": None,
        }
        anchor_rel = record.mask_paths.get(record.frame_id)
        if anchor_rel and project.resolve(anchor_rel).exists():
            from .images import load_mask_png

            bits = load_mask_png(project.resolve(anchor_rel))
            payload["mask_rle"] = encode_mask(bits)
            payload["height"], payload["width"] = bits.shape
        return payload

    @app.get("/projects")
    def list_projects():
        return [
            {
                "id": p.id,
                "name": p.name,
                "frame_count": len(p.frames),
                "annotation_count": len(p.annotations),
                "poi_count": len(p.pois),
                "mesh_url": f"/projects/{p.id}/files/{p.mesh_path}",
            }
            for p in state.projects.values()
        ]

    @app.get("/projects/{pid}/frames")
    def list_frames(pid: str):
        project = state.project(pid)
        return [
            {
                "frame_id": f.frame_id,
                "timestamp_sec": f.timestamp_sec,
                "width": f.model.width,
                "height": f.model.height,
                "has_pose": f.has_pose,
                "image_url": f"/projects/{pid}/files/{f.image_path}",
            }
            for f in project.frames
        ]

    @app.get("/projects/{pid}/files/{relpath:path}")
    def project_file(pid: str, relpath: str):
        project = state.project(pid)
        target = (project.root / relpath).resolve()
        if not str(target).startswith(str(project.root.resolve())):
            raise HTTPException(404, "path escapes the project directory")
        if not target.is_file():
            raise HTTPException(404, f"no such file {relpath!r}")
        return FileResponse(target)

    @app.get("/projects/{pid}/pois")
    def list_pois(pid: str):
        project = state.project(pid)
        return [p.to_dict() for p in project.pois]

    @app.get("/projects/{pid}/sessions")
    def list_sessions(pid: str):
        project = state.project(pid)
        return [session_payload(project, a) for a in project.annotations]

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        project, record = state.session(sid)
        payload = session_payload(project, record)
        # per-frame 2D boxes of the propagated masks, for thumbnail overlays
        from .images import load_mask_png

        boxes = {}
        for fid, rel in sorted(record.mask_paths.items()):
            path = project.resolve(rel)
            if not path.exists():
                continue
            bits = load_mask_png(path)
            rows, cols = bits.nonzero()
            if len(rows) == 0:
                continue
            boxes[fid] = {
                "u_min": int(cols.min()),
                "v_min": int(rows.min()),
                "u_max": int(cols.max()),
                "v_max": int(rows.max()),
                "area": int(len(rows)),
            }
        payload["frame_boxes"] = boxes
        return payload

    @app.get("/projects/{pid}/jobs")
    def list_jobs(pid: str):
        state.project(pid)
        with state.jobs_lock:
            return [j.to_dict() for j in state.jobs.values() if j.project_id == pid]

    @app.post("/projects/{pid}/sessions")
    def create_session(pid: str, body: SessionCreate):
        project = state.project(pid)
        with state.locks[pid]:
            try:
                project.frame(body.frame_id)
            except KeyError:
                raise HTTPException(404, f"unknown frame {body.frame_id!r}")
            record = AnnotationRecord(
                id=state.new_id("session"),
                frame_id=body.frame_id,
                label=body.label,
                description=body.description,
                state="drafting",
            )
            project.annotations.append(record)
            state.session_project[record.id] = pid
            project.touch()
            persist_project(project)
        return session_payload(project, record)

    @app.post("/sessions/{sid}/prompts")
    def add_prompt(sid: str, body: PromptIn):
        project, record = state.session(sid)
        frame = project.frame(record.frame_id)
        if not (0 <= body.u < frame.model.width and 0 <= body.v < frame.model.height):
            raise HTTPException(422, f"prompt ({body.u}, {body.v}) outside the frame")
        polarity = body.polarity
        if polarity is None:
            # the interface rule: clicking on the mask negates, off it affirms
            anchor_rel = record.mask_paths.get(record.frame_id)
            on_mask = False
            if anchor_rel and project.resolve(anchor_rel).exists():
                from .images import load_mask_png

                bits = load_mask_png(project.resolve(anchor_rel))
                on_mask = bool(bits[int(body.v), int(body.u)])
            polarity = "negative" if on_mask else "positive"
        if polarity not in ("positive", "negative"):
            raise HTTPException(422, f"bad polarity {polarity!r}")
        with state.locks[project.id]:
            record.prompts.append(PromptPoint(pixel=Pixel(body.u, body.v), polarity=polarity))
            try:
                bits = state.run_segment(project, record)
            except NoPositivePromptError as exc:
                record.prompts.pop()
                raise HTTPException(422, str(exc))
            except ProviderUnavailableError as exc:
                record.prompts.pop()
                raise HTTPException(503, str(exc))
            path = state.mask_file(project, record.id, record.frame_id)
            save_mask_png(path, bits)
            record.mask_paths[record.frame_id] = str(path.relative_to(project.root))
            record.state = "drafting"
            project.touch()
            persist_project(project)
        return session_payload(project, record)

    @app.post("/sessions/{sid}/clear")
    def clear_session(sid: str):
        project, record = state.session(sid)
        with state.locks[project.id]:
            record.prompts = []
            record.mask_paths.pop(record.frame_id, None)
            record.state = "drafting"
            project.touch()
            persist_project(project)
        return session_payload(project, record)

    @app.post("/sessions/{sid}/confirm")
    def confirm_session(sid: str):
        project, record = state.session(sid)
        with state.locks[project.id]:
            anchor_rel = record.mask_paths.get(record.frame_id)
            if not anchor_rel or not project.resolve(anchor_rel).exists():
                raise HTTPException(409, "session has no mask to confirm")
            from .images import load_mask_png

            if not load_mask_png(project.resolve(anchor_rel)).any():
                raise HTTPException(409, "session mask is empty")
            existing = [
                j for j in state.jobs.values()
                if j.session_id == sid and j.kind == "propagate"
            ]
            if record.state in ("confirmed", "propagated") and existing:
                return {"job_id": existing[0].id}
            record.state = "confirmed"
            project.touch()
            persist_project(project)
            job = state.make_job("propagate", project.id, sid)

        def run_propagate(j: Job):
            with state.locks[project.id]:
                try:
                    reason = state.run_propagation(project, record)
                except ProviderUnavailableError as exc:
                    reason = EXIT_PROVIDER
                    j.failure_reason = str(exc)
                project.touch()
                persist_project(project)
            if reason == EXIT_PROVIDER and len(record.mask_paths) <= 1:
                j.state = JOB_FAILED
                j.failure_reason = j.failure_reason or "provider failed during propagation"
                return
            j.progress = 0.5
            chained = state.make_job("localize", project.id, sid)
            j.next_job_id = chained.id

            def run_localize(j2: Job):
                with state.locks[project.id]:
                    outcome = localize_annotation(project, record)
                    by_id = {p.id: p for p in project.pois if p.id != outcome.poi.id}
                    project.pois = sorted(
                        list(by_id.values()) + [outcome.poi], key=lambda p: p.id
                    )
                    project.touch()
                    persist_project(project)
                if outcome.poi.status == STATUS_FAILED:
                    j2.state = JOB_FAILED
                    j2.failure_reason = outcome.poi.failure_reason

            _job_runner(state, chained, run_localize)

        _job_runner(state, job, run_propagate)
        return {"job_id": job.id}

    @app.get("/jobs/{jid}")
    def get_job(jid: str):
        with state.jobs_lock:
            if jid not in state.jobs:
                raise HTTPException(404, f"unknown job {jid!r}")
            return state.jobs[jid].to_dict()

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str):
        project, record = state.session(sid)
        with state.locks[project.id]:
            project.annotations = [a for a in project.annotations if a.id != sid]
            project.pois = [p for p in project.pois if p.id != sid]
            state.session_project.pop(sid, None)
            project.touch()
            persist_project(project)
        return {"deleted": sid}

    return app


# ---------------------------------------------------------------------------
# stub provider: the wire contract served by the built-in segmenter

class SegmentRequest(BaseModel):
    frame_id: str = ""
    image_b64: str | None = None
    image_ref: str | None = None
    points: list[dict]


class PropagateRequest(BaseModel):
    session_id: str
    anchor_frame_id: str
    mask_rle: list[int] | None = None
    mask_png_b64: str | None = None  # raw PNG as an alternative to RLE
    width: int | None = None
    height: int | None = None
    frame_refs: list[str] = []


def create_provider_app(frames_dir=None, tau: float = 24.0) -> FastAPI:
    """A provider-contract server backed by the fallback segmenter.

    Stands in for a hosted model during tests and local development;
    `frames_dir` resolves image_ref / frame_refs to PNG files.
    """
    from .images import decode_png_b64
    from .rle import decode_mask

    app = FastAPI(title="poicast stub segmentation provider")
    segmenter = FallbackSegmenter(tau=tau)
    root = Path(frames_dir) if frames_dir else None

    def resolve_image(ref: str | None, b64: str | None):
        if b64:
            return decode_png_b64(b64)
        if ref and root is not None:
            path = root / ref
            if not path.exists():
                path = root / f"{ref}.png"
            if path.exists():
                return load_image_rgb(path)
        raise HTTPException(422, "no usable image_b64 or image_ref")

    @app.post("/segment")
    def segment(body: SegmentRequest):
        prompts = []
        for p in body.points:
            try:
                prompts.append(PromptPoint(pixel=Pixel(float(p["u"]), float(p["v"])), polarity=str(p["polarity"])))
            except (KeyError, ValueError) as exc:
                raise HTTPException(422, f"bad prompt: {exc}")
        image = resolve_image(body.image_ref, body.image_b64)
        try:
            bits = segmenter.segment(image, prompts)
        except (NoPositivePromptError, ValueError) as exc:
            raise HTTPException(422, str(exc))
        return {"mask_rle": encode_mask(bits), "width": bits.shape[1], "height": bits.shape[0]}

    @app.post("/propagate")
    def do_propagate(body: PropagateRequest):
        if root is None:
            raise HTTPException(503, "provider has no frame storage configured")
        if body.mask_png_b64 is not None:
            import base64
            import io

            from PIL import Image

            raw = base64.b64decode(body.mask_png_b64.encode("ascii"))
            prev = np.asarray(Image.open(io.BytesIO(raw)).convert("L")) > 0
            h, w = prev.shape
        elif body.mask_rle is not None:
            if body.width and body.height:
                w, h = body.width, body.height
            else:
                first = resolve_image(body.anchor_frame_id, None)
                h, w = first.shape[:2]
            try:
                prev = decode_mask(body.mask_rle, w, h)
            except ValueError as exc:
                raise HTTPException(422, str(exc))
        else:
            raise HTTPException(422, "need mask_rle or mask_png_b64")
        masks = []
        reason = EXIT_SEQUENCE
        from .segmentation import MIN_TRACK_AREA

        reference = None
        anchor_image = resolve_image(body.anchor_frame_id, None)
        if prev.any() and anchor_image.shape[:2] == prev.shape:
            reference = FallbackSegmenter.region_color(anchor_image, prev)
        for ref in body.frame_refs:
            image = resolve_image(ref, None)
            bits = segmenter.track(image, prev, reference_color=reference)
            if int(bits.sum()) < MIN_TRACK_AREA:
                reason = "object_exited"
                break
            masks.append({"frame_id": ref, "mask_rle": encode_mask(bits)})
            prev = bits
        return {"masks": masks, "termination_reason": reason}

    return app
