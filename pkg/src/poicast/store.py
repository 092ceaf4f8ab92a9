"""Project manifest, importers, and persistence.

A project is a single JSON manifest plus files referenced by paths relative
to the manifest directory: the reconstructed mesh, per-frame images, depth
maps, stored annotation masks, and localization results. The manifest is
the source of truth and is written through on every mutation.

Loading is lazy about referenced files: a missing depth or image flags the
frame but does not fail the load; localization later fails fast for that
frame only.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image

from .camera import CameraModel, CameraPose
from .casting import CastConfig
from .clustering import ClusterConfig, PoiInstance
from .errors import (
    DimensionMismatchError,
    ParseError,
    SchemaVersionMismatchError,
    UnsupportedCameraModelError,
    UnsupportedFormatError,
)
from .mesh import AXIS_FLIP_MATRIX, TriMesh, load_mesh
from .projection import DepthMap
from .segmentation import PromptPoint

SCHEMA_VERSION = 1
FRAME_INTERVAL_S = 0.5  # ingestion convention: frames extracted at 2 FPS
IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class FrameRecord:
    frame_id: str
    image_path: str
    model: CameraModel
    pose: CameraPose | None = None
    depth_path: str | None = None
    timestamp_sec: float = 0.0

    @property
    def has_pose(self) -> bool:
        return self.pose is not None

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "image_path": self.image_path,
            "depth_path": self.depth_path,
            "timestamp_sec": self.timestamp_sec,
            "model": self.model.to_dict(),
            "pose": self.pose.to_dict() if self.pose is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrameRecord":
        return cls(
            frame_id=str(d["frame_id"]),
            image_path=str(d["image_path"]),
            depth_path=d.get("depth_path"),
            timestamp_sec=float(d.get("timestamp_sec", 0.0)),
            model=CameraModel.from_dict(d["model"]),
            pose=CameraPose.from_dict(d["pose"]) if d.get("pose") else None,
        )


@dataclass
class AnnotationRecord:
    """A confirmed (or drafted) annotation persisted with its mask files."""

    id: str
    frame_id: str
    label: str
    description: str = ""
    prompts: list[PromptPoint] = field(default_factory=list)
    state: str = "drafting"
    mask_paths: dict[str, str] = field(default_factory=dict)  # frame_id -> relpath

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "frame_id": self.frame_id,
            "label": self.label,
            "description": self.description,
            "prompts": [p.to_dict() for p in self.prompts],
            "state": self.state,
            "mask_paths": dict(sorted(self.mask_paths.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotationRecord":
        return cls(
            id=str(d["id"]),
            frame_id=str(d["frame_id"]),
            label=str(d.get("label", "")),
            description=str(d.get("description", "")),
            prompts=[PromptPoint.from_dict(p) for p in d.get("prompts", [])],
            state=str(d.get("state", "drafting")),
            mask_paths={str(k): str(v) for k, v in d.get("mask_paths", {}).items()},
        )


@dataclass
class Project:
    root: Path
    id: str
    name: str
    mesh_path: str
    frames: list[FrameRecord] = field(default_factory=list)
    annotations: list[AnnotationRecord] = field(default_factory=list)
    pois: list[PoiInstance] = field(default_factory=list)
    cast_config: CastConfig = field(default_factory=CastConfig)
    cluster_config: ClusterConfig = field(default_factory=ClusterConfig)
    axis_flip: bool = False
    created_at: str = ""
    updated_at: str = ""
    _mesh_cache: TriMesh | None = field(default=None, repr=False)

    def touch(self) -> None:
        self.updated_at = utc_now_iso()

    def frame(self, frame_id: str) -> FrameRecord:
        for f in self.frames:
            if f.frame_id == frame_id:
                return f
        raise KeyError(f"unknown frame {frame_id!r}")

    def annotation(self, annotation_id: str) -> AnnotationRecord:
        for a in self.annotations:
            if a.id == annotation_id:
                return a
        raise KeyError(f"unknown annotation {annotation_id!r}")

    def resolve(self, relpath: str) -> Path:
        return self.root / relpath

    def mesh(self) -> TriMesh:
        """Load (and cache) the project mesh, applying the recorded axis flip."""
        if self._mesh_cache is None:
            m = load_mesh(self.resolve(self.mesh_path))
            if self.axis_flip:
                m = m.transformed(AXIS_FLIP_MATRIX)
            self._mesh_cache = m
        return self._mesh_cache

    def missing_pose_frames(self) -> list[str]:
        return [f.frame_id for f in self.frames if not f.has_pose]

    def to_manifest(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "name": self.name,
            "mesh_path": self.mesh_path,
            "axis_flip": self.axis_flip,
            "cast_config": self.cast_config.to_dict(),
            "cluster_config": self.cluster_config.to_dict(),
            "frames": [f.to_dict() for f in self.frames],
            "annotations": [a.to_dict() for a in self.annotations],
            "pois": [p.to_dict() for p in self.pois],
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


def persist_project(project: Project) -> Path:
    """Write the manifest atomically. Timestamps are the caller's business."""
    path = project.root / "manifest.json"
    tmp = path.with_suffix(".json.tmp")
    with open(tmp, "w") as fh:
        json.dump(project.to_manifest(), fh, indent=2)
        fh.write("\n")
    tmp.replace(path)
    return path


def load_project(path) -> Project:
    """Load a project from its manifest (or a directory containing one)."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    with open(path) as fh:
        data = json.load(fh)
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatchError(
            f"manifest schema {version!r}, this build reads {SCHEMA_VERSION}"
        )
    project = Project(
        root=path.parent,
        id=str(data["id"]),
        name=str(data.get("name", data["id"])),
        mesh_path=str(data["mesh_path"]),
        frames=[FrameRecord.from_dict(f) for f in data.get("frames", [])],
        annotations=[AnnotationRecord.from_dict(a) for a in data.get("annotations", [])],
        pois=[PoiInstance.from_dict(p) for p in data.get("pois", [])],
        cast_config=CastConfig.from_dict(data.get("cast_config", {})),
        cluster_config=ClusterConfig.from_dict(data.get("cluster_config", {})),
        axis_flip=bool(data.get("axis_flip", False)),
        created_at=str(data.get("created_at", "")),
        updated_at=str(data.get("updated_at", "")),
    )
    return project


def dangling_paths(project: Project) -> list[str]:
    """Referenced files that do not exist on disk (warnings, not errors)."""
    missing = []
    if not project.resolve(project.mesh_path).exists():
        missing.append(project.mesh_path)
    for f in project.frames:
        if not project.resolve(f.image_path).exists():
            missing.append(f.image_path)
        if f.depth_path and not project.resolve(f.depth_path).exists():
            missing.append(f.depth_path)
    for a in project.annotations:
        for p in a.mask_paths.values():
            if not project.resolve(p).exists():
                missing.append(p)
    return missing


# ---------------------------------------------------------------------------
# camera pose text interchange (cameras.txt / images.txt)

def read_cameras_text(path) -> dict[int, CameraModel]:
    """Parse `CAM_ID MODEL W H params...` lines (PINHOLE / SIMPLE_PINHOLE)."""
    cameras: dict[int, CameraModel] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                cam_id = int(parts[0])
                model = parts[1]
                width = int(parts[2])
                height = int(parts[3])
                params = [float(x) for x in parts[4:]]
            except (ValueError, IndexError):
                raise ParseError("malformed camera record", path=str(path), line=lineno)
            if model == "PINHOLE":
                if len(params) != 4:
                    raise ParseError("PINHOLE needs fx fy cx cy", path=str(path), line=lineno)
                fx, fy, cx, cy = params
            elif model == "SIMPLE_PINHOLE":
                if len(params) != 3:
                    raise ParseError("SIMPLE_PINHOLE needs f cx cy", path=str(path), line=lineno)
                f, cx, cy = params
                fx = fy = f
            else:
                raise UnsupportedCameraModelError(
                    f"{path}:{lineno}: camera model {model!r} carries distortion; "
                    "inputs must be pre-undistorted to PINHOLE or SIMPLE_PINHOLE"
                )
            cameras[cam_id] = CameraModel(fx=fx, fy=fy, cx=cx, cy=cy, width=width, height=height)
    return cameras


def read_images_text(path) -> dict[str, tuple[CameraPose, int]]:
    """Parse image records: name -> (pose, camera id). Points lines are skipped."""
    images: dict[str, tuple[CameraPose, int]] = {}
    with open(path) as fh:
        lineno = 0
        while True:
            line = fh.readline()
            if not line:
                break
            lineno += 1
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) < 10:
                raise ParseError("image record needs 10 fields", path=str(path), line=lineno)
            try:
                qw, qx, qy, qz = (float(x) for x in parts[1:5])
                tx, ty, tz = (float(x) for x in parts[5:8])
                cam_id = int(parts[8])
            except ValueError:
                raise ParseError("malformed image record", path=str(path), line=lineno)
            name = parts[9]
            pose = CameraPose.from_quaternion(qw, qx, qy, qz, tx, ty, tz)
            images[name] = (pose, cam_id)
            fh.readline()  # the 2-D points line is ignored
            lineno += 1
    return images


def import_colmap_text(cameras_file, images_file):
    """Load the camera-pose text interchange; returns (cameras, images)."""
    return read_cameras_text(cameras_file), read_images_text(images_file)


# ---------------------------------------------------------------------------
# depth map files

def read_pfm(path) -> np.ndarray:
    """Grayscale PFM ('Pf'); rows are stored bottom-up, scale sign = endianness."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"Pf":
            raise UnsupportedFormatError(f"{path}: not a grayscale PFM (header {magic!r})")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        endian = "<" if scale < 0 else ">"
        data = np.frombuffer(fh.read(4 * width * height), dtype=endian + "f4", count=width * height)
    return np.flipud(data.reshape(height, width)).astype(np.float64)


def write_pfm(path, values: np.ndarray) -> None:
    arr = np.asarray(values, dtype=np.float32)
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{arr.shape[1]} {arr.shape[0]}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.flipud(arr).astype("<f4").tobytes())


def load_depth_map(path) -> DepthMap:
    """Load a PFM or 16-bit PNG (+ sidecar {scale, offset}) depth file.

    Unusable pixels (code 0 in PNG, non-finite or non-positive in PFM) come
    out as the 0 sentinel.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".pfm":
        values = read_pfm(path)
        values[~np.isfinite(values)] = 0.0
        values[values < 0] = 0.0
        return DepthMap(values=values)
    if suffix == ".png":
        img = Image.open(path)
        codes = np.asarray(img, dtype=np.uint32)
        if codes.ndim != 2:
            raise UnsupportedFormatError(f"{path}: depth PNG must be single-channel")
        sidecar = path.with_suffix(path.suffix + ".json")
        if not sidecar.exists():
            raise UnsupportedFormatError(f"{path}: missing sidecar {sidecar.name}")
        with open(sidecar) as fh:
            meta = json.load(fh)
        scale = float(meta["scale"])
        offset = float(meta.get("offset", 0.0))
        values = codes.astype(np.float64) * scale + offset
        values[codes == 0] = 0.0
        values[values < 0] = 0.0
        return DepthMap(values=values)
    raise UnsupportedFormatError(f"{path}: depth must be .pfm or 16-bit .png")


def write_depth_png(path, codes: np.ndarray, scale: float, offset: float = 0.0) -> None:
    arr = np.asarray(codes, dtype=np.uint16)
    Image.fromarray(arr).save(path)
    sidecar = Path(str(path) + ".json")
    with open(sidecar, "w") as fh:
        json.dump({"scale": scale, "offset": offset}, fh)


def load_frame_depth(project: Project, frame: FrameRecord) -> DepthMap:
    if not frame.depth_path:
        raise FileNotFoundError(f"frame {frame.frame_id} has no depth map")
    depth = load_depth_map(project.resolve(frame.depth_path))
    if (depth.height, depth.width) != (frame.model.height, frame.model.width):
        raise DimensionMismatchError(
            f"depth {depth.width}x{depth.height} vs frame "
            f"{frame.model.width}x{frame.model.height}"
        )
    return depth


# ---------------------------------------------------------------------------
# project creation

def _copy_into(src: Path, dest_dir: Path) -> str:
    dest_dir.mkdir(parents=True, exist_ok=True)
    dest = dest_dir / src.name
    if src.resolve() != dest.resolve():
        shutil.copy2(src, dest)
    return dest.name


def init_project(
    directory,
    mesh_file,
    frames_dir,
    colmap_dir=None,
    depths_dir=None,
    axis_flip: bool = False,
    name: str | None = None,
) -> tuple[Project, list[str]]:
    """Assemble a project directory from reconstruction outputs.

    Returns (project, warnings). Frames found in the frames directory but
    absent from the pose export are kept with pose=None and reported; they
    are skipped by localization later.
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    mesh_file = Path(mesh_file)
    frames_dir = Path(frames_dir)
    warnings: list[str] = []

    mesh_rel = _copy_into(mesh_file, root)

    image_files = sorted(
        p for p in frames_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS
    )
    if not image_files:
        raise FileNotFoundError(f"no frame images in {frames_dir}")

    cameras: dict[int, CameraModel] = {}
    images: dict[str, tuple[CameraPose, int]] = {}
    if colmap_dir is not None:
        colmap_dir = Path(colmap_dir)
        cameras, images = import_colmap_text(
            colmap_dir / "cameras.txt", colmap_dir / "images.txt"
        )
    if not cameras:
        # no pose export: derive a nominal model from the first image
        with Image.open(image_files[0]) as im:
            w, h = im.size
        cameras = {0: CameraModel(fx=max(w, h), fy=max(w, h), cx=w / 2, cy=h / 2, width=w, height=h)}
        warnings.append("no camera export given; using a nominal pinhole model")
    default_model = cameras[sorted(cameras)[0]]

    flip = AXIS_FLIP_MATRIX
    frames: list[FrameRecord] = []
    for index, img in enumerate(image_files):
        rel = "frames/" + _copy_into(img, root / "frames")
        pose = None
        model = default_model
        if img.name in images:
            pose, cam_id = images[img.name]
            model = cameras.get(cam_id, default_model)
            if axis_flip:
                # world' = M world  =>  R' = R M^T, translation unchanged
                pose = CameraPose(rotation=pose.rotation @ flip.T, translation=pose.translation)
        else:
            warnings.append(f"frame {img.name}: no pose in reconstruction export")
        depth_rel = None
        if depths_dir is not None:
            for candidate in (Path(depths_dir) / (img.stem + ".pfm"), Path(depths_dir) / (img.stem + ".png")):
                if candidate.exists():
                    depth_rel = "depths/" + _copy_into(candidate, root / "depths")
                    if candidate.suffix == ".png":
                        sidecar = Path(str(candidate) + ".json")
                        if sidecar.exists():
                            _copy_into(sidecar, root / "depths")
                    break
            if depth_rel is None:
                warnings.append(f"frame {img.name}: no depth map found")
        frames.append(
            FrameRecord(
                frame_id=img.stem,
                image_path=rel,
                model=model,
                pose=pose,
                depth_path=depth_rel,
                timestamp_sec=index * FRAME_INTERVAL_S,
            )
        )

    now = utc_now_iso()
    project = Project(
        root=root,
        id=root.name,
        name=name or root.name,
        mesh_path=mesh_rel,
        frames=frames,
        axis_flip=axis_flip,
        created_at=now,
        updated_at=now,
    )
    persist_project(project)
    return project, warnings


# ---------------------------------------------------------------------------
# export

def export_poi_report(project: Project, out_dir) -> dict:
    """Write pois.json (instance array), report.json (counts + success rate),
    and boxes.obj (one 8-vertex/12-triangle box per cast instance)."""
    from .box import box_mesh  # local import to keep module load light
    from .mesh import save_obj

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    pois = [p.to_dict() for p in project.pois]
    with open(out / "pois.json", "w") as fh:
        json.dump(pois, fh, indent=2)
        fh.write("\n")

    total = len(project.pois)
    by_status: dict[str, int] = {}
    for p in project.pois:
        by_status[p.status] = by_status.get(p.status, 0) + 1
    by_reason: dict[str, int] = {}
    for p in project.pois:
        if p.status == "failed" and p.failure_reason:
            by_reason[p.failure_reason] = by_reason.get(p.failure_reason, 0) + 1
    cast = by_status.get("cast", 0)
    report = {
        "project": project.id,
        "total_annotations": total,
        "status_counts": dict(sorted(by_status.items())),
        "failure_reasons": dict(sorted(by_reason.items())),
        "success_rate_percent": round(100.0 * cast / total, 2) if total else None,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")

    verts_all = []
    tris_all = []
    groups = []
    offset = 0
    for p in project.pois:
        if p.status != "cast" or p.box is None:
            continue
        v, t = box_mesh(p.box)
        lo = len(tris_all)
        verts_all.extend(v)
        tris_all.extend((t + offset).tolist())
        groups.append((p.id, (lo, lo + len(t))))
        offset += len(v)
    save_obj(
        out / "boxes.obj",
        np.asarray(verts_all, dtype=np.float64).reshape(-1, 3),
        np.asarray(tris_all, dtype=np.int64).reshape(-1, 3),
        groups=groups,
    )
    return report


# ---------------------------------------------------------------------------
# optional per-project key/value configuration file

def load_project_config(directory) -> dict:
    """Read poicast.toml next to the manifest; flat keys mirror the configs."""
    path = Path(directory) / "poicast.toml"
    if not path.exists():
        return {}
    try:
        import tomllib  # py3.11+
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def apply_config_overrides(project: Project, overrides: dict) -> None:
    """Fold flat config keys into the project's cast/cluster configs."""
    cast_fields = set(CastConfig().to_dict())
    cluster_fields = set(ClusterConfig().to_dict())
    cast_kwargs = project.cast_config.to_dict()
    cluster_kwargs = project.cluster_config.to_dict()
    for key, value in overrides.items():
        if key in cast_fields:
            cast_kwargs[key] = value
        elif key in cluster_fields:
            cluster_kwargs[key] = value
    project.cast_config = CastConfig.from_dict(cast_kwargs)
    project.cluster_config = ClusterConfig.from_dict(cluster_kwargs)
