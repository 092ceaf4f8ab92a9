"""Synthetic indoor scenes with exact ground truth, for end-to-end scoring.

Builds rectangular room shells with axis-aligned object boxes, renders
exact per-pixel depth and silhouette masks along scripted camera paths, and
scores recovered boxes against the ground truth with a deterministic
Monte-Carlo volume IoU.

Rendering is analytic ray casting (Moller-Trumbore against every candidate
triangle, nearest hit); it deliberately shares no code with the production
spatial index so it can serve as an independent oracle. A hidden positive
factor g multiplies all emitted depths, simulating the unknown global scale
of monocular depth: a correct scale search must then settle at 1/g.

The "reconstructed" mesh handed to the pipeline may differ from the
rendered scene: a seeded fraction of faces can be removed (hole defects)
and whole regions carved out (missing geometry), while images, depths, and
masks always come from the intact scene, the way real footage disagrees
with an imperfect reconstruction.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy.stats import qmc

from .box import OrientedBox
from .camera import CameraModel, CameraPose, look_at_pose
from .projection import DepthMap, SegMask

ZNEAR = 1e-4

ROOM_SIZE = (10.0, 8.0, 3.0)
SHELL_CELL = 0.5
BOX_CELL = 0.25
FIXTURE_MODEL = dict(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)
POI_PALETTE = [(202, 52, 51), (52, 160, 82), (58, 92, 203), (212, 160, 48)]
SHELL_COLOR = (178, 178, 178)
VOID_COLOR = (0, 0, 0)


# ---------------------------------------------------------------------------
# geometry construction

def _grid_quad(origin, e1, e2, n1, n2):
    """Tessellate the quad origin + s*e1 + t*e2 into n1*n2 cells (2 tris each)."""
    origin = np.asarray(origin, dtype=np.float64)
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    s = np.linspace(0.0, 1.0, n1 + 1)
    t = np.linspace(0.0, 1.0, n2 + 1)
    verts = (origin[None, None, :] + s[:, None, None] * e1 + t[None, :, None] * e2).reshape(-1, 3)
    tris = []
    for i in range(n1):
        for j in range(n2):
            a = i * (n2 + 1) + j
            b = (i + 1) * (n2 + 1) + j
            tris.append((a, b, b + 1))
            tris.append((a, b + 1, a + 1))
    return verts, np.asarray(tris, dtype=np.int64)


def _merge(parts):
    verts = []
    tris = []
    offset = 0
    for v, t in parts:
        verts.append(v)
        tris.append(t + offset)
        offset += len(v)
    return np.concatenate(verts, axis=0), np.concatenate(tris, axis=0)


def _box_faces(lo, hi, cell):
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    size = hi - lo
    parts = []
    for axis in range(3):
        u = (axis + 1) % 3
        v = (axis + 2) % 3
        nu = max(1, int(round(size[u] / cell)))
        nv = max(1, int(round(size[v] / cell)))
        e1 = np.zeros(3); e1[u] = size[u]
        e2 = np.zeros(3); e2[v] = size[v]
        for side_val in (lo[axis], hi[axis]):
            origin = lo.copy()
            origin[axis] = side_val
            parts.append(_grid_quad(origin, e1, e2, nu, nv))
    return _merge(parts)


def room_shell(size=ROOM_SIZE, cell=SHELL_CELL):
    """Closed rectangular shell [0,sx]x[0,sy]x[0,sz], grid tessellated."""
    return _box_faces((0.0, 0.0, 0.0), size, cell)


@dataclass
class SynthScene:
    """Ground-truth scene: intact geometry, POI boxes, camera path, hidden scale."""

    vertices: np.ndarray
    triangles: np.ndarray
    tri_poi: np.ndarray  # per-triangle owner: -1 = shell, k = poi index
    poi_boxes: list[OrientedBox]
    poi_labels: list[str]
    models: list[CameraModel]
    poses: list[CameraPose]
    hidden_depth_scale: float = 1.0
    depth_jitter: float = 0.0  # optional multiplicative noise amplitude, off by default
    recon_triangles: np.ndarray | None = None  # defective copy handed to the pipeline

    def __post_init__(self):
        if not self.hidden_depth_scale > 0:
            raise ValueError("hidden depth scale must be positive")
        room_lo = self.vertices.min(axis=0)
        room_hi = self.vertices.max(axis=0)
        for b in self.poi_boxes:
            if ((b.corners() < room_lo - 1e-9) | (b.corners() > room_hi + 1e-9)).any():
                raise ValueError("POI box extends outside the room shell")
        for p in self.poses:
            c = p.camera_center()
            if ((c < room_lo) | (c > room_hi)).any():
                raise ValueError("camera pose outside the room")
        if self.recon_triangles is None:
            self.recon_triangles = self.triangles

    @property
    def n_frames(self) -> int:
        return len(self.poses)

    def frame_id(self, index: int) -> str:
        return f"frame_{index:03d}"


def _orbit_path(target, radii, azimuths_deg, height):
    model = CameraModel(**FIXTURE_MODEL)
    models = []
    poses = []
    tx, ty, tz = target
    for r, az in zip(radii, azimuths_deg):
        a = np.deg2rad(az)
        eye = (tx + r * np.cos(a), ty + r * np.sin(a), height)
        poses.append(look_at_pose(eye, (tx, ty, tz)))
        models.append(model)
    return models, poses


def standard_scene(
    hidden_scale: float = 1.0,
    hole_fraction: float = 0.0,
    seed: int = 0,
    extra_poi: bool = False,
    carve_extra: bool = False,
) -> SynthScene:
    """The in-repo reference fixture: 10x8x3 room, unit POI box on the floor,
    6-pose orbit (one distant head-on view, five closer ring views).

    `extra_poi` adds a second box; `carve_extra` then deletes that box and
    the floor around it from the reconstructed mesh, producing an annotation
    with no geometry to land on.
    """
    parts = [room_shell()]
    owners = [np.full(len(parts[0][1]), -1, dtype=np.int64)]
    boxes = [OrientedBox.axis_aligned((7.0, 3.5, 0.0), (8.0, 4.5, 1.0))]
    labels = ["box"]
    if extra_poi:
        boxes.append(OrientedBox.axis_aligned((4.5, 6.0, 0.0), (5.5, 7.0, 1.0)))
        labels.append("cabinet")
    for k, b in enumerate(boxes):
        lo = b.center - b.half_extents
        hi = b.center + b.half_extents
        v, t = _box_faces(lo, hi, BOX_CELL)
        parts.append((v, t))
        owners.append(np.full(len(t), k, dtype=np.int64))
    verts, tris = _merge(parts)
    tri_poi = np.concatenate(owners)

    # every pose faces one box side head-on (multi-frame contact then covers
    # opposing faces without oblique smearing); the distant first view keeps
    # single-frame scale recovery sharp
    target = (7.5, 4.0, 0.5)
    models, poses = _orbit_path(
        target,
        radii=[6.9, 3.5, 3.5, 2.0, 2.6, 2.6],
        azimuths_deg=[180.0, 90.0, 270.0, 0.0, 90.0, 270.0],
        height=0.9,
    )

    keep = np.ones(len(tris), dtype=bool)
    if carve_extra and extra_poi:
        # the reconstruction never built the cabinet: delete it and every
        # surface within reach of an overshooting cast cloud
        keep &= tri_poi != 1
        centroids = verts[tris].mean(axis=1)
        keep &= np.linalg.norm(centroids - np.array([5.0, 6.5, 0.5]), axis=1) >= 2.2
    if hole_fraction > 0.0:
        rng = np.random.default_rng(seed)
        candidates = np.nonzero(keep)[0]
        n_remove = int(round(hole_fraction * len(candidates)))
        removed = rng.choice(candidates, size=n_remove, replace=False)
        keep[removed] = False

    return SynthScene(
        vertices=verts,
        triangles=tris,
        tri_poi=tri_poi,
        poi_boxes=boxes,
        poi_labels=labels,
        models=models,
        poses=poses,
        hidden_depth_scale=hidden_scale,
        recon_triangles=tris[keep],
    )


# ---------------------------------------------------------------------------
# analytic rendering (oracle-side ray casting, no shared production code)

@njit(cache=True)
def _moller_trumbore(ax, ay, az, bx, by, bz, cx, cy, cz, ox, oy, oz, dx, dy, dz):
    """Ray/triangle intersection parameter t, or -1 when there is none."""
    e1x, e1y, e1z = bx - ax, by - ay, bz - az
    e2x, e2y, e2z = cx - ax, cy - ay, cz - az
    hx = dy * e2z - dz * e2y
    hy = dz * e2x - dx * e2z
    hz = dx * e2y - dy * e2x
    det = e1x * hx + e1y * hy + e1z * hz
    if -1e-12 < det < 1e-12:
        return -1.0
    inv = 1.0 / det
    sx, sy, sz = ox - ax, oy - ay, oz - az
    u = (sx * hx + sy * hy + sz * hz) * inv
    if u < -1e-9 or u > 1.0 + 1e-9:
        return -1.0
    qx = sy * e1z - sz * e1y
    qy = sz * e1x - sx * e1z
    qz = sx * e1y - sy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < -1e-9 or u + v > 1.0 + 1e-9:
        return -1.0
    return (e2x * qx + e2y * qy + e2z * qz) * inv


@njit(cache=True)
def _render_frame(verts, tris, rot, trans, fx, fy, cx, cy, width, height):
    """Exact nearest-hit z-depth and triangle id per pixel-center ray."""
    depth = np.zeros((height, width))
    hit = np.full((height, width), -1, dtype=np.int64)

    # camera center and axes in world coordinates
    ox = -(rot[0, 0] * trans[0] + rot[1, 0] * trans[1] + rot[2, 0] * trans[2])
    oy = -(rot[0, 1] * trans[0] + rot[1, 1] * trans[1] + rot[2, 1] * trans[2])
    oz = -(rot[0, 2] * trans[0] + rot[1, 2] * trans[1] + rot[2, 2] * trans[2])

    for t_idx in range(tris.shape[0]):
        # camera-space vertices
        us = np.empty(4)
        vs = np.empty(4)
        n_proj = 0
        zs = np.empty(3)
        xs = np.empty(3)
        ys = np.empty(3)
        for k in range(3):
            wx = verts[tris[t_idx, k], 0]
            wy = verts[tris[t_idx, k], 1]
            wz = verts[tris[t_idx, k], 2]
            xs[k] = rot[0, 0] * wx + rot[0, 1] * wy + rot[0, 2] * wz + trans[0]
            ys[k] = rot[1, 0] * wx + rot[1, 1] * wy + rot[1, 2] * wz + trans[1]
            zs[k] = rot[2, 0] * wx + rot[2, 1] * wy + rot[2, 2] * wz + trans[2]
        if zs[0] <= ZNEAR and zs[1] <= ZNEAR and zs[2] <= ZNEAR:
            continue
        # pixel bounds from in-front vertices plus near-plane edge crossings
        u_lo, u_hi = 1e30, -1e30
        v_lo, v_hi = 1e30, -1e30
        for k in range(3):
            if zs[k] > ZNEAR:
                pu = fx * xs[k] / zs[k] + cx
                pv = fy * ys[k] / zs[k] + cy
                if pu < u_lo: u_lo = pu
                if pu > u_hi: u_hi = pu
                if pv < v_lo: v_lo = pv
                if pv > v_hi: v_hi = pv
            k2 = (k + 1) % 3
            if (zs[k] > ZNEAR) != (zs[k2] > ZNEAR):
                w = (ZNEAR - zs[k]) / (zs[k2] - zs[k])
                ex = xs[k] + w * (xs[k2] - xs[k])
                ey = ys[k] + w * (ys[k2] - ys[k])
                pu = fx * ex / ZNEAR + cx
                pv = fy * ey / ZNEAR + cy
                if pu < u_lo: u_lo = pu
                if pu > u_hi: u_hi = pu
                if pv < v_lo: v_lo = pv
                if pv > v_hi: v_hi = pv
        i_lo = int(np.floor(u_lo - 1.0))
        i_hi = int(np.ceil(u_hi))
        j_lo = int(np.floor(v_lo - 1.0))
        j_hi = int(np.ceil(v_hi))
        if i_lo < 0: i_lo = 0
        if j_lo < 0: j_lo = 0
        if i_hi > width - 1: i_hi = width - 1
        if j_hi > height - 1: j_hi = height - 1
        if i_lo > i_hi or j_lo > j_hi:
            continue

        ax = verts[tris[t_idx, 0], 0]; ay = verts[tris[t_idx, 0], 1]; az = verts[tris[t_idx, 0], 2]
        bx = verts[tris[t_idx, 1], 0]; by = verts[tris[t_idx, 1], 1]; bz = verts[tris[t_idx, 1], 2]
        cx3 = verts[tris[t_idx, 2], 0]; cy3 = verts[tris[t_idx, 2], 1]; cz3 = verts[tris[t_idx, 2], 2]
        for j in range(j_lo, j_hi + 1):
            ry = (j + 0.5 - cy) / fy
            for i in range(i_lo, i_hi + 1):
                rx = (i + 0.5 - cx) / fx
                # world ray with camera-z parameterization: t equals depth
                dx = rot[0, 0] * rx + rot[1, 0] * ry + rot[2, 0]
                dy = rot[0, 1] * rx + rot[1, 1] * ry + rot[2, 1]
                dz = rot[0, 2] * rx + rot[1, 2] * ry + rot[2, 2]
                t_hit = _moller_trumbore(ax, ay, az, bx, by, bz, cx3, cy3, cz3, ox, oy, oz, dx, dy, dz)
                if t_hit > ZNEAR and (hit[j, i] == -1 or t_hit < depth[j, i]):
                    depth[j, i] = t_hit
                    hit[j, i] = t_idx
    return depth, hit


@njit(cache=True)
def _first_hits(verts, tris, ox, oy, oz, dirs):
    """Brute-force first-hit parameter per ray; inf when nothing is hit."""
    n = dirs.shape[0]
    t_out = np.full(n, np.inf)
    idx_out = np.full(n, -1, dtype=np.int64)
    for r in range(n):
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        best = np.inf
        best_i = -1
        for t_idx in range(tris.shape[0]):
            t_hit = _moller_trumbore(
                verts[tris[t_idx, 0], 0], verts[tris[t_idx, 0], 1], verts[tris[t_idx, 0], 2],
                verts[tris[t_idx, 1], 0], verts[tris[t_idx, 1], 1], verts[tris[t_idx, 1], 2],
                verts[tris[t_idx, 2], 0], verts[tris[t_idx, 2], 1], verts[tris[t_idx, 2], 2],
                ox, oy, oz, dx, dy, dz,
            )
            if ZNEAR < t_hit < best:
                best = t_hit
                best_i = t_idx
        t_out[r] = best
        idx_out[r] = best_i
    return t_out, idx_out


@dataclass
class RenderResult:
    depth_map: DepthMap  # emitted relative depth (hidden scale applied)
    true_depth: np.ndarray  # exact camera-z depth, no hidden scale
    hit_triangle: np.ndarray
    hit_poi: np.ndarray  # -2 miss, -1 shell, k = poi index
    masks: dict[int, SegMask]
    rgb: np.ndarray


def render_analytic(scene: SynthScene, frame_index: int) -> RenderResult:
    """Render one camera of the intact scene: exact depth, per-POI masks, RGB."""
    model = scene.models[frame_index]
    pose = scene.poses[frame_index]
    depth, hit = _render_frame(
        scene.vertices,
        scene.triangles,
        pose.rotation,
        pose.translation,
        model.fx,
        model.fy,
        model.cx,
        model.cy,
        model.width,
        model.height,
    )
    hit_poi = np.full(hit.shape, -2, dtype=np.int64)
    seen = hit >= 0
    hit_poi[seen] = scene.tri_poi[hit[seen]]

    emitted = depth * scene.hidden_depth_scale
    if scene.depth_jitter > 0.0:
        rng = np.random.default_rng(1000 + frame_index)
        emitted = emitted * (1.0 + scene.depth_jitter * rng.uniform(-1.0, 1.0, emitted.shape))
    emitted[hit < 0] = 0.0

    frame_id = scene.frame_id(frame_index)
    masks = {
        k: SegMask(bits=(hit_poi == k), frame_id=frame_id)
        for k in range(len(scene.poi_boxes))
        if (hit_poi == k).any()
    }

    rgb = np.empty((model.height, model.width, 3), dtype=np.uint8)
    rgb[:] = VOID_COLOR
    rgb[hit_poi == -1] = SHELL_COLOR
    for k in range(len(scene.poi_boxes)):
        rgb[hit_poi == k] = POI_PALETTE[k % len(POI_PALETTE)]
    return RenderResult(
        depth_map=DepthMap(values=emitted),
        true_depth=depth,
        hit_triangle=hit,
        hit_poi=hit_poi,
        masks=masks,
        rgb=rgb,
    )


def pixel_rays(model: CameraModel, pose: CameraPose, rows: np.ndarray, cols: np.ndarray):
    """World-space rays through pixel centers, z-parameterized (t = depth)."""
    rx = (cols + 0.5 - model.cx) / model.fx
    ry = (rows + 0.5 - model.cy) / model.fy
    cam_dirs = np.column_stack([rx, ry, np.ones(len(rx))])
    dirs = cam_dirs @ pose.rotation  # R^T applied row-wise
    return pose.camera_center(), np.ascontiguousarray(dirs)


def reference_raycast(vertices, triangles, origin, dirs):
    """Per-ray first intersection against the full triangle list (oracle path)."""
    origin = np.asarray(origin, dtype=np.float64)
    t, idx = _first_hits(
        np.ascontiguousarray(vertices, dtype=np.float64),
        np.ascontiguousarray(triangles, dtype=np.int64),
        origin[0], origin[1], origin[2],
        np.ascontiguousarray(dirs, dtype=np.float64),
    )
    return t, idx


def ray_box_intersections(box: OrientedBox, origin, dirs):
    """Slab-test entry parameter per ray, inf when the box is missed."""
    origin = np.asarray(origin, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    o = (origin - box.center) @ box.axes
    d = dirs @ box.axes
    t_lo = np.full(len(dirs), -np.inf)
    t_hi = np.full(len(dirs), np.inf)
    for a in range(3):
        da = d[:, a]
        oa = o[a]
        he = box.half_extents[a]
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-he - oa) / da
            t2 = (he - oa) / da
        near = np.minimum(t1, t2)
        far = np.maximum(t1, t2)
        parallel = np.abs(da) < 1e-15
        inside = np.abs(oa) <= he
        near = np.where(parallel, np.where(inside, -np.inf, np.inf), near)
        far = np.where(parallel, np.where(inside, np.inf, -np.inf), far)
        t_lo = np.maximum(t_lo, near)
        t_hi = np.minimum(t_hi, far)
    entry = np.where((t_hi >= t_lo) & (t_hi > 0), np.maximum(t_lo, 0.0), np.inf)
    return entry


# ---------------------------------------------------------------------------
# scoring

def iou_box(a: OrientedBox, b: OrientedBox, samples: int = 100_000) -> float:
    """Volume IoU by deterministic low-discrepancy sampling (about +/-0.01)."""
    corners = np.vstack([a.corners(), b.corners()])
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    pts = lo + qmc.Halton(d=3, scramble=False).random(samples) * (hi - lo)
    in_a = a.contains(pts)
    in_b = b.contains(pts)
    union = (in_a | in_b).sum()
    if union == 0:
        return 0.0
    return float((in_a & in_b).sum() / union)


def score_project(pois, truth_boxes: list[tuple[str, OrientedBox]]):
    """IoU per cast instance against the best same-label truth box."""
    rows = []
    for poi in pois:
        best = 0.0
        matched = None
        if poi.status == "cast" and poi.box is not None:
            for label, tbox in truth_boxes:
                if label != poi.label:
                    continue
                value = iou_box(tbox, poi.box)
                if value >= best:
                    best = value
                    matched = label
        rows.append(
            {
                "poi_id": poi.id,
                "label": poi.label,
                "status": poi.status,
                "iou": round(best, 4) if poi.status == "cast" else None,
                "matched_label": matched,
            }
        )
    return rows


def write_scorecard(rows, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "scorecard.json", "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")
    with open(out / "scorecard.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["poi_id", "label", "status", "iou", "matched_label"])
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# fixture emission

def make_fixture(
    directory,
    hidden_scale: float = 1.0,
    hole_fraction: float = 0.0,
    seed: int = 0,
    annotate_frames: int = 3,
    extra_poi: bool = False,
    carve_extra: bool = False,
):
    """Write a complete on-disk project for the standard scene.

    Frames, depths, and annotation masks are rendered from the intact
    geometry; the project mesh is the (possibly defective) reconstruction.
    Ground truth lands in truth/truth.json for the scorer.
    """
    from .mesh import save_ply
    from .store import Project, persist_project, utc_now_iso, write_pfm

    root = Path(directory)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    (root / "depths").mkdir(exist_ok=True)
    (root / "truth").mkdir(exist_ok=True)

    scene = standard_scene(
        hidden_scale=hidden_scale,
        hole_fraction=hole_fraction,
        seed=seed,
        extra_poi=extra_poi,
        carve_extra=carve_extra,
    )
    save_ply(root / "mesh.ply", scene.vertices, scene.recon_triangles)

    from .images import save_image_rgb, save_mask_png
    from .store import AnnotationRecord, FrameRecord

    frames = []
    mask_paths: dict[int, dict[str, str]] = {k: {} for k in range(len(scene.poi_boxes))}
    for idx in range(scene.n_frames):
        result = render_analytic(scene, idx)
        fid = scene.frame_id(idx)
        save_image_rgb(root / "frames" / f"{fid}.png", result.rgb)
        write_pfm(root / "depths" / f"{fid}.pfm", result.depth_map.values)
        if idx < annotate_frames:
            for k, mask in result.masks.items():
                mdir = root / "masks" / f"poi-{k}"
                mdir.mkdir(parents=True, exist_ok=True)
                save_mask_png(mdir / f"{fid}.png", mask.bits)
                mask_paths[k][fid] = f"masks/poi-{k}/{fid}.png"
        frames.append(
            FrameRecord(
                frame_id=fid,
                image_path=f"frames/{fid}.png",
                depth_path=f"depths/{fid}.pfm",
                model=scene.models[idx],
                pose=scene.poses[idx],
                timestamp_sec=idx * 0.5,
            )
        )

    annotations = [
        AnnotationRecord(
            id=f"poi-{k}-{scene.poi_labels[k]}",
            frame_id=scene.frame_id(0),
            label=scene.poi_labels[k],
            description="",
            prompts=[],
            state="propagated",
            mask_paths=mask_paths[k],
        )
        for k in range(len(scene.poi_boxes))
        if mask_paths[k]
    ]

    now = utc_now_iso()
    project = Project(
        root=root,
        id=root.name,
        name=f"synthetic room (g={hidden_scale:g}, holes={hole_fraction:g})",
        mesh_path="mesh.ply",
        frames=frames,
        annotations=annotations,
        created_at=now,
        updated_at=now,
    )
    persist_project(project)

    truth = {
        "hidden_depth_scale": hidden_scale,
        "hole_fraction": hole_fraction,
        "seed": seed,
        "boxes": [
            {"label": label, "box": box.to_dict()}
            for label, box in zip(scene.poi_labels, scene.poi_boxes)
        ],
    }
    with open(root / "truth" / "truth.json", "w") as fh:
        json.dump(truth, fh, indent=2)
        fh.write("\n")
    return project, scene


def make_failure_fixture(directory):
    """A project exercising both field failure classes.

    One good annotation, one whose geometry the reconstruction never built
    (cast clouds overshoot through the carved region and find nothing), and
    one anchored on a frame the pose estimation skipped.
    """
    from .store import AnnotationRecord, load_project, persist_project

    make_fixture(directory, extra_poi=True, carve_extra=True)
    project = load_project(directory)

    # the cabinet was annotated from the 270-degree view only; its cast cloud
    # overshoots through the carved wall and exits the scene
    cabinet = project.annotation("poi-1-cabinet")
    keep = "frame_002"
    cabinet.frame_id = keep
    cabinet.mask_paths = {keep: cabinet.mask_paths[keep]}

    # two frames lost their pose during reconstruction; an annotation is
    # anchored on one of them
    project.frames[4].pose = None
    project.frames[5].pose = None
    src = project.annotations[0].mask_paths["frame_000"]
    orphan = project.root / "masks" / "poi-2" / "frame_004.png"
    orphan.parent.mkdir(parents=True, exist_ok=True)
    orphan.write_bytes(project.resolve(src).read_bytes())
    project.annotations.append(
        AnnotationRecord(
            id="poi-2-door",
            frame_id="frame_004",
            label="door",
            state="propagated",
            mask_paths={"frame_004": "masks/poi-2/frame_004.png"},
        )
    )
    persist_project(project)
    return project


def load_truth(path) -> list[tuple[str, OrientedBox]]:
    path = Path(path)
    if path.is_dir():
        candidate = path / "truth" / "truth.json"
        path = candidate if candidate.exists() else path / "truth.json"
    with open(path) as fh:
        data = json.load(fh)
    return [(str(item["label"]), OrientedBox.from_dict(item["box"])) for item in data["boxes"]]
