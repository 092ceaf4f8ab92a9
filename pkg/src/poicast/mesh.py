"""Triangle mesh container plus OBJ/PLY loaders.

Reconstruction exports are messy: NaN vertices and zero-area triangles are
stripped at load (counted, not fatal), polygon faces are fan-triangulated,
and unknown records or properties are skipped. The spatial index for
distance queries is built when the mesh is created, so a loaded mesh is
immediately ready for concurrent batch queries.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bvh import TriangleBVH
from .errors import EmptyMeshError, ParseError, UnsupportedFormatError

_PLY_SCALARS = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


@dataclass
class TriMesh:
    """Immutable triangle mesh with cached bbox diagonal and spatial index."""

    vertices: np.ndarray
    triangles: np.ndarray
    dropped_nan_vertices: int = 0
    dropped_degenerate_faces: int = 0
    bbox_diagonal: float = field(init=False)
    _bvh: TriangleBVH | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        if np.isnan(v).any():
            raise ValueError("NaN vertices must be stripped before construction")
        v.flags.writeable = False
        t.flags.writeable = False
        self.vertices = v
        self.triangles = t
        if len(v):
            ext = v.max(axis=0) - v.min(axis=0)
            self.bbox_diagonal = float(np.linalg.norm(ext))
        else:
            self.bbox_diagonal = 0.0
        if len(t):
            self._bvh = TriangleBVH(v, t)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Exact minimum distance from each point to the mesh surface."""
        if self._bvh is None:
            raise EmptyMeshError("mesh has no triangles")
        return self._bvh.distances(points)

    def distance(self, point) -> float:
        if self._bvh is None:
            raise EmptyMeshError("mesh has no triangles")
        return self._bvh.distance(point)

    def transformed(self, matrix: np.ndarray) -> "TriMesh":
        """New mesh with vertices mapped through a 3x3 linear transform."""
        return TriMesh(self.vertices @ np.asarray(matrix, dtype=np.float64).T, self.triangles)


def mesh_distance(mesh: TriMesh, point) -> float:
    """Minimum Euclidean distance from a point to any triangle of the mesh."""
    return mesh.distance(point)


def clean_mesh_arrays(vertices: np.ndarray, faces: list[list[int]]):
    """Strip NaN vertices and degenerate faces; returns (v, t, n_nan, n_degen).

    Faces are polygon index lists; they are fan-triangulated here so both
    loaders share the cleanup path.
    """
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    finite = np.isfinite(vertices).all(axis=1)
    n_nan = int((~finite).sum())
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[finite] = np.arange(int(finite.sum()))
    vclean = vertices[finite]

    tris = []
    for face in faces:
        if len(face) < 3:
            continue
        idx = [remap[i] for i in face]
        if any(i < 0 for i in idx):
            continue  # referenced a stripped vertex
        for k in range(1, len(face) - 1):
            tris.append((idx[0], idx[k], idx[k + 1]))
    tris = np.asarray(tris, dtype=np.int64).reshape(-1, 3)

    n_degen = 0
    if len(tris):
        a = vclean[tris[:, 0]]
        b = vclean[tris[:, 1]]
        c = vclean[tris[:, 2]]
        area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
        keep = area2 > 0.0
        n_degen = int((~keep).sum())
        tris = tris[keep]
    return vclean, tris, n_nan, n_degen


def load_obj(path) -> TriMesh:
    """ASCII OBJ loader: v and f records, fan triangulation, rest skipped."""
    path = Path(path)
    verts: list[tuple[float, float, float]] = []
    faces: list[list[int]] = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise ParseError("vertex record needs 3 coordinates", path=str(path), line=lineno)
                try:
                    verts.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    raise ParseError("bad vertex coordinate", path=str(path), line=lineno)
            elif tag == "f":
                face = []
                for tok in parts[1:]:
                    head = tok.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise ParseError(f"bad face index {tok!r}", path=str(path), line=lineno)
                    # OBJ is 1-based; negative indices count back from the end
                    face.append(i - 1 if i > 0 else len(verts) + i)
                if len(face) < 3:
                    raise ParseError("face needs at least 3 vertices", path=str(path), line=lineno)
                faces.append(face)
            # every other record type (vn, vt, o, g, mtllib, ...) is skipped
    v, t, n_nan, n_degen = clean_mesh_arrays(np.asarray(verts, dtype=np.float64).reshape(-1, 3), faces)
    return TriMesh(v, t, dropped_nan_vertices=n_nan, dropped_degenerate_faces=n_degen)


def _parse_ply_header(fh):
    magic = fh.readline().strip()
    if magic != b"ply":
        raise UnsupportedFormatError("not a PLY file")
    fmt = None
    elements = []  # (name, count, [(prop_name, kind, meta)])
    lineno = 1
    while True:
        raw = fh.readline()
        lineno += 1
        if not raw:
            raise ParseError("unexpected EOF in PLY header", line=lineno)
        line = raw.decode("ascii", "replace").strip()
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        parts = line.split()
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError("property before element", line=lineno)
            if parts[1] == "list":
                elements[-1][2].append((parts[4], "list", (parts[2], parts[3])))
            else:
                elements[-1][2].append((parts[2], "scalar", parts[1]))
        elif parts[0] == "end_header":
            break
    if fmt not in ("ascii", "binary_little_endian"):
        raise UnsupportedFormatError(f"unsupported PLY format {fmt!r}")
    return fmt, elements


def _read_ply_ascii(fh, elements):
    data = {}
    for name, count, props in elements:
        rows = []
        for _ in range(count):
            toks = fh.readline().split()
            pos = 0
            row = {}
            for pname, kind, meta in props:
                if kind == "list":
                    n = int(toks[pos]); pos += 1
                    row[pname] = [int(float(x)) for x in toks[pos:pos + n]]
                    pos += n
                else:
                    row[pname] = float(toks[pos]); pos += 1
            rows.append(row)
        data[name] = rows
    return data


def _read_ply_binary(fh, elements):
    data = {}
    for name, count, props in elements:
        fixed = all(kind == "scalar" for _, kind, _ in props)
        if fixed:
            dtype = np.dtype([(p, "<" + _PLY_SCALARS[m]) for p, _, m in props])
            arr = np.frombuffer(fh.read(dtype.itemsize * count), dtype=dtype, count=count)
            data[name] = arr
        else:
            rows = []
            for _ in range(count):
                row = {}
                for pname, kind, meta in props:
                    if kind == "list":
                        ct, it = meta
                        csz = np.dtype(_PLY_SCALARS[ct]).itemsize
                        n = int(np.frombuffer(fh.read(csz), dtype="<" + _PLY_SCALARS[ct])[0])
                        isz = np.dtype(_PLY_SCALARS[it]).itemsize
                        row[pname] = np.frombuffer(fh.read(isz * n), dtype="<" + _PLY_SCALARS[it]).astype(np.int64).tolist()
                    else:
                        sz = np.dtype(_PLY_SCALARS[meta]).itemsize
                        row[pname] = float(np.frombuffer(fh.read(sz), dtype="<" + _PLY_SCALARS[meta])[0])
                rows.append(row)
            data[name] = rows
    return data


def load_ply(path) -> TriMesh:
    """PLY loader (ascii / binary_little_endian).

    Uses vertex x/y/z and the face vertex index list; everything else is
    read past and ignored.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        fmt, elements = _parse_ply_header(fh)
        reader = _read_ply_ascii if fmt == "ascii" else _read_ply_binary
        if fmt == "ascii":
            import io
            fh = io.TextIOWrapper(fh, encoding="ascii", errors="replace")
        data = reader(fh, elements)

    names = {name for name, _, _ in elements}
    if "vertex" not in names:
        raise ParseError("PLY has no vertex element", path=str(path))
    vdata = data["vertex"]
    if isinstance(vdata, np.ndarray):
        verts = np.column_stack([vdata["x"], vdata["y"], vdata["z"]]).astype(np.float64)
    else:
        verts = np.array([[r["x"], r["y"], r["z"]] for r in vdata], dtype=np.float64).reshape(-1, 3)

    faces: list[list[int]] = []
    if "face" in names:
        for row in data["face"]:
            key = "vertex_indices" if "vertex_indices" in row else "vertex_index" if "vertex_index" in row else None
            if key is not None:
                faces.append([int(i) for i in row[key]])
    v, t, n_nan, n_degen = clean_mesh_arrays(verts, faces)
    return TriMesh(v, t, dropped_nan_vertices=n_nan, dropped_degenerate_faces=n_degen)


def load_mesh(path) -> TriMesh:
    """Dispatch on extension: .obj or .ply."""
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        return load_obj(path)
    if suffix == ".ply":
        return load_ply(path)
    raise UnsupportedFormatError(f"unknown mesh format {suffix!r}")


def save_ply(path, vertices: np.ndarray, triangles: np.ndarray, binary: bool = True) -> None:
    """Write a minimal PLY (x/y/z float32 vertices, uchar-counted int32 faces)."""
    vertices = np.asarray(vertices, dtype=np.float32).reshape(-1, 3)
    triangles = np.asarray(triangles, dtype=np.int32).reshape(-1, 3)
    header = [
        "ply",
        "format binary_little_endian 1.0" if binary else "format ascii 1.0",
        f"element vertex {len(vertices)}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(triangles)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fh.write(vertices.astype("<f4").tobytes())
            for tri in triangles:
                fh.write(struct.pack("<B3i", 3, int(tri[0]), int(tri[1]), int(tri[2])))
        else:
            for vx, vy, vz in vertices:
                fh.write(f"{vx:.9g} {vy:.9g} {vz:.9g}\n".encode("ascii"))
            for tri in triangles:
                fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n".encode("ascii"))


def save_obj(path, vertices: np.ndarray, triangles: np.ndarray, groups=None) -> None:
    """Write an ASCII OBJ; `groups` optionally maps a name to a triangle slice."""
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    with open(path, "w") as fh:
        for vx, vy, vz in vertices:
            fh.write(f"v {vx:.17g} {vy:.17g} {vz:.17g}\n")
        if groups:
            for name, (lo, hi) in groups:
                fh.write(f"o {name}\n")
                for tri in triangles[lo:hi]:
                    fh.write(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")
        else:
            for tri in triangles:
                fh.write(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")


AXIS_FLIP_MATRIX = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
"""Maps a Y-up scene to the package's Z-up convention (proper rotation)."""
