"""OBJ and PLY export (and the matching readers used for round trips)."""

from __future__ import annotations

import io
import os

import numpy as np

FORMATS = ("obj", "ply")


def _as_arrays(mesh):
    V = np.ascontiguousarray(mesh.vertices, dtype=float)
    F = np.ascontiguousarray(mesh.faces, dtype=np.int64)
    if V.ndim != 2 or V.shape[1] != 3 or F.ndim != 2 or F.shape[1] != 3:
        raise ValueError("expected (n, 3) vertices and (m, 3) faces")
    if F.size and (F.min() < 0 or F.max() >= V.shape[0]):
        raise ValueError("face index out of range")
    return V, F


def export_mesh(mesh, fmt="obj") -> bytes:
    """Serialise ``mesh`` (anything with ``vertices`` and ``faces``).

    OBJ is ASCII with LF endings, ``v`` records at 9 significant digits and
    1-based ``f`` records.  PLY is binary little endian with float64 vertex
    coordinates and uint8/int32 face lists.
    """
    fmt = fmt.lower()
    V, F = _as_arrays(mesh)
    if fmt == "obj":
        buf = io.StringIO()
        np.savetxt(buf, V, fmt="v %.9g %.9g %.9g")
        np.savetxt(buf, F + 1, fmt="f %d %d %d")
        return buf.getvalue().encode("ascii")
    if fmt == "ply":
        header = (
            "ply\nformat binary_little_endian 1.0\n"
            f"element vertex {V.shape[0]}\n"
            "property double x\nproperty double y\nproperty double z\n"
            f"element face {F.shape[0]}\n"
            "property list uchar int vertex_indices\nend_header\n"
        ).encode("ascii")
        rec = np.empty(F.shape[0], dtype=[("n", "u1"), ("idx", "<i4", (3,))])
        rec["n"] = 3
        rec["idx"] = F
        return header + V.astype("<f8").tobytes() + rec.tobytes()
    raise ValueError(f"unknown mesh format {fmt!r}; expected one of {FORMATS}")


def write_mesh(mesh, path, fmt=None):
    """Write ``mesh`` to ``path``; the format defaults to the file extension."""
    if fmt is None:
        fmt = os.path.splitext(str(path))[1].lstrip(".") or "obj"
    data = export_mesh(mesh, fmt)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def parse_obj(data: bytes):
    """``(vertices, faces)`` from OBJ bytes (``v`` and triangular ``f`` records only)."""
    verts, faces = [], []
    for line in data.decode("ascii").splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return np.array(verts, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def parse_ply(data: bytes):
    """``(vertices, faces)`` from PLY bytes as written by :func:`export_mesh`."""
    end = data.index(b"end_header\n") + len(b"end_header\n")
    header = data[:end].decode("ascii").splitlines()
    if header[0] != "ply" or header[1] != "format binary_little_endian 1.0":
        raise ValueError("not a binary little endian PLY")
    counts = {}
    for line in header:
        if line.startswith("element"):
            _, name, n = line.split()
            counts[name] = int(n)
    nv, nf = counts.get("vertex", 0), counts.get("face", 0)
    V = np.frombuffer(data, dtype="<f8", count=3 * nv, offset=end).reshape(nv, 3)
    rec = np.frombuffer(data, dtype=[("n", "u1"), ("idx", "<i4", (3,))], count=nf, offset=end + 24 * nv)
    if nf and np.any(rec["n"] != 3):
        raise ValueError("only triangular faces are supported")
    return V.copy(), rec["idx"].astype(np.int64)
