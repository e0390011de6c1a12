"""PLY (binary little-endian / ASCII) and ASCII OBJ mesh files.

PLY vertices carry ``x y z`` and optionally ``nx ny nz``, a float
``confidence`` and a uchar ``posture`` (0=NG, 1=MW, 2=T, 255=unlabeled).
Faces must be triangles.
"""
from __future__ import annotations

import os

import numpy as np

from .errors import ParseError
from .mesh import TriMesh

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def save_mesh(mesh: TriMesh, path) -> None:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".ply":
        write_ply(mesh, path)
    elif ext == ".obj":
        write_obj(mesh, path)
    else:
        raise ValueError(f"unsupported mesh extension {ext!r}")


def load_mesh(path) -> TriMesh:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".ply":
        return read_ply(path)
    if ext == ".obj":
        return read_obj(path)
    raise ParseError(f"unsupported mesh extension {ext!r}")


def write_ply(mesh: TriMesh, path, comments=()) -> None:
    fields = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
    if mesh.normals is not None:
        fields += [("nx", "<f4"), ("ny", "<f4"), ("nz", "<f4")]
    if mesh.confidence is not None:
        fields.append(("confidence", "<f4"))
    if mesh.posture is not None:
        fields.append(("posture", "u1"))
    vert = np.empty(mesh.n_vertices, dtype=fields)
    vert["x"], vert["y"], vert["z"] = mesh.vertices.T
    if mesh.normals is not None:
        vert["nx"], vert["ny"], vert["nz"] = mesh.normals.T
    if mesh.confidence is not None:
        vert["confidence"] = mesh.confidence
    if mesh.posture is not None:
        vert["posture"] = mesh.posture
    face = np.empty(mesh.n_triangles, dtype=[("n", "u1"), ("idx", "<i4", (3,))])
    face["n"] = 3
    face["idx"] = mesh.triangles

    names = {"<f4": "float", "u1": "uchar"}
    header = ["ply", "format binary_little_endian 1.0", "comment anthrograsp"]
    header += [f"comment {c}" for c in comments]
    header.append(f"element vertex {mesh.n_vertices}")
    header += [f"property {names[t]} {n}" for n, t in fields]
    header += [f"element face {mesh.n_triangles}",
               "property list uchar int vertex_indices", "end_header"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(vert.tobytes())
        fh.write(face.tobytes())


def read_ply_comments(path) -> list:
    """Comment lines of a PLY header, without the ``comment`` keyword."""
    out = []
    try:
        with open(path, "rb") as fh:
            for line in fh:
                tok = line.decode("ascii", "replace").strip()
                if tok == "end_header":
                    break
                if tok.startswith("comment "):
                    out.append(tok[8:])
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return out


def _parse_ply_header(fh):
    first = fh.readline()
    if first.strip() != b"ply":
        raise ParseError("not a PLY file")
    fmt, elements = None, []
    while True:
        line = fh.readline()
        if not line:
            raise ParseError("PLY header not terminated")
        tok = line.decode("ascii", "replace").split()
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        if tok[0] == "end_header":
            break
        if tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "element":
            elements.append({"name": tok[1], "count": int(tok[2]), "props": []})
        elif tok[0] == "property":
            if not elements:
                raise ParseError("property before element")
            if tok[1] == "list":
                elements[-1]["props"].append((tok[4], "list", tok[2], tok[3]))
            else:
                if tok[1] not in _PLY_TYPES:
                    raise ParseError(f"unknown PLY type {tok[1]}")
                elements[-1]["props"].append((tok[2], tok[1]))
    if fmt not in ("binary_little_endian", "ascii"):
        raise ParseError(f"unsupported PLY format {fmt}")
    return fmt, elements


def read_ply(path) -> TriMesh:
    try:
        with open(path, "rb") as fh:
            fmt, elements = _parse_ply_header(fh)
            body = fh.read()
    except (OSError, UnicodeDecodeError, ValueError, IndexError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    data = {}
    if fmt == "ascii":
        tokens = body.split()
        pos = 0
        for el in elements:
            rows = []
            for _ in range(el["count"]):
                row = {}
                for p in el["props"]:
                    if p[1] == "list":
                        n = int(tokens[pos])
                        row[p[0]] = [int(t) for t in tokens[pos + 1:pos + 1 + n]]
                        pos += 1 + n
                    else:
                        row[p[0]] = float(tokens[pos])
                        pos += 1
                rows.append(row)
            data[el["name"]] = rows
        verts = data.get("vertex", [])
        faces = data.get("face", [])
        cols = {k: np.array([r[k] for r in verts]) for k in (verts[0] if verts else {})}
        idx_name = next((p[0] for el in elements if el["name"] == "face"
                         for p in el["props"] if p[1] == "list"), "vertex_indices")
        tri = [r[idx_name] for r in faces]
    else:
        offset = 0
        cols, tri = {}, []
        for el in elements:
            if any(p[1] == "list" for p in el["props"]):
                if el["name"] != "face" or len(el["props"]) != 1:
                    raise ParseError("only a single list property on faces is supported")
                _, _, ctype, itype = el["props"][0]
                dt = np.dtype([("n", "<" + _PLY_TYPES[ctype]),
                               ("idx", "<" + _PLY_TYPES[itype], (3,))])
                arr = np.frombuffer(body, dtype=dt, count=el["count"], offset=offset)
                if el["count"] and np.any(arr["n"] != 3):
                    raise ParseError("non-triangle face")
                tri = arr["idx"]
                offset += dt.itemsize * el["count"]
            else:
                dt = np.dtype([(p[0], "<" + _PLY_TYPES[p[1]]) for p in el["props"]])
                if len(body) < offset + dt.itemsize * el["count"]:
                    raise ParseError("truncated PLY body")
                arr = np.frombuffer(body, dtype=dt, count=el["count"], offset=offset)
                offset += dt.itemsize * el["count"]
                if el["name"] == "vertex":
                    cols = {n: arr[n] for n in arr.dtype.names}
    if not all(k in cols for k in "xyz"):
        raise ParseError("PLY vertices lack x/y/z")
    tri = np.asarray(tri, dtype=np.int64).reshape(-1, 3)
    if any(len(t) != 3 for t in np.asarray(tri)):
        raise ParseError("non-triangle face")
    v = np.column_stack([cols["x"], cols["y"], cols["z"]]).astype(np.float64)
    n = None
    if all(k in cols for k in ("nx", "ny", "nz")):
        n = np.column_stack([cols["nx"], cols["ny"], cols["nz"]]).astype(np.float64)
        ln = np.linalg.norm(n, axis=1, keepdims=True)
        n = np.divide(n, ln, out=n, where=ln > 0)
    conf = cols["confidence"].astype(np.float64) if "confidence" in cols else None
    post = cols["posture"].astype(np.uint8) if "posture" in cols else None
    try:
        return TriMesh(v, tri, n, conf, post)
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_obj(mesh: TriMesh, path) -> None:
    lines = ["# anthrograsp"]
    lines += ["v %.9g %.9g %.9g" % tuple(p) for p in mesh.vertices]
    if mesh.normals is not None:
        lines += ["vn %.9g %.9g %.9g" % tuple(n) for n in mesh.normals]
        lines += ["f %d//%d %d//%d %d//%d" % (a, a, b, b, c, c) for a, b, c in mesh.triangles + 1]
    else:
        lines += ["f %d %d %d" % tuple(t) for t in mesh.triangles + 1]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_obj(path) -> TriMesh:
    verts, norms, faces, face_norm = [], [], [], {}
    try:
        with open(path) as fh:
            for line in fh:
                tok = line.split()
                if not tok:
                    continue
                if tok[0] == "v":
                    verts.append([float(x) for x in tok[1:4]])
                elif tok[0] == "vn":
                    norms.append([float(x) for x in tok[1:4]])
                elif tok[0] == "f":
                    idx = []
                    for t in tok[1:]:
                        parts = t.split("/")
                        vi = int(parts[0])
                        vi = vi - 1 if vi > 0 else len(verts) + vi
                        idx.append(vi)
                        if len(parts) == 3 and parts[2]:
                            face_norm[vi] = int(parts[2]) - 1
                    for k in range(1, len(idx) - 1):  # fan-split polygons
                        faces.append([idx[0], idx[k], idx[k + 1]])
    except (OSError, ValueError, IndexError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    v = np.array(verts, dtype=np.float64).reshape(-1, 3)
    n = None
    if norms and len(face_norm) == len(v):
        nn = np.array(norms)
        n = nn[[face_norm[i] for i in range(len(v))]]
    try:
        return TriMesh(v, np.array(faces, dtype=np.int64).reshape(-1, 3), n)
    except Exception as exc:
        raise ParseError(f"{path}: {exc}") from exc
