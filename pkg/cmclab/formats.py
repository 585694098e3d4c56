"""cmclab.formats: OBJ and NDMESH text codecs.

NDMESH is a line-oriented text format able to carry any ambient dimension::

    # optional comments
    ndmesh <n> <V> <T>
    <V lines of n decimal floats>
    <T lines of three 0-based vertex indices>

"""

import pathlib
from enum import Enum
from typing import List, Optional, Union

import numpy

from cmclab.errors import DimensionError, ParseError
from cmclab.mesh import SurfaceMesh


class MeshFormat(str, Enum):
    """Supported mesh file formats."""

    OBJ = "obj"
    NDMESH = "ndmesh"


def infer_format(path: Union[str, pathlib.Path]) -> MeshFormat:
    """Mesh format from the file suffix (`.obj`, `.ndmesh`, optionally `.gz`)."""
    suffixes = [s.lower() for s in pathlib.PurePosixPath(str(path)).suffixes]
    if suffixes and suffixes[-1] == ".gz":
        suffixes = suffixes[:-1]

    if not suffixes:
        raise ParseError(f"cannot infer mesh format of '{path}'")

    try:
        return MeshFormat(suffixes[-1].lstrip("."))
    except ValueError as e:
        raise ParseError(f"unknown mesh format '{suffixes[-1]}'") from e


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _float(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError as e:
        raise ParseError(f"invalid number '{token}'", line=lineno) from e
    if not numpy.isfinite(value):
        raise ParseError(f"non-finite coordinate '{token}'", line=lineno)
    return value


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError as e:
        raise ParseError(f"invalid index '{token}'", line=lineno) from e


def parse_obj(text: str) -> SurfaceMesh:
    """Parse the `v x y z` / `f i j k` subset of Wavefront OBJ."""
    vertices: List[List[float]] = []
    faces: List[List[int]] = []

    for lineno, line in _content_lines(text):
        tokens = line.split()
        key, values = tokens[0], tokens[1:]
        if key == "v":
            if not values:
                raise ParseError("vertex without coordinates", line=lineno)
            if len(values) != 3:
                raise DimensionError(
                    f"line {lineno}: OBJ vertices carry 3 coordinates, got {len(values)}"
                    ", use NDMESH for R^n"
                )
            vertices.append([_float(v, lineno) for v in values])

        elif key == "f":
            if len(values) != 3:
                raise ParseError(
                    f"only triangles are supported, got a {len(values)}-gon", line=lineno
                )
            face = []
            for value in values:
                # `f v/vt/vn` forms: keep the position index
                index = _int(value.split("/")[0], lineno)
                if index == 0:
                    raise ParseError("OBJ indices are 1-based", line=lineno)
                face.append(index - 1 if index > 0 else len(vertices) + index)
            faces.append(face)

        elif key in {"vn", "vt", "vp", "o", "g", "s", "usemtl", "mtllib"}:
            continue

        elif key == "ndmesh" and len(values) == 3 and values[0] != "3":
            raise DimensionError(
                f"line {lineno}: OBJ requested for an R^{values[0]} NDMESH document"
            )

        else:
            raise ParseError(f"unsupported OBJ statement '{key}'", line=lineno)

    if not vertices or not faces:
        raise ParseError("OBJ file has no vertices or no faces")

    return SurfaceMesh(numpy.array(vertices), numpy.array(faces))


def parse_ndmesh(text: str) -> SurfaceMesh:
    """Parse an NDMESH document."""
    lines = _content_lines(text)

    try:
        lineno, header = next(lines)
    except StopIteration as e:
        raise ParseError("empty NDMESH file") from e

    tokens = header.split()
    if len(tokens) != 4 or tokens[0] != "ndmesh":
        raise ParseError("expected header 'ndmesh <n> <V> <T>'", line=lineno)

    n, nv, nt = (_int(t, lineno) for t in tokens[1:])
    if n < 3:
        raise DimensionError(f"line {lineno}: ambient dimension must be >= 3, got {n}")
    if nv <= 0 or nt <= 0:
        raise ParseError("vertex and triangle counts must be positive", line=lineno)

    vertices = numpy.empty((nv, n), dtype=numpy.float64)
    triangles = numpy.empty((nt, 3), dtype=numpy.int64)

    last = lineno
    for i in range(nv + nt):
        try:
            lineno, line = next(lines)
        except StopIteration as e:
            raise ParseError(
                f"unexpected end of file, expected {nv} vertices and {nt} triangles",
                line=last,
            ) from e
        last = lineno

        values = line.split()
        if i < nv:
            if len(values) != n:
                raise ParseError(
                    f"vertex needs {n} coordinates, got {len(values)}", line=lineno
                )
            vertices[i] = [_float(v, lineno) for v in values]
        else:
            if len(values) != 3:
                raise ParseError("triangle needs 3 indices", line=lineno)
            face = [_int(v, lineno) for v in values]
            if min(face) < 0 or max(face) >= nv:
                raise ParseError(f"vertex index out of range [0, {nv})", line=lineno)
            triangles[i - nv] = face

    extra = next(lines, None)
    if extra is not None:
        raise ParseError("trailing content after the declared triangles", line=extra[0])

    return SurfaceMesh(vertices, triangles)


def parse_mesh(text: str, format: MeshFormat) -> SurfaceMesh:
    """Parse mesh text in the given format."""
    if MeshFormat(format) == MeshFormat.OBJ:
        return parse_obj(text)
    return parse_ndmesh(text)


def _fmt(value: float) -> str:
    # shortest repr that round-trips exactly
    return repr(float(value))


def serialize_obj(mesh: SurfaceMesh) -> str:
    """OBJ text of a mesh in R³."""
    if mesh.ambient_dim != 3:
        raise DimensionError(
            f"OBJ can only store meshes in R³, got R^{mesh.ambient_dim}; use NDMESH"
        )
    lines = [f"v {' '.join(_fmt(x) for x in v)}" for v in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    return "\n".join(lines) + "\n"


def serialize_ndmesh(mesh: SurfaceMesh, comment: Optional[str] = None) -> str:
    """NDMESH text of a mesh in R^n."""
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"ndmesh {mesh.ambient_dim} {mesh.vertex_count} {mesh.triangle_count}")
    lines += [" ".join(_fmt(x) for x in v) for v in mesh.vertices]
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    return "\n".join(lines) + "\n"


def serialize_mesh(mesh: SurfaceMesh, format: MeshFormat) -> str:
    """Serialize a mesh in the given format."""
    if MeshFormat(format) == MeshFormat.OBJ:
        return serialize_obj(mesh)
    return serialize_ndmesh(mesh)
