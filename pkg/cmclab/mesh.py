"""cmclab.mesh: closed oriented triangle meshes immersed in R^n."""

import hashlib
from functools import cached_property
from typing import Optional, Tuple

import attr
import numpy
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from cmclab.errors import (
    CodimensionError,
    DegenerateTriangleError,
    DimensionError,
    NonPositiveFactorError,
    NotOrthogonalError,
    TopologyError,
)
from cmclab.models import Report

# triangles with a smaller area are rejected
DEGENERACY_FLOOR = 1e-12

ORTHOGONALITY_TOLERANCE = 1e-10


def _as_positions(value) -> numpy.ndarray:
    arr = numpy.array(value, dtype=numpy.float64)
    arr.setflags(write=False)
    return arr


def _as_triangles(value) -> numpy.ndarray:
    arr = numpy.array(value, dtype=numpy.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    arr.setflags(write=False)
    return arr


@attr.s(frozen=True, eq=False)
class SurfaceMesh:
    """Piecewise-linear immersion of a triangulated surface into R^n.

    Construction checks the index-level invariants only (shapes, index range,
    repeated vertices inside a triangle). Manifoldness, orientation and the
    degeneracy floor are checked by `check_mesh`, which `load_mesh` and
    `compute_curvature` run, so that `validate` can still report on broken input.

    Attributes:
        vertices (numpy.ndarray): (V, n) vertex positions, read-only.
        triangles (numpy.ndarray): (T, 3) oriented vertex-index triples, read-only.

    """

    vertices: numpy.ndarray = attr.ib(converter=_as_positions)
    triangles: numpy.ndarray = attr.ib(converter=_as_triangles)

    @vertices.validator
    def _check_vertices(self, attribute, value):
        if value.ndim != 2:
            raise DimensionError("vertices must be a (V, n) array")
        if value.shape[1] < 3:
            raise DimensionError(f"ambient dimension must be >= 3, got {value.shape[1]}")
        if not numpy.all(numpy.isfinite(value)):
            raise DimensionError("vertex positions must be finite")

    @triangles.validator
    def _check_triangles(self, attribute, value):
        if value.ndim != 2 or value.shape[1] != 3:
            raise TopologyError("triangles must be a (T, 3) array")
        if len(value) == 0:
            raise TopologyError("mesh has no triangles")
        if value.min() < 0 or value.max() >= len(self.vertices):
            raise TopologyError("triangle vertex index out of range")
        repeated = (
            (value[:, 0] == value[:, 1])
            | (value[:, 1] == value[:, 2])
            | (value[:, 2] == value[:, 0])
        )
        if repeated.any():
            raise TopologyError(
                f"triangle {int(numpy.flatnonzero(repeated)[0])} repeats a vertex"
            )

    @property
    def ambient_dim(self) -> int:
        """Dimension n of the ambient space."""
        return int(self.vertices.shape[1])

    @property
    def vertex_count(self) -> int:
        """Number of vertices."""
        return int(self.vertices.shape[0])

    @property
    def triangle_count(self) -> int:
        """Number of triangles."""
        return int(self.triangles.shape[0])

    @cached_property
    def digest(self) -> str:
        """Content hash of positions and connectivity."""
        h = hashlib.sha224()
        for arr in (self.vertices, self.triangles):
            h.update(str(arr.shape).encode())
            h.update(str(arr.dtype).encode())
            h.update(numpy.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    @cached_property
    def edges(self) -> numpy.ndarray:
        """Sorted (E, 2) table of undirected edges."""
        return edge_table(self.triangles)[0]

    def with_vertices(self, vertices: numpy.ndarray) -> "SurfaceMesh":
        """Same connectivity, new positions."""
        return SurfaceMesh(vertices, self.triangles)


class MeshDiagnostics(Report):
    """Topology and quality report of a mesh."""

    is_closed: bool
    is_oriented: bool
    is_manifold: bool
    euler_characteristic: int
    min_triangle_area: float
    genus: Optional[int] = None
    components: int
    boundary_edges: int
    vertex_count: int
    edge_count: int
    triangle_count: int

    @property
    def is_valid(self) -> bool:
        """Closed, oriented, manifold and free of degenerate triangles."""
        return (
            self.is_closed
            and self.is_oriented
            and self.is_manifold
            and self.min_triangle_area >= DEGENERACY_FLOOR
        )


def half_edges(triangles: numpy.ndarray) -> numpy.ndarray:
    """(3T, 2) directed edges (i→j, j→k, k→i) of every triangle."""
    return triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)


def edge_table(triangles: numpy.ndarray) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Undirected edges and the number of triangles using each of them."""
    undirected = numpy.sort(half_edges(triangles), axis=1)
    edges, counts = numpy.unique(undirected, axis=0, return_counts=True)
    return edges, counts


def face_areas(mesh: SurfaceMesh) -> numpy.ndarray:
    """Triangle areas in R^n from the Gram determinant of the edge vectors."""
    x = mesh.vertices[mesh.triangles]
    e1 = x[:, 1] - x[:, 0]
    e2 = x[:, 2] - x[:, 0]
    g11 = numpy.einsum("ij,ij->i", e1, e1)
    g22 = numpy.einsum("ij,ij->i", e2, e2)
    g12 = numpy.einsum("ij,ij->i", e1, e2)
    return 0.5 * numpy.sqrt(numpy.maximum(g11 * g22 - g12 * g12, 0.0))


def total_area(mesh: SurfaceMesh) -> float:
    """Surface area."""
    return float(face_areas(mesh).sum())


def component_count(mesh: SurfaceMesh) -> int:
    """Number of connected components of the vertex-edge graph."""
    edges = mesh.edges
    n = mesh.vertex_count
    graph = sparse.coo_matrix(
        (numpy.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    count, _ = connected_components(graph, directed=False)
    return int(count)


def validate(mesh: SurfaceMesh) -> MeshDiagnostics:
    """Topology and quality diagnostics; problems are reported, never raised."""
    edges, counts = edge_table(mesh.triangles)
    directed = half_edges(mesh.triangles)
    unique_directed = len(numpy.unique(directed, axis=0))

    is_manifold = bool(numpy.all(counts <= 2))
    boundary = int(numpy.count_nonzero(counts == 1))
    is_closed = bool(numpy.all(counts == 2))
    # on a manifold mesh, consistent orientation means no directed edge twice
    is_oriented = is_manifold and unique_directed == len(directed)

    chi = mesh.vertex_count - len(edges) + mesh.triangle_count
    components = component_count(mesh)

    genus = None
    if is_closed and is_oriented and (2 * components - chi) % 2 == 0:
        genus = (2 * components - chi) // 2

    return MeshDiagnostics(
        is_closed=is_closed,
        is_oriented=is_oriented,
        is_manifold=is_manifold,
        euler_characteristic=chi,
        min_triangle_area=float(face_areas(mesh).min()),
        genus=genus,
        components=components,
        boundary_edges=boundary,
        vertex_count=mesh.vertex_count,
        edge_count=len(edges),
        triangle_count=mesh.triangle_count,
    )


def check_mesh(mesh: SurfaceMesh, floor: float = DEGENERACY_FLOOR) -> MeshDiagnostics:
    """Raise when the mesh is not a closed, oriented, non-degenerate surface."""
    diag = validate(mesh)
    if not diag.is_manifold:
        raise TopologyError("non-manifold edge: an edge is shared by more than two triangles")
    if not diag.is_closed:
        raise TopologyError(f"open boundary: {diag.boundary_edges} boundary edges")
    if not diag.is_oriented:
        raise TopologyError("inconsistent orientation between adjacent triangles")

    used = numpy.zeros(mesh.vertex_count, dtype=bool)
    used[mesh.triangles.ravel()] = True
    if not used.all():
        raise TopologyError(f"isolated vertex {int(numpy.flatnonzero(~used)[0])}")

    if diag.min_triangle_area < floor:
        idx = int(numpy.argmin(face_areas(mesh)))
        raise DegenerateTriangleError(
            f"triangle {idx} has area {diag.min_triangle_area:.3e} < {floor:.0e}"
        )

    return diag


def rigid_transform(
    mesh: SurfaceMesh, rotation: numpy.ndarray, translation: numpy.ndarray
) -> SurfaceMesh:
    """Map every position x to Rx + t."""
    n = mesh.ambient_dim
    rotation = numpy.asarray(rotation, dtype=numpy.float64)
    translation = numpy.asarray(translation, dtype=numpy.float64)
    if rotation.shape != (n, n):
        raise DimensionError(f"rotation must be {n}x{n}, got {rotation.shape}")
    if translation.shape != (n,):
        raise DimensionError(f"translation must have {n} components")

    error = numpy.abs(rotation.T @ rotation - numpy.eye(n)).max()
    if error > ORTHOGONALITY_TOLERANCE:
        raise NotOrthogonalError(f"|RᵀR - I| = {error:.3e}")

    return mesh.with_vertices(mesh.vertices @ rotation.T + translation)


def scale_mesh(mesh: SurfaceMesh, factor: float) -> SurfaceMesh:
    """Multiply every position by `factor`."""
    if not factor > 0:
        raise NonPositiveFactorError(f"scale factor must be positive, got {factor}")
    return mesh.with_vertices(mesh.vertices * factor)


def signed_volume(mesh: SurfaceMesh) -> float:
    """Enclosed volume by the divergence theorem; positive for outward orientation."""
    if mesh.ambient_dim != 3:
        raise CodimensionError(
            f"enclosed volume needs a surface in R³, got R^{mesh.ambient_dim}"
        )
    x = mesh.vertices[mesh.triangles]
    return float(numpy.einsum("ij,ij->i", x[:, 0], numpy.cross(x[:, 1], x[:, 2])).sum() / 6.0)


def flip_orientation(mesh: SurfaceMesh) -> SurfaceMesh:
    """Reverse the ordering of every triangle."""
    return SurfaceMesh(mesh.vertices, mesh.triangles[:, [0, 2, 1]])


def orient_outward(mesh: SurfaceMesh) -> SurfaceMesh:
    """Flip the mesh when its signed volume is negative."""
    if signed_volume(mesh) < 0:
        return flip_orientation(mesh)
    return mesh
