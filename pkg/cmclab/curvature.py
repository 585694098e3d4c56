"""cmclab.curvature: per-vertex discrete curvature.

Mean curvature uses the cotangent Laplacian over mixed Voronoi areas with the
geometer's sign, so the unit sphere gives H⃗ ≈ -2F. Gaussian curvature is the
angle defect, and |A|², |A°|² follow from the Gauss equation.
"""

import threading
from typing import NamedTuple, Optional

import attr
import numpy
from cachetools import TTLCache, cached
from cachetools.keys import hashkey
from scipy import sparse

from cmclab.errors import CodimensionError, DegenerateTriangleError, DegenerateVolumeError
from cmclab.mesh import DEGENERACY_FLOOR, SurfaceMesh, check_mesh, signed_volume
from cmclab.settings import cache_config


class _Corners(NamedTuple):
    # per triangle, columns follow the corner order of `mesh.triangles`
    area: numpy.ndarray
    cot: numpy.ndarray
    angle: numpy.ndarray
    sq_opposite: numpy.ndarray


def _corners(mesh: SurfaceMesh) -> _Corners:
    x = mesh.vertices[mesh.triangles]
    sq_opposite = numpy.empty((mesh.triangle_count, 3))
    dots = numpy.empty((mesh.triangle_count, 3))
    for k in range(3):
        a, b, c = x[:, k], x[:, (k + 1) % 3], x[:, (k + 2) % 3]
        u, v = b - a, c - a
        dots[:, k] = numpy.einsum("ij,ij->i", u, v)
        w = c - b
        sq_opposite[:, k] = numpy.einsum("ij,ij->i", w, w)

    u = x[:, 1] - x[:, 0]
    v = x[:, 2] - x[:, 0]
    uu = numpy.einsum("ij,ij->i", u, u)
    vv = numpy.einsum("ij,ij->i", v, v)
    twice_area = numpy.sqrt(numpy.maximum(uu * vv - dots[:, 0] ** 2, 0.0))
    area = 0.5 * twice_area

    if area.min() < DEGENERACY_FLOOR:
        idx = int(numpy.argmin(area))
        raise DegenerateTriangleError(
            f"triangle {idx} has area {area[idx]:.3e} below the degeneracy floor"
        )

    cot = dots / twice_area[:, None]
    angle = numpy.arctan2(twice_area[:, None], dots)
    return _Corners(area, cot, angle, sq_opposite)


def cotangent_laplacian(mesh: SurfaceMesh) -> sparse.csr_matrix:
    """Cotangent stiffness matrix, L_ij = ½(cot α_ij + cot β_ij), L_ii = -Σ_j L_ij.

    The quadratic form is negative semidefinite.
    """
    corners = _corners(mesh)
    return _laplacian(mesh, corners)


def _laplacian(mesh: SurfaceMesh, corners: _Corners) -> sparse.csr_matrix:
    t = mesh.triangles
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j = t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        w = 0.5 * corners.cot[:, k]
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]

    n = mesh.vertex_count
    off = sparse.coo_matrix(
        (numpy.concatenate(vals), (numpy.concatenate(rows), numpy.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    diag = sparse.diags(numpy.asarray(off.sum(axis=1)).ravel())
    return (off - diag).tocsr()


def _mixed_areas(mesh: SurfaceMesh, corners: _Corners) -> numpy.ndarray:
    area, cot, angle, sq = corners
    obtuse = angle > numpy.pi / 2
    any_obtuse = obtuse.any(axis=1)

    shares = numpy.empty_like(cot)
    for k in range(3):
        # Voronoi share of corner k: edges k→k+1 and k→k+2 are opposite corners k+2, k+1
        voronoi = (sq[:, (k + 2) % 3] * cot[:, (k + 2) % 3] + sq[:, (k + 1) % 3] * cot[:, (k + 1) % 3]) / 8.0
        shares[:, k] = numpy.where(
            any_obtuse,
            numpy.where(obtuse[:, k], area / 2.0, area / 4.0),
            voronoi,
        )

    return numpy.bincount(
        mesh.triangles.ravel(), weights=shares.ravel(), minlength=mesh.vertex_count
    )


def vertex_areas(mesh: SurfaceMesh) -> numpy.ndarray:
    """Mixed Voronoi vertex areas; they partition the surface area."""
    return _mixed_areas(mesh, _corners(mesh))


@attr.s(frozen=True, eq=False)
class CurvaturePacket:
    """Per-vertex curvature fields of a mesh.

    Attributes:
        vertex_area (numpy.ndarray): mixed Voronoi areas, (V,).
        mean_curvature_vec (numpy.ndarray): discrete H⃗, (V, n).
        gaussian_curvature (numpy.ndarray): angle-defect K, (V,).
        sff_density (numpy.ndarray): |A|² = |H⃗|² - 2K, (V,).
        tracefree_density (numpy.ndarray): |A°|² = ½|H⃗|² - 2K, (V,).
        unit_normal (numpy.ndarray, optional): inner unit normals, (V, 3), only in R³.

    """

    vertex_area: numpy.ndarray = attr.ib()
    mean_curvature_vec: numpy.ndarray = attr.ib()
    gaussian_curvature: numpy.ndarray = attr.ib()
    sff_density: numpy.ndarray = attr.ib()
    tracefree_density: numpy.ndarray = attr.ib()
    unit_normal: Optional[numpy.ndarray] = attr.ib(default=None)

    @property
    def mean_curvature_sq(self) -> numpy.ndarray:
        """|H⃗|² per vertex."""
        return numpy.einsum("ij,ij->i", self.mean_curvature_vec, self.mean_curvature_vec)

    def integrate(self, density: numpy.ndarray) -> float:
        """Vertex-area-weighted sum of a per-vertex density."""
        return float(numpy.dot(self.vertex_area, density))


def _inner_normals(mesh: SurfaceMesh) -> numpy.ndarray:
    x = mesh.vertices[mesh.triangles]
    # |cross| is twice the triangle area, so the sum is area weighted
    face_normals = numpy.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0])
    normals = numpy.zeros_like(mesh.vertices)
    for k in range(3):
        numpy.add.at(normals, mesh.triangles[:, k], face_normals)

    norms = numpy.linalg.norm(normals, axis=1)
    normals = normals / numpy.where(norms > 0, norms, 1.0)[:, None]

    sign = -1.0 if signed_volume(mesh) >= 0 else 1.0
    return sign * normals


def _readonly(arr: numpy.ndarray) -> numpy.ndarray:
    arr.setflags(write=False)
    return arr


@cached(  # type: ignore
    TTLCache(maxsize=cache_config.maxsize, ttl=cache_config.ttl),
    key=lambda mesh: hashkey(mesh.digest),
    lock=threading.Lock(),
)
def compute_curvature(mesh: SurfaceMesh) -> CurvaturePacket:
    """Discrete curvature fields of a closed mesh.

    Raises:
        TopologyError: mesh is not closed and consistently oriented.
        DegenerateTriangleError: a triangle is under the degeneracy floor.

    """
    check_mesh(mesh)

    corners = _corners(mesh)
    area = _mixed_areas(mesh, corners)
    lap = _laplacian(mesh, corners)

    hvec = (lap @ mesh.vertices) / area[:, None]

    angle_sum = numpy.bincount(
        mesh.triangles.ravel(), weights=corners.angle.ravel(), minlength=mesh.vertex_count
    )
    gauss = (2.0 * numpy.pi - angle_sum) / area

    hsq = numpy.einsum("ij,ij->i", hvec, hvec)
    sff = hsq - 2.0 * gauss
    tracefree = 0.5 * hsq - 2.0 * gauss

    normal = _readonly(_inner_normals(mesh)) if mesh.ambient_dim == 3 else None

    return CurvaturePacket(
        vertex_area=_readonly(area),
        mean_curvature_vec=_readonly(hvec),
        gaussian_curvature=_readonly(gauss),
        sff_density=_readonly(sff),
        tracefree_density=_readonly(tracefree),
        unit_normal=normal,
    )


VOLUME_FLOOR = 1e-12


def scalar_mean_curvature(mesh: SurfaceMesh, packet: CurvaturePacket) -> numpy.ndarray:
    """Scalar mean curvature H = ⟨H⃗, N⃗⟩ against the inner unit normal.

    Raises:
        CodimensionError: mesh is not in R³.
        DegenerateVolumeError: enclosed volume below 1e-12.

    """
    if mesh.ambient_dim != 3 or packet.unit_normal is None:
        raise CodimensionError(
            f"scalar mean curvature needs a surface in R³, got R^{mesh.ambient_dim}"
        )

    volume = signed_volume(mesh)
    if abs(volume) < VOLUME_FLOOR:
        raise DegenerateVolumeError(f"enclosed volume {volume:.3e} is degenerate")

    return numpy.einsum("ij,ij->i", packet.mean_curvature_vec, packet.unit_normal)
