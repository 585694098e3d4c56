"""cmclab.clip: exact area of triangles inside a Euclidean ball of R^n.

A ball of radius r cuts the plane of a triangle in a disk of radius
√(r² - d²), d being the center-to-plane distance. The disk∩triangle area is
the sum over the three edges of the signed area of disk ∩ (disk center, edge),
each made of circular sectors and at most one straight triangle.
"""

import numpy

from cmclab.mesh import SurfaceMesh, face_areas

# relative distance (in units of r) under which a corner sits on the center
SNAP_EPS = 1e-12


def _cross(u: numpy.ndarray, v: numpy.ndarray) -> numpy.ndarray:
    return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]


def _dot(u: numpy.ndarray, v: numpy.ndarray) -> numpy.ndarray:
    return u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1]


def _sector(u: numpy.ndarray, v: numpy.ndarray, radius: numpy.ndarray) -> numpy.ndarray:
    # a corner on the disk center spans no angle
    scale = numpy.sqrt(_dot(u, u) * _dot(v, v))
    angle = numpy.where(
        scale > SNAP_EPS * radius**2, numpy.arctan2(_cross(u, v), _dot(u, v)), 0.0
    )
    return 0.5 * radius**2 * angle


def _edge_areas(a: numpy.ndarray, b: numpy.ndarray, radius: numpy.ndarray) -> numpy.ndarray:
    """Signed area of disk(0, radius) ∩ triangle(0, a, b), row-wise."""
    d = b - a
    qa = _dot(d, d)
    qb = _dot(a, d)
    qc = _dot(a, a) - radius**2
    disc = qb * qb - qa * qc

    # the chord spans [t1, t2] along a + t·d
    with numpy.errstate(divide="ignore", invalid="ignore"):
        root = numpy.sqrt(numpy.maximum(disc, 0.0))
        t1 = (-qb - root) / qa
        t2 = (-qb + root) / qa

    misses = (disc <= 0) | (t2 <= 0) | (t1 >= 1) | (qa <= 0)
    t1 = numpy.clip(numpy.where(misses, 0.0, t1), 0.0, 1.0)
    t2 = numpy.clip(numpy.where(misses, 0.0, t2), 0.0, 1.0)

    p1 = a + t1[:, None] * d
    p2 = a + t2[:, None] * d

    crossing = _sector(a, p1, radius) + 0.5 * _cross(p1, p2) + _sector(p2, b, radius)
    return numpy.where(misses, _sector(a, b, radius), crossing)


def _plane_frames(x: numpy.ndarray, center: numpy.ndarray, r: float):
    """2D coordinates of each triangle (rows of x) relative to the projected center."""
    p0 = x[:, 0]
    u = x[:, 1] - p0
    v = x[:, 2] - p0
    q = center - p0

    e1 = u / numpy.linalg.norm(u, axis=1)[:, None]
    w = v - numpy.einsum("ij,ij->i", v, e1)[:, None] * e1
    e2 = w / numpy.linalg.norm(w, axis=1)[:, None]

    q1 = numpy.einsum("ij,ij->i", q, e1)
    q2 = numpy.einsum("ij,ij->i", q, e2)
    dist_sq = numpy.maximum(numpy.einsum("ij,ij->i", q, q) - q1 * q1 - q2 * q2, 0.0)

    origin = numpy.stack([-q1, -q2], axis=1)
    corner_u = numpy.stack([numpy.linalg.norm(u, axis=1) - q1, -q2], axis=1)
    corner_v = numpy.stack(
        [numpy.einsum("ij,ij->i", v, e1) - q1, numpy.einsum("ij,ij->i", v, e2) - q2],
        axis=1,
    )
    return (_snap(origin, r), _snap(corner_u, r), _snap(corner_v, r)), dist_sq


def _snap(corner: numpy.ndarray, r: float) -> numpy.ndarray:
    """Corners within rounding noise of the projected center, set to (0, 0)."""
    close = _dot(corner, corner) <= (SNAP_EPS * r) ** 2
    return numpy.where(close[:, None], 0.0, corner)


def clipped_areas(mesh: SurfaceMesh, center: numpy.ndarray, r: float) -> numpy.ndarray:
    """Per-triangle area inside the closed ball B_r(center)."""
    center = numpy.asarray(center, dtype=numpy.float64)
    x = mesh.vertices[mesh.triangles]
    areas = face_areas(mesh)
    out = numpy.zeros(mesh.triangle_count)

    vertex_dist = numpy.linalg.norm(x - center, axis=2)
    inside = numpy.all(vertex_dist <= r, axis=1)
    out[inside] = areas[inside]

    # a triangle lies in the ball of its centroid with the largest corner distance
    centroid = x.mean(axis=1)
    spread = numpy.linalg.norm(x - centroid[:, None, :], axis=2).max(axis=1)
    far = numpy.linalg.norm(centroid - center, axis=1) - spread >= r

    todo = numpy.flatnonzero(~inside & ~far)
    if len(todo) == 0:
        return out

    corners, dist_sq = _plane_frames(x[todo], center, r)
    radius_sq = r * r - dist_sq
    cut = radius_sq > 0
    if not cut.any():
        return out

    radius = numpy.sqrt(numpy.where(cut, radius_sq, 0.0))
    c0, c1, c2 = corners
    total = (
        _edge_areas(c0, c1, radius)
        + _edge_areas(c1, c2, radius)
        + _edge_areas(c2, c0, radius)
    )
    clipped = numpy.minimum(numpy.abs(total), areas[todo])
    out[todo] = numpy.where(cut, clipped, 0.0)
    return out
