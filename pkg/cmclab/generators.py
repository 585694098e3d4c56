"""cmclab.generators: deterministic synthetic surface families."""

import math
from enum import Enum
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from cmclab.errors import InvalidSpecError
from cmclab.mesh import SurfaceMesh, orient_outward, scale_mesh, total_area


class GeneratorKind(str, Enum):
    """Surface families."""

    Icosphere = "Icosphere"
    PerturbedSphere = "PerturbedSphere"
    BubblingPair = "BubblingPair"
    CliffordTorus = "CliffordTorus"
    Ellipsoid = "Ellipsoid"
    TorusOfRevolution = "TorusOfRevolution"
    TangentSpheres = "TangentSpheres"


class GeneratorSpec(BaseModel):
    """Parameters of a synthetic surface.

    Only the parameters relevant to `kind` are read; the others keep their defaults.

    Attributes:
        kind: surface family.
        subdivision: icosphere refinement level; for BubblingPair the number of
            meridians is 4·2^subdivision.
        radius: sphere radius (Icosphere, PerturbedSphere) or overall scale (CliffordTorus).
        amplitude: relative height of the PerturbedSphere bumps, in [0, 1).
        frequency: angular frequency of the bumps.
        bumps: number of random bump directions.
        neck_radius: catenoid waist of BubblingPair, in (0, 0.5).
        axes: Ellipsoid semi-axes.
        grid: (u, v) samples of CliffordTorus and TorusOfRevolution.
        major_radius, minor_radius: TorusOfRevolution radii.
        seed: random seed of the bump directions and phases (PCG64).
        normalize_area: scale the result to area 4π.

    """

    model_config = ConfigDict(extra="forbid")

    kind: GeneratorKind
    subdivision: int = Field(4, ge=0, le=7)
    radius: float = Field(1.0, gt=0)
    amplitude: float = Field(0.05, ge=0, lt=1)
    frequency: float = Field(2.0, gt=0)
    bumps: int = Field(6, ge=1)
    neck_radius: float = Field(0.1, gt=0, lt=0.5)
    axes: Tuple[float, float, float] = (1.0, 1.0, 1.3)
    grid: Tuple[int, int] = (64, 64)
    major_radius: float = Field(2.0, gt=0)
    minor_radius: float = Field(0.5, gt=0)
    seed: int = 0
    normalize_area: bool = False

    @model_validator(mode="after")
    def check_shapes(self):
        """Check axes, grid and torus radii."""
        if min(self.axes) <= 0:
            raise ValueError("ellipsoid axes must be positive")
        if min(self.grid) < 3:
            raise ValueError("grid sizes must be at least 3")
        if self.minor_radius >= self.major_radius:
            raise ValueError("minor_radius must be smaller than major_radius")
        return self


def parse_spec(value: Union[GeneratorSpec, Dict[str, Any]]) -> GeneratorSpec:
    """Validate a generator spec, raising InvalidSpecError."""
    if isinstance(value, GeneratorSpec):
        return value
    try:
        return GeneratorSpec.model_validate(value)
    except ValidationError as e:
        raise InvalidSpecError(str(e)) from e


def _icosahedron() -> Tuple[numpy.ndarray, numpy.ndarray]:
    # vertex 0 at the north pole, 11 at the south pole
    z = 1 / math.sqrt(5)
    rho = 2 / math.sqrt(5)
    vertices = [[0.0, 0.0, 1.0]]
    vertices += [
        [rho * math.cos(2 * math.pi * k / 5), rho * math.sin(2 * math.pi * k / 5), z]
        for k in range(5)
    ]
    vertices += [
        [
            rho * math.cos(2 * math.pi * k / 5 + math.pi / 5),
            rho * math.sin(2 * math.pi * k / 5 + math.pi / 5),
            -z,
        ]
        for k in range(5)
    ]
    vertices.append([0.0, 0.0, -1.0])

    faces = []
    for k in range(5):
        u0, u1 = 1 + k, 1 + (k + 1) % 5
        l0, l1 = 6 + k, 6 + (k + 1) % 5
        faces += [[0, u0, u1], [u0, l0, u1], [u1, l0, l1], [11, l1, l0]]

    return numpy.array(vertices), numpy.array(faces)


def _subdivide(
    vertices: numpy.ndarray, faces: numpy.ndarray
) -> Tuple[numpy.ndarray, numpy.ndarray]:
    half = faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    edges, inverse = numpy.unique(numpy.sort(half, axis=1), axis=0, return_inverse=True)
    mid = (len(vertices) + inverse.reshape(-1)).reshape(-1, 3)

    points = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    points /= numpy.linalg.norm(points, axis=1)[:, None]

    a, b, c = faces.T
    ab, bc, ca = mid.T
    new_faces = numpy.concatenate(
        [
            numpy.stack([a, ab, ca], axis=1),
            numpy.stack([b, bc, ab], axis=1),
            numpy.stack([c, ca, bc], axis=1),
            numpy.stack([ab, bc, ca], axis=1),
        ]
    )
    return numpy.concatenate([vertices, points]), new_faces


def unit_icosphere(subdivision: int) -> SurfaceMesh:
    """Subdivided icosahedron on the unit sphere, with vertices at both poles."""
    vertices, faces = _icosahedron()
    for _ in range(subdivision):
        vertices, faces = _subdivide(vertices, faces)
    return SurfaceMesh(vertices, faces)


def _bump_field(points: numpy.ndarray, spec: GeneratorSpec) -> numpy.ndarray:
    rng = numpy.random.default_rng(spec.seed)
    directions = rng.normal(size=(spec.bumps, 3))
    directions /= numpy.linalg.norm(directions, axis=1)[:, None]
    phases = rng.uniform(0.0, 2 * math.pi, size=spec.bumps)

    field = numpy.cos(spec.frequency * points @ directions.T + phases).sum(axis=1)
    peak = numpy.abs(field).max()
    return field / peak if peak > 0 else field


def _grid_faces(nu: int, nv: int) -> numpy.ndarray:
    i, j = numpy.meshgrid(numpy.arange(nu), numpy.arange(nv), indexing="ij")
    i, j = i.ravel(), j.ravel()
    a = i * nv + j
    b = ((i + 1) % nu) * nv + j
    c = ((i + 1) % nu) * nv + (j + 1) % nv
    d = i * nv + (j + 1) % nv
    return numpy.concatenate([numpy.stack([a, b, c], 1), numpy.stack([a, c, d], 1)])


def _torus_angles(nu: int, nv: int) -> Tuple[numpy.ndarray, numpy.ndarray]:
    u, v = numpy.meshgrid(
        2 * math.pi * numpy.arange(nu) / nu, 2 * math.pi * numpy.arange(nv) / nv, indexing="ij"
    )
    return u.ravel(), v.ravel()


def clifford_torus(nu: int, nv: int, scale: float = 1.0) -> SurfaceMesh:
    """(cos u, sin u, cos v, sin v)/√2 on a nu × nv grid, lying on the unit S³."""
    u, v = _torus_angles(nu, nv)
    points = numpy.stack([numpy.cos(u), numpy.sin(u), numpy.cos(v), numpy.sin(v)], 1)
    return SurfaceMesh(scale * points / math.sqrt(2), _grid_faces(nu, nv))


def torus_of_revolution(nu: int, nv: int, major: float, minor: float) -> SurfaceMesh:
    """Torus of revolution around the z axis."""
    u, v = _torus_angles(nu, nv)
    ring = major + minor * numpy.cos(v)
    points = numpy.stack([ring * numpy.cos(u), ring * numpy.sin(u), minor * numpy.sin(v)], 1)
    return orient_outward(SurfaceMesh(points, _grid_faces(nu, nv)))


def catenoid_junction(neck: float) -> Tuple[float, float, float]:
    """(s₀, z₀, z_c) where the catenoid ρ = t·cosh(z/t) meets a unit sphere C¹.

    Tangency gives t·cosh²(s₀) = 1, so the junction circle has radius √t at
    height z₀ = t·s₀ and the sphere center sits at z_c = z₀ + √(1 - t).
    """
    s0 = math.acosh(1 / math.sqrt(neck))
    z0 = neck * s0
    return s0, z0, z0 + math.sqrt(1 - neck)


def _bubbling_profile(neck: float, step: float) -> List[Tuple[float, float]]:
    """(ρ, z) rings from the waist to just below the north pole."""
    s0, _, zc = catenoid_junction(neck)

    # the catenoid is conformal in (w, φ), equal w steps give square cells
    n_cat = max(2, math.ceil(s0 / step))
    rings = [(neck * math.cosh(w), neck * w) for w in numpy.linspace(0, s0, n_cat + 1)]

    # sphere in Mercator steps from the junction to the equator, then uniform to the pole
    psi0 = math.asin(math.sqrt(neck))
    m0 = math.log(math.tan(psi0 / 2))
    n_merc = max(2, math.ceil(-m0 / step))
    for m in numpy.linspace(m0, 0.0, n_merc + 1)[1:]:
        psi = 2 * math.atan(math.exp(m))
        rings.append((math.sin(psi), zc - math.cos(psi)))

    n_cap = max(2, math.ceil((math.pi / 2) / step))
    for psi in numpy.linspace(math.pi / 2, math.pi, n_cap + 1)[1:-1]:
        rings.append((math.sin(psi), zc - math.cos(psi)))

    return rings


def bubbling_pair(neck: float, subdivision: int) -> SurfaceMesh:
    """Two unit spheres joined by a catenoid neck of waist `neck`, symmetric in z."""
    _, _, zc = catenoid_junction(neck)
    segments = 4 * 2**subdivision
    step = 2 * math.pi / segments

    upper = _bubbling_profile(neck, step)
    profile = [(rho, -z) for rho, z in reversed(upper[1:])] + upper

    phi = step * numpy.arange(segments)
    cos_phi, sin_phi = numpy.cos(phi), numpy.sin(phi)

    points = [[0.0, 0.0, -(zc + 1.0)]]
    for rho, z in profile:
        points += numpy.stack(
            [rho * cos_phi, rho * sin_phi, numpy.full(segments, z)], axis=1
        ).tolist()
    points.append([0.0, 0.0, zc + 1.0])

    n_rings = len(profile)
    top = 1 + n_rings * segments
    j = numpy.arange(segments)
    jn = (j + 1) % segments

    faces = [numpy.stack([numpy.zeros(segments, int), 1 + jn, 1 + j], axis=1)]
    for k in range(n_rings - 1):
        a, b = 1 + k * segments, 1 + (k + 1) * segments
        faces.append(numpy.stack([a + j, a + jn, b + jn], axis=1))
        faces.append(numpy.stack([a + j, b + jn, b + j], axis=1))
    last = 1 + (n_rings - 1) * segments
    faces.append(numpy.stack([numpy.full(segments, top), last + j, last + jn], axis=1))

    return orient_outward(SurfaceMesh(numpy.array(points), numpy.concatenate(faces)))


def neck_vertices(mesh: SurfaceMesh, neck: float) -> numpy.ndarray:
    """Indices of the catenoid-region vertices of a BubblingPair mesh."""
    _, z0, _ = catenoid_junction(neck)
    return numpy.flatnonzero(numpy.abs(mesh.vertices[:, 2]) <= z0 + 1e-12)


def tangent_spheres(subdivision: int) -> SurfaceMesh:
    """Two unit spheres touching at the origin."""
    sphere = unit_icosphere(subdivision)
    upper = sphere.vertices + [0.0, 0.0, 1.0]
    lower = sphere.vertices - [0.0, 0.0, 1.0]
    faces = numpy.concatenate([sphere.triangles, sphere.triangles + sphere.vertex_count])
    return SurfaceMesh(numpy.concatenate([upper, lower]), faces)


def normalize_area(mesh: SurfaceMesh, target: float = 4 * math.pi) -> SurfaceMesh:
    """Scale a mesh to the target area."""
    return scale_mesh(mesh, math.sqrt(target / total_area(mesh)))


def generate(spec: Union[GeneratorSpec, Dict[str, Any]]) -> SurfaceMesh:
    """Build the mesh described by a generator spec.

    Raises:
        InvalidSpecError: the generator fields do not validate.

    """
    spec = parse_spec(spec)

    if spec.kind == GeneratorKind.Icosphere:
        mesh = scale_mesh(unit_icosphere(spec.subdivision), spec.radius)

    elif spec.kind == GeneratorKind.PerturbedSphere:
        sphere = unit_icosphere(spec.subdivision)
        radial = 1 + spec.amplitude * _bump_field(sphere.vertices, spec)
        mesh = sphere.with_vertices(spec.radius * sphere.vertices * radial[:, None])

    elif spec.kind == GeneratorKind.BubblingPair:
        mesh = bubbling_pair(spec.neck_radius, spec.subdivision)

    elif spec.kind == GeneratorKind.CliffordTorus:
        mesh = clifford_torus(*spec.grid, scale=spec.radius)

    elif spec.kind == GeneratorKind.Ellipsoid:
        sphere = unit_icosphere(spec.subdivision)
        mesh = sphere.with_vertices(sphere.vertices * numpy.array(spec.axes))

    elif spec.kind == GeneratorKind.TorusOfRevolution:
        mesh = torus_of_revolution(*spec.grid, spec.major_radius, spec.minor_radius)

    else:
        mesh = tangent_spheres(spec.subdivision)

    if spec.normalize_area:
        mesh = normalize_area(mesh)

    return mesh


def bubbling_sweep(
    necks: Sequence[float], subdiv: int
) -> List[Tuple[float, SurfaceMesh]]:
    """BubblingPair meshes for descending neck radii, sharing one meridian count.

    Raises:
        InvalidSpecError: necks not strictly descending in (0, 0.5).

    """
    necks = [float(n) for n in necks]
    if not necks:
        raise InvalidSpecError("at least one neck radius is needed")
    if any(not 0 < n < 0.5 for n in necks):
        raise InvalidSpecError(f"neck radii must be in (0, 0.5), got {necks}")
    if any(b >= a for a, b in zip(necks, necks[1:])):
        raise InvalidSpecError(f"neck radii must be descending, got {necks}")

    return [
        (
            neck,
            generate(
                GeneratorSpec(
                    kind=GeneratorKind.BubblingPair, neck_radius=neck, subdivision=subdiv
                )
            ),
        )
        for neck in necks
    ]
