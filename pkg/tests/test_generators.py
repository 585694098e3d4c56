"""tests cmclab.generators."""

import math

import numpy
import pytest

from cmclab.errors import InvalidSpecError
from cmclab.generators import (
    GeneratorKind,
    GeneratorSpec,
    bubbling_pair,
    bubbling_sweep,
    catenoid_junction,
    clifford_torus,
    generate,
    neck_vertices,
    normalize_area,
    tangent_spheres,
    torus_of_revolution,
    unit_icosphere,
)
from cmclab.mesh import check_mesh, signed_volume, total_area, validate


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_unit_icosphere(level):
    """10·4^k + 2 vertices on the unit sphere."""
    mesh = unit_icosphere(level)
    assert mesh.vertex_count == 10 * 4**level + 2
    assert mesh.triangle_count == 20 * 4**level
    numpy.testing.assert_allclose(numpy.linalg.norm(mesh.vertices, axis=1), 1.0)

    diag = check_mesh(mesh)
    assert diag.euler_characteristic == 2
    assert diag.genus == 0

    # both poles are vertices
    assert numpy.isclose(mesh.vertices[:, 2], 1.0).any()
    assert numpy.isclose(mesh.vertices[:, 2], -1.0).any()


def test_generate_spheres():
    """Icosphere, PerturbedSphere and Ellipsoid."""
    big = generate({"kind": "Icosphere", "subdivision": 2, "radius": 2.0})
    numpy.testing.assert_allclose(numpy.linalg.norm(big.vertices, axis=1), 2.0)

    spec = {"kind": "PerturbedSphere", "subdivision": 2, "amplitude": 0.1}
    bumpy = generate(spec)
    assert bumpy.digest == generate(spec).digest
    assert bumpy.digest != generate({**spec, "seed": 1}).digest
    radii = numpy.linalg.norm(bumpy.vertices, axis=1)
    assert radii.min() >= 0.9 - 1e-12
    assert radii.max() <= 1.1 + 1e-12
    assert radii.max() - radii.min() > 0.05

    flat = generate({**spec, "amplitude": 0.0})
    numpy.testing.assert_allclose(flat.vertices, unit_icosphere(2).vertices)

    normalized = generate({**spec, "normalize_area": True})
    assert total_area(normalized) == pytest.approx(4 * math.pi)

    ellipsoid = generate({"kind": "Ellipsoid", "subdivision": 2, "axes": [1.0, 2.0, 3.0]})
    numpy.testing.assert_allclose(((ellipsoid.vertices / [1.0, 2.0, 3.0]) ** 2).sum(axis=1), 1.0)
    assert numpy.abs(ellipsoid.vertices[:, 2]).max() == pytest.approx(3.0)


def test_clifford_torus():
    """Flat torus on the sphere of radius `scale` in R⁴."""
    mesh = clifford_torus(12, 8, scale=2.0)
    assert mesh.ambient_dim == 4
    assert mesh.vertex_count == 96
    numpy.testing.assert_allclose(numpy.linalg.norm(mesh.vertices, axis=1), 2.0)
    numpy.testing.assert_allclose(numpy.linalg.norm(mesh.vertices[:, :2], axis=1), math.sqrt(2))

    diag = check_mesh(mesh)
    assert diag.euler_characteristic == 0
    assert diag.genus == 1

    spec = generate({"kind": "CliffordTorus", "grid": [12, 8], "radius": 2.0})
    numpy.testing.assert_array_equal(spec.vertices, mesh.vertices)


def test_torus_of_revolution():
    """Outward oriented genus one surface."""
    mesh = torus_of_revolution(24, 12, 2.0, 0.5)
    diag = check_mesh(mesh)
    assert diag.genus == 1
    assert signed_volume(mesh) > 0
    assert signed_volume(mesh) == pytest.approx(2 * math.pi**2 * 2.0 * 0.25, rel=0.1)


def test_catenoid_junction():
    """The neck meets the unit sphere at radius √t."""
    for neck in [0.3, 0.1, 0.02]:
        s0, z0, zc = catenoid_junction(neck)
        assert neck * math.cosh(s0) ** 2 == pytest.approx(1.0)
        assert neck * math.cosh(z0 / neck) == pytest.approx(math.sqrt(neck))
        # the junction circle lies on the sphere centered at (0, 0, zc)
        assert neck + (z0 - zc) ** 2 == pytest.approx(1.0)


def test_bubbling_pair():
    """Closed sphere, symmetric in z, with the waist at the origin."""
    neck = 0.1
    mesh = bubbling_pair(neck, 2)
    diag = check_mesh(mesh)
    assert diag.euler_characteristic == 2
    assert diag.components == 1
    assert signed_volume(mesh) > 0

    z = numpy.sort(mesh.vertices[:, 2])
    numpy.testing.assert_allclose(z, -z[::-1], atol=1e-12)

    region = neck_vertices(mesh, neck)
    assert len(region) > 0
    rho = numpy.linalg.norm(mesh.vertices[region, :2], axis=1)
    assert rho.min() == pytest.approx(neck)
    assert rho.max() <= math.sqrt(neck) + 1e-9

    # two unit spheres worth of area, give or take the neck
    assert total_area(mesh) == pytest.approx(8 * math.pi, rel=0.1)


def test_bubbling_sweep():
    """Descending necks share one meridian count."""
    sweep = bubbling_sweep([0.3, 0.05], 1)
    assert [neck for neck, _ in sweep] == [0.3, 0.05]
    for _, mesh in sweep:
        assert validate(mesh).is_valid

    with pytest.raises(InvalidSpecError):
        bubbling_sweep([0.05, 0.3], 1)

    with pytest.raises(InvalidSpecError):
        bubbling_sweep([0.6], 1)

    with pytest.raises(InvalidSpecError):
        bubbling_sweep([], 1)


def test_tangent_spheres():
    """Two spheres touching at the origin."""
    mesh = tangent_spheres(1)
    diag = validate(mesh)
    assert diag.components == 2
    assert diag.euler_characteristic == 4
    assert numpy.isclose(numpy.linalg.norm(mesh.vertices, axis=1), 0.0).sum() == 2


def test_normalize_area():
    """Scaled to the target area."""
    mesh = normalize_area(torus_of_revolution(16, 8, 2.0, 0.5))
    assert total_area(mesh) == pytest.approx(4 * math.pi)
    assert total_area(normalize_area(mesh, 1.0)) == pytest.approx(1.0)


def test_invalid_spec():
    """Specs are validated before anything is built."""
    assert GeneratorSpec(kind=GeneratorKind.Ellipsoid).axes == (1.0, 1.0, 1.3)

    with pytest.raises(InvalidSpecError):
        generate({"kind": "Cube"})

    with pytest.raises(InvalidSpecError):
        generate({"kind": "CliffordTorus", "grid": [2, 8]})

    with pytest.raises(InvalidSpecError):
        generate({"kind": "TorusOfRevolution", "major_radius": 1.0, "minor_radius": 1.0})

    with pytest.raises(InvalidSpecError):
        generate({"kind": "Ellipsoid", "axes": [1.0, 0.0, 1.0]})

    with pytest.raises(InvalidSpecError):
        generate({"kind": "Icosphere", "subdivision": 8})

    with pytest.raises(InvalidSpecError):
        generate({"kind": "Icosphere", "radius": 1.0, "colour": "red"})
