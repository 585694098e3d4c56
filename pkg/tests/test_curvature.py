"""tests cmclab.curvature."""

import math
import os

import numpy
import pytest

from cmclab.curvature import (
    compute_curvature,
    cotangent_laplacian,
    scalar_mean_curvature,
    vertex_areas,
)
from cmclab.errors import CodimensionError, TopologyError
from cmclab.functionals import energy_report
from cmclab.generators import clifford_torus, torus_of_revolution, unit_icosphere
from cmclab.mesh import SurfaceMesh, flip_orientation, scale_mesh, total_area
from cmclab.storage import load_mesh

tetrahedron4d = os.path.join(os.path.dirname(__file__), "fixtures", "tetrahedron4d.ndmesh")


def test_cotangent_laplacian():
    """Symmetric, rows sum to zero, negative semidefinite."""
    mesh = unit_icosphere(2)
    lap = cotangent_laplacian(mesh)
    assert lap.shape == (mesh.vertex_count, mesh.vertex_count)
    assert abs(lap - lap.T).max() < 1e-12
    numpy.testing.assert_allclose(numpy.asarray(lap.sum(axis=1)).ravel(), 0.0, atol=1e-12)

    rng = numpy.random.default_rng(1)
    for _ in range(5):
        x = rng.normal(size=mesh.vertex_count)
        assert x @ (lap @ x) <= 1e-12


def test_vertex_areas():
    """Mixed areas partition the surface."""
    for mesh in [unit_icosphere(3), torus_of_revolution(24, 12, 2.0, 0.5)]:
        areas = vertex_areas(mesh)
        assert (areas > 0).all()
        assert areas.sum() == pytest.approx(total_area(mesh), rel=1e-10)


def test_unit_sphere():
    """H⃗ ≈ -2F and scalar H ≈ 2 against the inner normal."""
    mesh = unit_icosphere(4)
    packet = compute_curvature(mesh)

    assert packet.vertex_area.sum() == pytest.approx(4 * math.pi, rel=5e-3)

    weights = packet.vertex_area / packet.vertex_area.sum()
    error = numpy.linalg.norm(packet.mean_curvature_vec + 2 * mesh.vertices, axis=1)
    assert numpy.dot(weights, error) < 0.05

    numpy.testing.assert_allclose(packet.unit_normal, -mesh.vertices, atol=1e-2)

    h = scalar_mean_curvature(mesh, packet)
    assert numpy.dot(weights, h) == pytest.approx(2.0, rel=1e-2)

    assert packet.integrate(packet.mean_curvature_sq) == pytest.approx(16 * math.pi, rel=2e-2)
    assert packet.integrate(packet.tracefree_density) == pytest.approx(0.0, abs=1.0)


def test_unit_sphere_refinement():
    """Vertex errors and global deficits shrink from subdivision 3 to 5."""
    max_errors, deficits, j_values = [], [], []
    for level in [3, 4, 5]:
        mesh = unit_icosphere(level)
        packet = compute_curvature(mesh)
        norms = numpy.linalg.norm(packet.mean_curvature_vec, axis=1)
        max_errors.append(numpy.abs(norms - 2.0).max())
        report = energy_report(mesh, packet)
        deficits.append(report.deficit_l2)
        j_values.append(report.j_value)

    assert max_errors[0] > max_errors[1] > max_errors[2]
    assert deficits[0] > deficits[1] > deficits[2]
    assert j_values[0] > j_values[1] > j_values[2]


def test_gauss_bonnet():
    """Angle defects sum to 2πχ exactly."""
    sphere = compute_curvature(unit_icosphere(2))
    assert sphere.integrate(sphere.gaussian_curvature) == pytest.approx(4 * math.pi, rel=1e-10)

    torus = compute_curvature(torus_of_revolution(32, 16, 2.0, 0.5))
    assert torus.integrate(torus.gaussian_curvature) == pytest.approx(0.0, abs=1e-9)


def test_gauss_equation():
    """|A|² = |H⃗|² - 2K and |A°|² = |A|² - ½|H⃗|²."""
    packet = compute_curvature(torus_of_revolution(32, 16, 2.0, 0.5))
    hsq = packet.mean_curvature_sq
    numpy.testing.assert_allclose(packet.sff_density, hsq - 2 * packet.gaussian_curvature)
    numpy.testing.assert_allclose(packet.tracefree_density, packet.sff_density - 0.5 * hsq)


def test_scale_invariance():
    """∫|H⃗|² is invariant under scaling."""
    mesh = unit_icosphere(2)
    packet = compute_curvature(mesh)
    raw = packet.integrate(packet.mean_curvature_sq)
    big = compute_curvature(scale_mesh(mesh, 3.5))
    assert big.integrate(big.mean_curvature_sq) == pytest.approx(raw, rel=1e-9)


def test_orientation():
    """Both orientations measure against the inner normal."""
    mesh = unit_icosphere(2)
    flipped = flip_orientation(mesh)
    h = scalar_mean_curvature(mesh, compute_curvature(mesh))
    h_flipped = scalar_mean_curvature(flipped, compute_curvature(flipped))
    numpy.testing.assert_allclose(h, h_flipped, atol=1e-12)
    assert (h > 0).all()


def test_clifford_torus():
    """Minimal in S³: H⃗ ≈ -2F in R⁴."""
    mesh = clifford_torus(48, 48)
    packet = compute_curvature(mesh)
    assert packet.unit_normal is None

    area = packet.vertex_area.sum()
    assert area == pytest.approx(2 * math.pi**2, rel=1e-2)
    assert packet.integrate(packet.mean_curvature_sq) == pytest.approx(4 * area, rel=1e-2)
    assert packet.integrate(packet.gaussian_curvature) == pytest.approx(0.0, abs=1e-9)

    with pytest.raises(CodimensionError):
        scalar_mean_curvature(mesh, packet)


def test_codimension():
    """Meshes in R⁴ have no unit normal."""
    mesh = load_mesh(tetrahedron4d)
    packet = compute_curvature(mesh)
    assert packet.unit_normal is None
    assert packet.mean_curvature_vec.shape == (4, 4)
    numpy.testing.assert_allclose(packet.mean_curvature_vec[:, 3], 0.0, atol=1e-12)


def test_packet_cache():
    """Equal meshes share a packet; arrays are read-only."""
    mesh = unit_icosphere(1)
    packet = compute_curvature(mesh)
    assert compute_curvature(SurfaceMesh(mesh.vertices.copy(), mesh.triangles.copy())) is packet

    with pytest.raises(ValueError):
        packet.vertex_area[0] = 1.0

    with pytest.raises(TopologyError):
        compute_curvature(SurfaceMesh(mesh.vertices, mesh.triangles[1:]))
