"""tests cmclab.spheremap."""

import math

import numpy
import pytest

from cmclab.errors import (
    CenteringDivergedError,
    DegenerateCovarianceError,
    GenusError,
    PreconditionUnmetError,
)
from cmclab.generators import (
    clifford_torus,
    generate,
    normalize_area,
    tangent_spheres,
    unit_icosphere,
)
from cmclab.mesh import SurfaceMesh, rigid_transform, scale_mesh
from cmclab.spheremap import (
    SphereParam,
    _build_param,
    align_rigid,
    conformal_to_sphere,
    export_param,
    mobius_dilation,
    mobius_normalize,
    qc_distortion,
    rigidity_pipeline,
    rigidity_report,
)
from cmclab.storage import load_mesh


def _rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return numpy.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _flat_param(domain, image, triangles):
    ones = numpy.ones(len(domain))
    return SphereParam(
        domain_positions=numpy.asarray(domain, dtype=float),
        image_positions=numpy.asarray(image, dtype=float),
        triangles=triangles,
        conformal_factor=numpy.zeros(len(domain)),
        qc_distortion=numpy.ones(len(triangles)),
        domain_cell_area=ones,
        image_cell_area=ones,
    )


def test_qc_distortion():
    """1 for similarities, singular value ratio otherwise."""
    domain = numpy.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    triangles = numpy.array([[0, 1, 2]])

    assert qc_distortion(domain, domain, triangles)[0] == pytest.approx(1.0)
    moved = 3.0 * domain @ _rotation(0.4).T + 1.0
    assert qc_distortion(domain, moved, triangles)[0] == pytest.approx(1.0)

    stretched = domain * [2.0, 1.0, 1.0]
    assert qc_distortion(domain, stretched, triangles)[0] == pytest.approx(2.0)


def test_conformal_to_sphere_round():
    """A round sphere is already its own parametrization."""
    mesh = normalize_area(unit_icosphere(3))
    param = conformal_to_sphere(mesh)

    assert param.converged
    assert param.iterations == 0
    numpy.testing.assert_allclose(numpy.linalg.norm(param.domain_positions, axis=1), 1.0)
    numpy.testing.assert_allclose(param.domain_positions, unit_icosphere(3).vertices, atol=1e-9)
    assert param.domain_cell_area.sum() == pytest.approx(4 * math.pi)
    assert param.image_area == pytest.approx(4 * math.pi)
    assert numpy.abs(param.conformal_factor).max() < 1e-2
    assert param.qc_mean == pytest.approx(1.0, abs=1e-6)


def test_conformal_to_sphere_ellipsoid():
    """The flow rounds an ellipsoid without folding."""
    mesh = generate({"kind": "Ellipsoid", "subdivision": 3, "axes": [1.0, 1.0, 1.4]})
    param = conformal_to_sphere(mesh)

    assert param.iterations > 0
    numpy.testing.assert_allclose(numpy.linalg.norm(param.domain_positions, axis=1), 1.0)
    assert param.domain_cell_area.sum() == pytest.approx(4 * math.pi)
    assert param.qc_mean < 1.05
    numpy.testing.assert_array_equal(param.image_mesh.vertices, mesh.vertices)


def test_conformal_to_sphere_genus():
    """Tori and disconnected surfaces are rejected."""
    with pytest.raises(GenusError):
        conformal_to_sphere(clifford_torus(16, 16))

    with pytest.raises(GenusError):
        conformal_to_sphere(generate({"kind": "TorusOfRevolution", "grid": [32, 16]}))

    with pytest.raises(GenusError):
        conformal_to_sphere(tangent_spheres(1))


def test_mobius_dilation():
    """Stays on the sphere, fixes the axis through the center."""
    points = unit_icosphere(2).vertices
    numpy.testing.assert_allclose(mobius_dilation(points, numpy.zeros(3)), points, atol=1e-12)

    center = numpy.array([0.0, 0.0, 0.4])
    out = mobius_dilation(points, center)
    numpy.testing.assert_allclose(numpy.linalg.norm(out, axis=1), 1.0)
    numpy.testing.assert_allclose(out[0], [0.0, 0.0, 1.0], atol=1e-12)
    numpy.testing.assert_allclose(out[11], [0.0, 0.0, -1.0], atol=1e-12)

    # mass moves away from the center
    assert out[:, 2].mean() < points[:, 2].mean()


def test_mobius_normalize():
    """Off-center domains are re-centered."""
    sphere = unit_icosphere(3)
    base = _build_param(sphere.vertices, sphere.vertices, sphere.triangles)
    shifted = _build_param(
        mobius_dilation(sphere.vertices, numpy.array([0.3, -0.2, 0.1])),
        sphere.vertices,
        sphere.triangles,
    )
    assert numpy.linalg.norm(shifted.centroid) > 0.1

    centered = mobius_normalize(shifted)
    assert centered.centering_iterations > 0
    assert numpy.linalg.norm(centered.centroid) < 1e-5
    numpy.testing.assert_allclose(numpy.linalg.norm(centered.domain_positions, axis=1), 1.0)

    assert mobius_normalize(base).centering_iterations == 0


def test_mobius_normalize_diverged():
    """All the mass at a single point cannot be centered."""
    sphere = unit_icosphere(1)
    pole = numpy.tile([0.0, 0.0, 1.0], (sphere.vertex_count, 1))
    with pytest.raises(CenteringDivergedError):
        mobius_normalize(_flat_param(pole, sphere.vertices, sphere.triangles))


def test_align_rigid_rotation():
    """A rotated sphere aligns back with zero deficit."""
    sphere = unit_icosphere(3)
    rotation = _rotation(math.pi / 6)
    param = _build_param(sphere.vertices, sphere.vertices @ rotation.T, sphere.triangles)

    report = align_rigid(param)
    assert report.w22_deficit < 1e-5
    numpy.testing.assert_allclose(report.rotation, rotation.T, atol=1e-8)
    numpy.testing.assert_allclose(report.translation, 0.0, atol=1e-8)
    assert report.residual_energy == 0.0
    assert report.qc_max == pytest.approx(1.0)


def test_align_rigid_translation():
    """Translations are removed, dilations are not."""
    sphere = unit_icosphere(2)
    moved = _build_param(sphere.vertices, sphere.vertices + [1.0, 2.0, 3.0], sphere.triangles)
    report = align_rigid(moved)
    assert report.w22_deficit < 1e-5
    numpy.testing.assert_allclose(report.translation, [-1.0, -2.0, -3.0], atol=1e-8)

    grown = _build_param(sphere.vertices, 1.2 * sphere.vertices, sphere.triangles)
    assert align_rigid(grown).w22_deficit > 0.1


def test_align_rigid_degenerate():
    """A collinear image has no alignment."""
    sphere = unit_icosphere(1)
    line = numpy.zeros_like(sphere.vertices)
    line[:, 0] = numpy.arange(sphere.vertex_count)
    with pytest.raises(DegenerateCovarianceError):
        align_rigid(_flat_param(sphere.vertices, line, sphere.triangles))


def test_rigidity_report_round():
    """The round sphere has vanishing deficits."""
    report = rigidity_report(normalize_area(unit_icosphere(3)))
    assert report.w22_deficit < 0.1
    assert report.sup_log_conformal < 1e-2
    assert report.sup_exp_conformal < 1e-2
    assert report.c_deficit < 0.05
    assert report.rigidity_sum == pytest.approx(report.w22_deficit + report.sup_log_conformal)
    numpy.testing.assert_allclose(numpy.abs(numpy.linalg.det(report.rotation)), 1.0)


def test_rigidity_report_perturbation():
    """Deficits grow with the perturbation amplitude."""
    small, large = [
        rigidity_report(
            generate(
                {
                    "kind": "PerturbedSphere",
                    "subdivision": 3,
                    "amplitude": amplitude,
                    "normalize_area": True,
                }
            )
        )
        for amplitude in [0.02, 0.08]
    ]
    assert small.rigidity_sum < large.rigidity_sum
    assert small.w22_deficit < large.w22_deficit


def test_rigidity_report_codimension():
    """A round sphere rotated into R⁴."""
    rng = numpy.random.default_rng(5)
    q, _ = numpy.linalg.qr(rng.normal(size=(4, 4)))
    sphere = normalize_area(unit_icosphere(3))
    lifted = SurfaceMesh(
        numpy.hstack([sphere.vertices, numpy.zeros((sphere.vertex_count, 1))]) @ q.T,
        sphere.triangles,
    )

    param, report = rigidity_pipeline(lifted)
    assert param.domain_positions.shape == (sphere.vertex_count, 3)
    assert report.w22_deficit < 0.1
    assert report.residual_energy < 1e-12

    rotation = numpy.array(report.rotation)
    assert rotation.shape == (4, 4)
    numpy.testing.assert_allclose(rotation @ rotation.T, numpy.eye(4), atol=1e-10)
    assert numpy.linalg.det(rotation) == pytest.approx(1.0)


def test_rigidity_pipeline_preconditions():
    """Area must be 4π and the surface a sphere."""
    with pytest.raises(PreconditionUnmetError):
        rigidity_pipeline(scale_mesh(unit_icosphere(2), 2.0))

    with pytest.raises(GenusError):
        rigidity_pipeline(normalize_area(clifford_torus(16, 16)))


def test_export_param(tmp_path):
    """Domain, image and conformal factor files."""
    mesh = normalize_area(unit_icosphere(2))
    param = conformal_to_sphere(mesh)
    domain, image, factor = export_param(param, str(tmp_path), stem="round")

    assert domain.endswith("round-domain.ndmesh")
    numpy.testing.assert_array_equal(load_mesh(domain).vertices, param.domain_positions)
    numpy.testing.assert_array_equal(load_mesh(image).vertices, mesh.vertices)

    with open(factor) as f:
        lines = f.read().splitlines()
    assert lines[0] == "vertex,u,domain_cell_area,image_cell_area"
    assert len(lines) == mesh.vertex_count + 1


def _random_rotation(seed):
    rng = numpy.random.default_rng(seed)
    q, _ = numpy.linalg.qr(rng.normal(size=(3, 3)))
    if numpy.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q, rng.normal(size=3)


def test_rigidity_report_rigid_motion():
    """Moving the input surface does not change its deficits."""
    mesh = generate(
        {"kind": "PerturbedSphere", "subdivision": 3, "amplitude": 0.04, "normalize_area": True}
    )
    rotation, translation = _random_rotation(8)
    report = rigidity_report(mesh)
    moved = rigidity_report(rigid_transform(mesh, rotation, translation))

    assert moved.w22_deficit == pytest.approx(report.w22_deficit, rel=1e-4, abs=1e-8)
    assert moved.sup_log_conformal == pytest.approx(report.sup_log_conformal, rel=1e-4, abs=1e-8)


def test_align_rigid_domain_rotation():
    """Rotating the sphere domain is absorbed by the rigid motion."""
    mesh = generate(
        {"kind": "PerturbedSphere", "subdivision": 3, "amplitude": 0.04, "normalize_area": True}
    )
    param, report = rigidity_pipeline(mesh)
    rotation, _ = _random_rotation(9)
    turned = _build_param(
        param.domain_positions @ rotation.T, param.image_positions, param.triangles
    )

    again = align_rigid(turned)
    assert again.w22_deficit == pytest.approx(report.w22_deficit, rel=1e-8, abs=1e-12)
    numpy.testing.assert_allclose(again.rotation, rotation @ report.rotation, atol=1e-8)
