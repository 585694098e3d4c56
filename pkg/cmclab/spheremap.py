"""cmclab.spheremap: conformal sphere parametrization and rigidity deficits.

The domain sphere is obtained by the conformalized mean curvature flow: the
stiffness matrix of the input metric is frozen and only the lumped mass
follows the flow, (M_t - τL₀)X_{t+1} = M_t X_t. The flowed vertices are
projected to the unit sphere, centered by Möbius dilations and finally
compared to the image with a weighted orthogonal Procrustes fit.
"""

import math
import os
from typing import Optional, Tuple

import attr
import numpy
from scipy import sparse
from scipy.sparse.linalg import factorized

from cmclab.curvature import compute_curvature, cotangent_laplacian
from cmclab.errors import (
    CenteringDivergedError,
    DegenerateCovarianceError,
    FlowDivergedError,
    GenusError,
    PreconditionUnmetError,
)
from cmclab.functionals import j_functional
from cmclab.logger import logger
from cmclab.mesh import SurfaceMesh, check_mesh, face_areas
from cmclab.models import RigidityReport
from cmclab.settings import flow_config
from cmclab.storage import save_mesh
from cmclab.utils import write_csv

SPHERE_AREA = 4.0 * math.pi

# relative area slack accepted by `rigidity_report`
AREA_RTOL = 1e-2

# a centering step never leaves this ball
MAX_DILATION = 0.9


@attr.s(frozen=True, eq=False)
class SphereParam:
    """Discrete conformal map from the unit sphere onto a mesh.

    Attributes:
        domain_positions (numpy.ndarray): (V, 3) unit vectors.
        image_positions (numpy.ndarray): (V, n) mesh positions.
        triangles (numpy.ndarray): (T, 3) shared connectivity.
        conformal_factor (numpy.ndarray): u with e^{2u} = image cell / domain cell.
        qc_distortion (numpy.ndarray): (T,) ratio of singular values, ≥ 1.
        domain_cell_area (numpy.ndarray): barycentric cells, summing to 4π.
        image_cell_area (numpy.ndarray): barycentric cells of the image.
        iterations (int): flow steps taken.
        converged (bool): the flow became round (or stalled) before the cap.
        centering_iterations (int): Möbius steps taken by `mobius_normalize`.

    """

    domain_positions: numpy.ndarray = attr.ib()
    image_positions: numpy.ndarray = attr.ib()
    triangles: numpy.ndarray = attr.ib()
    conformal_factor: numpy.ndarray = attr.ib()
    qc_distortion: numpy.ndarray = attr.ib()
    domain_cell_area: numpy.ndarray = attr.ib()
    image_cell_area: numpy.ndarray = attr.ib()
    iterations: int = attr.ib(default=0)
    converged: bool = attr.ib(default=True)
    centering_iterations: int = attr.ib(default=0)

    @property
    def domain_mesh(self) -> SurfaceMesh:
        """PL sphere spanned by the domain positions."""
        return SurfaceMesh(self.domain_positions, self.triangles)

    @property
    def image_mesh(self) -> SurfaceMesh:
        """The parametrized mesh."""
        return SurfaceMesh(self.image_positions, self.triangles)

    @property
    def image_area(self) -> float:
        """Total image area."""
        return float(self.image_cell_area.sum())

    @property
    def qc_mean(self) -> float:
        """Domain-area-weighted mean of `qc_distortion`."""
        w = face_areas(self.domain_mesh)
        return float(numpy.dot(w, self.qc_distortion) / w.sum())

    @property
    def centroid(self) -> numpy.ndarray:
        """Centroid of the domain positions under the image cell weights."""
        return _weighted_mean(self.domain_positions, self.image_cell_area)


def _weighted_mean(x: numpy.ndarray, w: numpy.ndarray) -> numpy.ndarray:
    return numpy.tensordot(w, x, axes=(0, 0)) / w.sum()


def _cell_areas(positions: numpy.ndarray, triangles: numpy.ndarray) -> numpy.ndarray:
    areas = face_areas(SurfaceMesh(positions, triangles))
    return numpy.bincount(
        triangles.ravel(), weights=numpy.repeat(areas / 3.0, 3), minlength=len(positions)
    )


def qc_distortion(
    domain: numpy.ndarray, image: numpy.ndarray, triangles: numpy.ndarray
) -> numpy.ndarray:
    """Per-triangle √(λmax/λmin) of the affine map between corresponding triangles."""

    def gram(x):
        t = x[triangles]
        e1, e2 = t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]
        return (
            numpy.einsum("ij,ij->i", e1, e1),
            numpy.einsum("ij,ij->i", e1, e2),
            numpy.einsum("ij,ij->i", e2, e2),
        )

    a, b, c = gram(domain)
    e, f, g = gram(image)

    # eigenvalues of G_d⁻¹G_e from its trace and determinant
    det_d = a * c - b * b
    trace = (c * e - 2.0 * b * f + a * g) / det_d
    det = (e * g - f * f) / det_d
    root = numpy.sqrt(numpy.maximum(trace * trace - 4.0 * det, 0.0))
    lmax = 0.5 * (trace + root)
    lmin = numpy.maximum(0.5 * (trace - root), 1e-300)
    return numpy.maximum(numpy.sqrt(lmax / lmin), 1.0)


def _build_param(
    domain: numpy.ndarray, image: numpy.ndarray, triangles: numpy.ndarray, **kwargs
) -> SphereParam:
    domain_cells = _cell_areas(domain, triangles)
    domain_cells *= SPHERE_AREA / domain_cells.sum()
    image_cells = _cell_areas(image, triangles)
    return SphereParam(
        domain_positions=domain,
        image_positions=image,
        triangles=triangles,
        conformal_factor=0.5 * numpy.log(image_cells / domain_cells),
        qc_distortion=qc_distortion(domain, image, triangles),
        domain_cell_area=domain_cells,
        image_cell_area=image_cells,
        **kwargs,
    )


def _check_sphere_type(mesh: SurfaceMesh):
    diag = check_mesh(mesh)
    if diag.euler_characteristic != 2 or diag.components != 1:
        raise GenusError(
            f"expected a connected sphere-type surface (χ = 2), got χ = "
            f"{diag.euler_characteristic} with {diag.components} component(s)"
        )


def _normalize(x: numpy.ndarray, triangles: numpy.ndarray) -> numpy.ndarray:
    cells = _cell_areas(x, triangles)
    x = x - _weighted_mean(x, cells)
    return x * math.sqrt(SPHERE_AREA / cells.sum())


def _sphericity(x: numpy.ndarray, triangles: numpy.ndarray) -> float:
    w = _cell_areas(x, triangles)
    radii = numpy.linalg.norm(x - _weighted_mean(x, w), axis=1)
    mean = numpy.dot(w, radii) / w.sum()
    return float(math.sqrt(numpy.dot(w, (radii - mean) ** 2) / w.sum()) / mean)


def _principal_frame(
    x: numpy.ndarray, w: numpy.ndarray
) -> Tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]:
    """Weighted mean and eigenvectors of the weighted covariance, largest first."""
    mean = _weighted_mean(x, w)
    centered = x - mean
    cov = (centered * w[:, None]).T @ centered / w.sum()
    values, vectors = numpy.linalg.eigh(cov)
    order = numpy.argsort(values)[::-1]
    return mean, values[order], vectors[:, order]


def _fold_count(domain: numpy.ndarray, triangles: numpy.ndarray) -> int:
    t = domain[triangles]
    signs = numpy.sign(numpy.einsum("ij,ij->i", t[:, 0], numpy.cross(t[:, 1], t[:, 2])))
    majority = 1.0 if (signs > 0).sum() >= (signs < 0).sum() else -1.0
    return int(numpy.count_nonzero(signs != majority))


def conformal_to_sphere(
    mesh: SurfaceMesh,
    time_step: Optional[float] = None,
    max_iterations: Optional[int] = None,
) -> SphereParam:
    """Map a sphere-type mesh conformally onto the unit sphere.

    Raises:
        GenusError: mesh is not a connected surface with χ = 2.
        FlowDivergedError: the flowed sphere folds, or the flow hit the
            iteration cap without meeting the quality gate.

    """
    _check_sphere_type(mesh)

    tau = time_step if time_step is not None else flow_config.time_step
    cap = max_iterations if max_iterations is not None else flow_config.max_iterations
    tolerance = flow_config.sphericity_tolerance

    triangles = mesh.triangles
    stiffness = cotangent_laplacian(mesh)
    x = _normalize(numpy.array(mesh.vertices), triangles)

    iterations = 0
    stalled = False
    converged = _sphericity(x, triangles) < tolerance
    while not converged and iterations < cap:
        mass = sparse.diags(_cell_areas(x, triangles))
        solve = factorized((mass - tau * stiffness).tocsc())
        rhs = mass @ x
        step = numpy.column_stack([solve(rhs[:, k]) for k in range(x.shape[1])])
        step = _normalize(step, triangles)
        iterations += 1

        moved = float(numpy.abs(step - x).max())
        x = step
        stalled = moved < tolerance
        converged = stalled or _sphericity(x, triangles) < tolerance

    logger.debug(f"conformal flow stopped after {iterations} step(s), converged={converged}")
    if stalled:
        # stationary short of round: radial projection, Möbius balancing follows
        logger.info(f"conformal flow stalled at sphericity {_sphericity(x, triangles):.3e}")

    if x.shape[1] > 3:
        mean, _, vectors = _principal_frame(x, _cell_areas(x, triangles))
        x = (x - mean) @ vectors[:, :3]

    domain = x / numpy.linalg.norm(x, axis=1)[:, None]

    folds = _fold_count(domain, triangles)
    if folds:
        raise FlowDivergedError(f"{folds} triangle(s) fold over on the parametrizing sphere")

    param = _build_param(
        domain,
        numpy.array(mesh.vertices),
        triangles,
        iterations=iterations,
        converged=converged,
    )

    if param.qc_mean > flow_config.qc_gate:
        if not converged:
            raise FlowDivergedError(
                f"flow hit {cap} iterations with mean distortion {param.qc_mean:.4f}"
            )
        logger.warning(
            f"mean quasi-conformal distortion {param.qc_mean:.4f} exceeds "
            f"{flow_config.qc_gate}"
        )

    return param


def mobius_dilation(points: numpy.ndarray, center: numpy.ndarray) -> numpy.ndarray:
    """Möbius map of the unit sphere that sends the interior point `center` to 0."""
    c = numpy.asarray(center, dtype=numpy.float64)
    cc = float(numpy.dot(c, c))
    xc = points @ c
    num = (1.0 - cc) * points - (2.0 - 2.0 * xc)[:, None] * c
    out = num / (1.0 - 2.0 * xc + cc)[:, None]
    return out / numpy.linalg.norm(out, axis=1)[:, None]


def mobius_normalize(param: SphereParam) -> SphereParam:
    """Center the domain by Möbius dilations until its weighted centroid vanishes.

    Raises:
        CenteringDivergedError: the centroid reaches the sphere or is still off
            center after the iteration cap.

    """
    w = param.image_cell_area
    x = numpy.array(param.domain_positions)
    tolerance = flow_config.centering_tolerance

    iterations = 0
    c = _weighted_mean(x, w)
    while numpy.linalg.norm(c) >= tolerance:
        if numpy.linalg.norm(c) >= 1.0 - 1e-9:
            raise CenteringDivergedError("all mass is concentrated at one point of the sphere")
        if iterations >= flow_config.centering_max_iterations:
            raise CenteringDivergedError(
                f"centroid norm {numpy.linalg.norm(c):.3e} after {iterations} iterations"
            )

        # first-order step: the centroid moves by -2s + 2Ms for second moment M
        moment = (x * w[:, None]).T @ x / w.sum()
        try:
            s = 0.5 * numpy.linalg.solve(numpy.eye(3) - moment, c)
        except numpy.linalg.LinAlgError:
            s = 0.75 * c
        norm = numpy.linalg.norm(s)
        if norm >= MAX_DILATION:
            s *= MAX_DILATION / norm

        x = mobius_dilation(x, s)
        iterations += 1
        c = _weighted_mean(x, w)

    return _build_param(
        x,
        param.image_positions,
        param.triangles,
        iterations=param.iterations,
        converged=param.converged,
        centering_iterations=iterations,
    )


def _kabsch(
    q: numpy.ndarray, p: numpy.ndarray, w: numpy.ndarray, proper: bool = True
) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Weighted R, t minimizing Σ w|R·q + t - p|², rotation kept proper when asked."""
    q_mean = _weighted_mean(q, w)
    p_mean = _weighted_mean(p, w)
    h = ((q - q_mean) * w[:, None]).T @ (p - p_mean)
    u, s, vt = numpy.linalg.svd(h)
    if s[0] <= 0 or s[1] <= 1e-12 * s[0]:
        raise DegenerateCovarianceError(
            f"cross-covariance has rank < 2 (singular values {s[0]:.3e}, {s[1]:.3e})"
        )

    v = vt.T
    d = numpy.sign(numpy.linalg.det(v @ u.T)) if proper else 1.0
    rotation = v @ numpy.diag([1.0, 1.0, d]) @ u.T
    return rotation, p_mean - rotation @ q_mean


def _w22_energy(
    diff: numpy.ndarray, domain: SurfaceMesh, cells: numpy.ndarray
) -> float:
    stiffness = cotangent_laplacian(domain)
    lap = stiffness @ diff

    l2 = float(numpy.dot(cells, numpy.einsum("ij,ij->i", diff, diff)))
    # Dirichlet energy of the PL field: Σ_T area|∇D|² = -⟨D, L D⟩
    gradient = max(-float(numpy.einsum("ij,ij->", diff, lap)), 0.0)
    laplacian = float((numpy.einsum("ij,ij->i", lap, lap) / cells).sum())
    return l2 + gradient + laplacian


def align_rigid(param: SphereParam, target_radius: float = 1.0) -> RigidityReport:
    """Rigid motion taking the image closest to the sphere of `target_radius`.

    Beyond R³ the image is first expressed in its best-fit affine 3-space; the
    energy off that 3-space is reported as `residual_energy` and counts in
    `w22_deficit`.

    Raises:
        DegenerateCovarianceError: the weighted cross-covariance has rank < 2.

    """
    w = param.domain_cell_area
    image = param.image_positions
    target = target_radius * param.domain_positions
    n = image.shape[1]

    if n == 3:
        rotation, translation = _kabsch(image, target, w)
        aligned = image @ rotation.T + translation
        residual = 0.0
    else:
        mean, _, vectors = _principal_frame(image, w)
        frame, complement = vectors[:, :3], vectors[:, 3:]
        coords = (image - mean) @ frame

        # any 3x3 orthogonal map extends to a proper rotation of R^n by the complement
        inner, offset = _kabsch(coords, target, w, proper=False)
        rotation = numpy.vstack([inner @ frame.T, complement.T])
        if numpy.linalg.det(rotation) < 0:
            rotation[-1] *= -1.0
        translation = numpy.concatenate([offset - inner @ frame.T @ mean, -complement.T @ mean])

        full = image @ rotation.T + translation
        aligned = full[:, :3]
        off = full[:, 3:]
        residual = float(numpy.dot(w, numpy.einsum("ij,ij->i", off, off)))

    diff = aligned - target
    energy = _w22_energy(diff, param.domain_mesh, w) + residual

    u = param.conformal_factor
    return RigidityReport(
        w22_deficit=math.sqrt(energy),
        sup_log_conformal=float(numpy.abs(u).max()),
        sup_exp_conformal=float(numpy.abs(numpy.expm1(u)).max()),
        rotation=rotation.tolist(),
        translation=translation.tolist(),
        qc_max=float(param.qc_distortion.max()),
        qc_mean=param.qc_mean,
        residual_energy=residual,
    )


def rigidity_pipeline(mesh: SurfaceMesh) -> Tuple[SphereParam, RigidityReport]:
    """Centered parametrization of an area-4π sphere-type mesh and its deficits.

    Raises:
        GenusError: mesh is not sphere-type.
        PreconditionUnmetError: area is not 4π within 1%.

    """
    _check_sphere_type(mesh)

    area = float(face_areas(mesh).sum())
    if abs(area - SPHERE_AREA) > AREA_RTOL * SPHERE_AREA:
        raise PreconditionUnmetError(f"area {area:.6g} is not normalized to 4π")

    param = mobius_normalize(conformal_to_sphere(mesh))
    report = align_rigid(param, target_radius=1.0)

    _, c = j_functional(mesh, compute_curvature(mesh))
    return param, report.model_copy(update={"c_deficit": abs(c - 2.0)})


def rigidity_report(mesh: SurfaceMesh) -> RigidityReport:
    """Rigidity deficits of an area-4π sphere-type mesh against the unit sphere."""
    _, report = rigidity_pipeline(mesh)
    return report


def export_param(param: SphereParam, directory: str, stem: str = "sphere") -> Tuple[str, str, str]:
    """Write the domain and image as NDMESH and the conformal factor as CSV."""
    domain_path = os.path.join(directory, f"{stem}-domain.ndmesh")
    image_path = os.path.join(directory, f"{stem}-image.ndmesh")
    factor_path = os.path.join(directory, f"{stem}-u.csv")

    save_mesh(param.domain_mesh, domain_path)
    save_mesh(param.image_mesh, image_path)
    write_csv(
        factor_path,
        [
            {"vertex": i, "u": float(u), "domain_cell_area": float(d), "image_cell_area": float(m)}
            for i, (u, d, m) in enumerate(
                zip(param.conformal_factor, param.domain_cell_area, param.image_cell_area)
            )
        ],
        ["vertex", "u", "domain_cell_area", "image_cell_area"],
    )

    return domain_path, image_path, factor_path
