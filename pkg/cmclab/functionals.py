"""cmclab.functionals: global integrals, deficits and the inequality checks built on them."""

import math
from typing import Optional, Tuple

import numpy
from scipy.spatial.distance import cdist

from cmclab.curvature import CurvaturePacket, compute_curvature, scalar_mean_curvature
from cmclab.errors import (
    CodimensionError,
    DegeneratePositionsError,
    DegenerateVolumeError,
    InvalidGammaError,
    NegativeVolumeError,
    PreconditionUnmetError,
)
from cmclab.logger import logger
from cmclab.mesh import SurfaceMesh, flip_orientation, scale_mesh, signed_volume
from cmclab.models import AlexandrovReport, CheckResult, EnergyReport, le

POSITION_FLOOR = 1e-12
VOLUME_FLOOR = 1e-12

# relative slack on j_c against its closed-form interval
C_BOUNDS_RTOL = 0.02

# discrete slack on the lower bound of H̄
MEAN_BOUND_ALLOWANCE = 0.02

# discrete slack on ∫|H - H̄|² when checked against ε²
DEFICIT_ALLOWANCE = 0.05

RESCALING_RTOL = 1e-2


def vertex_mean(packet: CurvaturePacket, values: numpy.ndarray) -> numpy.ndarray:
    """Area-weighted mean ⨍ of a per-vertex field."""
    w = packet.vertex_area
    return numpy.tensordot(w, values, axes=(0, 0)) / w.sum()


def centered_positions(mesh: SurfaceMesh, packet: CurvaturePacket) -> numpy.ndarray:
    """F - ⨍F with the vertex-area weighting used by every integral."""
    return mesh.vertices - vertex_mean(packet, mesh.vertices)


def diameter(mesh: SurfaceMesh, chunk: int = 512) -> float:
    """Exact max distance over vertex pairs, pruned with a bounding sphere."""
    x = mesh.vertices

    # two sweeps of farthest points give a lower bound
    a = int(numpy.argmax(numpy.linalg.norm(x - x[0], axis=1)))
    dist_a = numpy.linalg.norm(x - x[a], axis=1)
    best = float(dist_a.max())

    center = x.mean(axis=0)
    radii = numpy.linalg.norm(x - center, axis=1)
    # |xi - xj| <= ri + rj <= ri + max(r)
    candidates = x[radii + radii.max() >= best]

    for start in range(0, len(candidates), chunk):
        block = cdist(candidates[start : start + chunk], candidates)
        best = max(best, float(block.max()))

    return best


def j_residual(
    mesh: SurfaceMesh, packet: CurvaturePacket, c: float, centered: bool = True
) -> float:
    """∫|H⃗ + cF|²dμ, with F centered at its area-weighted mean by default."""
    f = centered_positions(mesh, packet) if centered else mesh.vertices
    v = packet.mean_curvature_vec + c * f
    return packet.integrate(numpy.einsum("ij,ij->i", v, v))


def _j_minimizer(
    mesh: SurfaceMesh, packet: CurvaturePacket, centered: bool
) -> Tuple[float, float, float]:
    f = centered_positions(mesh, packet) if centered else mesh.vertices
    f2 = packet.integrate(numpy.einsum("ij,ij->i", f, f))
    if f2 < POSITION_FLOOR:
        raise DegeneratePositionsError(f"∫|F|²dμ = {f2:.3e} is degenerate")

    area = float(packet.vertex_area.sum())
    raw = packet.integrate(packet.mean_curvature_sq)

    # -∫⟨H⃗, F⟩ is the cotangent Dirichlet energy of F, i.e. twice the area
    c = 2.0 * area / f2
    value = raw - c * c * f2
    if value < 0:
        if value < -1e-12 * max(raw, 1.0):
            logger.warning(f"clamping negative J value {value:.3e} to 0")
        value = 0.0

    return value, c, f2


def j_functional(mesh: SurfaceMesh, packet: CurvaturePacket) -> Tuple[float, float]:
    """Minimum over c of ∫|H⃗ + cF|²dμ on the centered immersion.

    Returns:
        tuple: (j_value, j_c) with j_c = 2·area / ∫|F|²dμ.

    Raises:
        DegeneratePositionsError: ∫|F|²dμ below 1e-12.

    """
    value, c, _ = _j_minimizer(mesh, packet, centered=True)
    return value, c


def energy_report(mesh: SurfaceMesh, packet: CurvaturePacket) -> EnergyReport:
    """Global functionals as vertex-area-weighted sums of the packet densities."""
    area = float(packet.vertex_area.sum())
    raw = packet.integrate(packet.mean_curvature_sq)

    hnorm = numpy.sqrt(packet.mean_curvature_sq)
    abs_deficit = packet.integrate((hnorm - vertex_mean(packet, hnorm)) ** 2)

    deficit_l2: Optional[float] = None
    mean_scalar: Optional[float] = None
    if mesh.ambient_dim == 3:
        try:
            h = scalar_mean_curvature(mesh, packet)
        except DegenerateVolumeError as e:
            logger.warning(f"no scalar mean curvature: {e}")
        else:
            mean_scalar = float(vertex_mean(packet, h))
            deficit_l2 = packet.integrate((h - mean_scalar) ** 2)

    j_value, j_c, f2 = _j_minimizer(mesh, packet, centered=True)

    return EnergyReport(
        area=area,
        willmore_quarter=raw / 4.0,
        willmore_raw=raw,
        deficit_l2=deficit_l2,
        mean_scalar=mean_scalar,
        abs_mean_deficit=abs_deficit,
        j_value=j_value,
        j_c=j_c,
        position_l2=f2,
        tracefree_energy=packet.integrate(packet.tracefree_density),
        total_curvature=packet.integrate(packet.sff_density),
        euler_char=mesh.vertex_count - len(mesh.edges) + mesh.triangle_count,
        diameter=diameter(mesh),
        ambient_dim=mesh.ambient_dim,
    )


def c_bounds_check(report: EnergyReport, epsilon: float) -> CheckResult:
    """j_c inside [(16π - ε²)/(2μ), 2W/μ] (2% relative allowance).

    Raises:
        PreconditionUnmetError: j_value exceeds ε².

    """
    if report.j_value > epsilon**2:
        raise PreconditionUnmetError(
            f"J = {report.j_value:.6g} exceeds epsilon² = {epsilon**2:.6g}"
        )

    lower = (16 * math.pi - epsilon**2) / (2 * report.area)
    upper = 2 * report.willmore_quarter / report.area
    return CheckResult(
        name="c_bounds",
        checks=[
            le("lower <= j_c", lower, report.j_c, rtol=C_BOUNDS_RTOL),
            le("j_c <= 2W/area", report.j_c, upper, rtol=C_BOUNDS_RTOL),
        ],
    )


def diameter_bound(report: EnergyReport) -> float:
    """28·√(area·W)."""
    return 28.0 * math.sqrt(report.area * report.willmore_quarter)


def diameter_bound_check(report: EnergyReport) -> Tuple[bool, float]:
    """diam ≤ 28√(area·W); returns (holds, RHS - diameter)."""
    rhs = diameter_bound(report)
    return report.diameter <= rhs, rhs - report.diameter


def alexandrov_report(mesh: SurfaceMesh, packet: CurvaturePacket) -> AlexandrovReport:
    """Reference curvature H⁰ = 2·area/(3·volume) and the normalized deficit δ₂.

    An inward-oriented mesh is flipped once before measuring the volume.

    Raises:
        CodimensionError: mesh is not in R³.
        NegativeVolumeError: no positive enclosed volume after re-orientation.

    """
    if mesh.ambient_dim != 3:
        raise CodimensionError(
            f"Alexandrov deficit needs a surface in R³, got R^{mesh.ambient_dim}"
        )

    volume = signed_volume(mesh)
    if volume < 0:
        logger.debug("negative enclosed volume, flipping orientation")
        mesh = flip_orientation(mesh)
        volume = signed_volume(mesh)
    if volume <= VOLUME_FLOOR:
        raise NegativeVolumeError(f"enclosed volume {volume:.3e} is not positive")

    area = float(packet.vertex_area.sum())
    h0 = 2.0 * area / (3.0 * volume)
    # the scalar curvature is measured against the inner normal in both orientations
    h = scalar_mean_curvature(mesh, packet)
    delta2 = math.sqrt(packet.integrate((h / h0 - 1.0) ** 2) / area)

    return AlexandrovReport(
        enclosed_volume=volume,
        h0=h0,
        delta2=delta2,
        rescale_factor=math.sqrt(4 * math.pi / area),
    )


def normalize_h0(mesh: SurfaceMesh) -> SurfaceMesh:
    """Scale a surface in R³ so that its reference curvature H⁰ equals 2."""
    packet = compute_curvature(mesh)
    report = alexandrov_report(mesh, packet)
    # H⁰ scales like 1/s
    return scale_mesh(mesh, report.h0 / 2.0)


def rescaling_lemma_check(mesh: SurfaceMesh, V_bound: float) -> CheckResult:
    """Rescale an H⁰ = 2 surface to area 4π and check the deficit inequalities.

    Checks the scaled area is 4π (relative 1e-9), ∫|H - H̄|² ≤ 4V·δ₂² and
    ∫|H|² ≤ 4(1 + δ₂)²·V, the last two with a 1% allowance.

    Raises:
        PreconditionUnmetError: H⁰ deviates from 2 by more than 1%, or area > V_bound.

    """
    packet = compute_curvature(mesh)
    alexandrov = alexandrov_report(mesh, packet)
    if abs(alexandrov.h0 - 2.0) > 0.02:
        raise PreconditionUnmetError(
            f"H0 = {alexandrov.h0:.6g} is not 2 within 1%, pre-scale the mesh"
        )

    area = float(packet.vertex_area.sum())
    if area > V_bound:
        raise PreconditionUnmetError(f"area {area:.6g} exceeds V = {V_bound:.6g}")

    scaled = scale_mesh(mesh, alexandrov.rescale_factor)
    report = energy_report(scaled, compute_curvature(scaled))
    delta2 = alexandrov.delta2

    return CheckResult(
        name="rescaling_lemma",
        checks=[
            le("|area - 4pi|", abs(report.area - 4 * math.pi), 4 * math.pi * 1e-9),
            le(
                "deficit_l2 <= 4V delta2^2",
                report.deficit_l2,
                4 * V_bound * delta2**2,
                rtol=RESCALING_RTOL,
                atol=1e-12,
            ),
            le(
                "willmore_raw <= 4(1+delta2)^2 V",
                report.willmore_raw,
                4 * (1 + delta2) ** 2 * V_bound,
                rtol=RESCALING_RTOL,
            ),
        ],
    )


def mean_lower_bound_check(report: EnergyReport, epsilon: float) -> CheckResult:
    """H̄ ≥ 2√(1 - ε²/16π) - 0.02 on an area-4π surface.

    Raises:
        CodimensionError: report has no scalar mean curvature.
        PreconditionUnmetError: area off 4π by more than 0.5%, or deficit above ε².

    """
    if report.mean_scalar is None or report.deficit_l2 is None:
        raise CodimensionError("mean lower bound needs a surface in R³")

    if abs(report.area - 4 * math.pi) > 0.005 * 4 * math.pi:
        raise PreconditionUnmetError(f"area {report.area:.6g} is not 4π within 0.5%")

    if report.deficit_l2 > epsilon**2 + DEFICIT_ALLOWANCE:
        raise PreconditionUnmetError(
            f"deficit {report.deficit_l2:.6g} exceeds epsilon² = {epsilon**2:.6g}"
        )

    bound = 2 * math.sqrt(max(1 - epsilon**2 / (16 * math.pi), 0.0))
    return CheckResult(
        name="mean_lower_bound",
        checks=[le("bound <= mean_scalar", bound - MEAN_BOUND_ALLOWANCE, report.mean_scalar)],
    )


def willmore_threshold(alpha: float) -> float:
    """32π(1 - α), the energy ceiling that rules out bubbling."""
    if not 0 < alpha < 0.5:
        raise InvalidGammaError(f"alpha must be in (0, 1/2), got {alpha}")
    return 32 * math.pi * (1 - alpha)


def rigidity_hypothesis_check(
    report: EnergyReport, alpha: float, epsilon: float
) -> CheckResult:
    """∫|H|² ≤ 32π(1 - α) and ∫|H - H̄|² ≤ ε.

    In higher codimension ∫||H⃗| - ⨍|H⃗||² stands in for the deficit.
    """
    deficit = report.deficit_l2 if report.deficit_l2 is not None else report.abs_mean_deficit
    return CheckResult(
        name="rigidity_hypotheses",
        checks=[
            le("willmore_raw <= 32pi(1-alpha)", report.willmore_raw, willmore_threshold(alpha)),
            le("deficit <= epsilon", deficit, epsilon),
        ],
    )


def position_bound_check(
    mesh: SurfaceMesh, packet: CurvaturePacket, epsilon: float
) -> CheckResult:
    """Bounds on the uncentered immersion when min_c ∫|H⃗ + cF|² ≤ ε² < 1.

    |⨍F| ≤ 2ε√μ/(16π - ε²), diam ≤ 28√(μW) and max|F| ≤ 30√(μW).

    Raises:
        PreconditionUnmetError: the residual exceeds ε², or ε ≥ 1.

    """
    if not 0 < epsilon < 1:
        raise PreconditionUnmetError(f"epsilon must be in (0, 1), got {epsilon}")

    residual, _, _ = _j_minimizer(mesh, packet, centered=False)
    if residual > epsilon**2:
        raise PreconditionUnmetError(
            f"min_c ∫|H + cF|² = {residual:.6g} exceeds epsilon² = {epsilon**2:.6g}"
        )

    area = float(packet.vertex_area.sum())
    w = packet.integrate(packet.mean_curvature_sq) / 4.0
    mean = numpy.linalg.norm(vertex_mean(packet, mesh.vertices))
    return CheckResult(
        name="position_bounds",
        checks=[
            le(
                "|mean F| <= 2 eps sqrt(area)/(16pi - eps^2)",
                mean,
                2 * epsilon * math.sqrt(area) / (16 * math.pi - epsilon**2),
                atol=1e-9,
            ),
            le("diameter <= 28 sqrt(area W)", diameter(mesh), 28 * math.sqrt(area * w)),
            le(
                "max |F| <= 30 sqrt(area W)",
                numpy.linalg.norm(mesh.vertices, axis=1).max(),
                30 * math.sqrt(area * w),
            ),
        ],
    )


def tracefree_sphere_check(report: EnergyReport, W_bound: float) -> CheckResult:
    """On a sphere, ∫|A°|² ≤ 2(W₀ - 4π) exactly when ¼∫|H⃗|² ≤ W₀.

    Raises:
        PreconditionUnmetError: the surface is not a topological sphere.

    """
    if report.euler_char != 2:
        raise PreconditionUnmetError(f"needs χ = 2, got {report.euler_char}")

    return CheckResult(
        name="tracefree_sphere",
        checks=[
            le("tracefree_energy <= 2(W - 4pi)", report.tracefree_energy, 2 * (W_bound - 4 * math.pi), atol=1e-9),
            le("willmore_quarter <= W", report.willmore_quarter, W_bound, atol=1e-9),
        ],
    )


def minimal_sphere_constant_check(report: EnergyReport, W_bound: float) -> CheckResult:
    """Almost-minimal spheres of area 4π have c within [2 - J/8π, W/2π] (2% allowance).

    Raises:
        PreconditionUnmetError: area not 4π within 0.5%, W ≥ 8π, or ¼∫|H⃗|² > W.

    """
    if abs(report.area - 4 * math.pi) > 0.005 * 4 * math.pi:
        raise PreconditionUnmetError(f"area {report.area:.6g} is not 4π within 0.5%")
    if W_bound >= 8 * math.pi:
        raise PreconditionUnmetError(f"W = {W_bound:.6g} must be below 8π")
    if report.willmore_quarter > W_bound:
        raise PreconditionUnmetError(
            f"Willmore energy {report.willmore_quarter:.6g} exceeds W = {W_bound:.6g}"
        )

    lower = 2 - report.j_value / (8 * math.pi)
    return CheckResult(
        name="minimal_sphere_constant",
        checks=[
            le("2 - J/8pi <= j_c", lower, report.j_c, rtol=C_BOUNDS_RTOL),
            le("j_c <= W/2pi", report.j_c, W_bound / (2 * math.pi), rtol=C_BOUNDS_RTOL),
        ],
    )


def limit_sphere_radius(c: float) -> float:
    """Radius √(2/c) of the sphere an almost-minimal surface sits on."""
    return math.sqrt(2.0 / c)
