"""cmclab.density: ball masses, density ratios, radii and monotonicity audits.

Balls are extrinsic: B_r(x) is the closed Euclidean ball of R^n and its mass is
the area of the PL surface inside it, computed exactly by `cmclab.clip`.
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import attr
import numpy

from cmclab.clip import clipped_areas
from cmclab.curvature import CurvaturePacket
from cmclab.errors import (
    BadSampleError,
    InvalidGammaError,
    NonPositiveRadiusError,
    NonPositiveWError,
    PreconditionUnmetError,
)
from cmclab.logger import logger
from cmclab.mesh import SurfaceMesh, face_areas
from cmclab.models import CheckResult, RadiiReport, Violation, le
from cmclab.settings import density_config

Center = Union[int, numpy.integer, Sequence[float], numpy.ndarray]

# relative slack on the local Willmore bound
LOCAL_WILLMORE_ALLOWANCE = 0.05

# discrete slack on ∫||H⃗| - ⨍|H⃗||² when checked against ε²
ABS_DEFICIT_ALLOWANCE = 1e-3


def resolve_center(mesh: SurfaceMesh, center: Center) -> numpy.ndarray:
    """A point of R^n, given directly or as a vertex index."""
    if isinstance(center, (int, numpy.integer)):
        return mesh.vertices[int(center)]

    point = numpy.asarray(center, dtype=numpy.float64)
    if point.shape != (mesh.ambient_dim,):
        raise ValueError(f"center must be a vertex index or a point of R^{mesh.ambient_dim}")
    return point


def _check_radius(r: float):
    if not r > 0:
        raise NonPositiveRadiusError(f"radius must be positive, got {r}")


def ball_mass(mesh: SurfaceMesh, center: Center, r: float) -> float:
    """Area of the surface inside the closed ball B_r(center)."""
    _check_radius(r)
    return float(clipped_areas(mesh, resolve_center(mesh, center), r).sum())


def ball_mass_complement(mesh: SurfaceMesh, center: Center, r: float) -> float:
    """Area of the surface outside the closed ball B_r(center)."""
    _check_radius(r)
    inside = clipped_areas(mesh, resolve_center(mesh, center), r)
    return float((face_areas(mesh) - inside).sum())


def density_ratio(mesh: SurfaceMesh, center: Center, r: float) -> float:
    """Θ(x, r) = μ(B_r(x)) / πr²."""
    return ball_mass(mesh, center, r) / (math.pi * r * r)


def vertex_fractions(mesh: SurfaceMesh, center: Center, r: float) -> numpy.ndarray:
    """Share of each vertex's incident triangle area lying inside B_r(center)."""
    _check_radius(r)
    inside = clipped_areas(mesh, resolve_center(mesh, center), r)
    areas = face_areas(mesh)

    t = mesh.triangles.ravel()
    clipped = numpy.bincount(t, weights=numpy.repeat(inside, 3), minlength=mesh.vertex_count)
    total = numpy.bincount(t, weights=numpy.repeat(areas, 3), minlength=mesh.vertex_count)
    return clipped / total


def clipped_integral(
    mesh: SurfaceMesh,
    packet: CurvaturePacket,
    density: numpy.ndarray,
    center: Center,
    r: float,
) -> float:
    """∫_{B_r(center)} f dμ with each vertex weighted by its clipped area fraction."""
    fractions = vertex_fractions(mesh, center, r)
    return float(numpy.dot(packet.vertex_area * fractions, density))


@attr.s(frozen=True)
class DensityProfile:
    """Radial density ratios at a basepoint.

    Attributes:
        basepoint (int): vertex index.
        radii (numpy.ndarray): ascending radii.
        masses (numpy.ndarray): μ(B_r(x)) per radius.
        ratios (numpy.ndarray): Θ(x, r) per radius.

    """

    basepoint: int = attr.ib()
    radii: numpy.ndarray = attr.ib()
    masses: numpy.ndarray = attr.ib()
    ratios: numpy.ndarray = attr.ib()

    def rows(self) -> List[Tuple[float, float, float]]:
        """(r, mass, ratio) records."""
        return list(zip(self.radii.tolist(), self.masses.tolist(), self.ratios.tolist()))


def density_profile(
    mesh: SurfaceMesh, basepoint: int, radii: Sequence[float]
) -> DensityProfile:
    """Θ(x, r) over ascending radii at a vertex."""
    radii = numpy.sort(numpy.asarray(radii, dtype=numpy.float64))
    if len(radii) == 0:
        raise ValueError("at least one radius is needed")
    _check_radius(float(radii[0]))

    masses = numpy.array([ball_mass(mesh, basepoint, r) for r in radii])
    # clipping is exact, rounding can still break monotonicity in the last digit
    masses = numpy.maximum.accumulate(masses)
    return DensityProfile(
        basepoint=int(basepoint),
        radii=radii,
        masses=masses,
        ratios=masses / (math.pi * radii**2),
    )


def _sup_below(
    exceeds: Callable[[float], bool],
    r_max: float,
    points: Optional[int] = None,
    floor: Optional[float] = None,
    steps: Optional[int] = None,
) -> float:
    """sup{a ≤ r_max : not exceeds(r) for all r ≤ a}, on a geometric grid refined by bisection."""
    points = points or density_config.grid_points
    floor = floor or density_config.grid_floor
    steps = steps or density_config.bisection_steps

    grid = numpy.geomspace(r_max / floor, r_max, points)
    lo = 0.0
    for r in grid:
        if exceeds(float(r)):
            hi = float(r)
            break
        lo = float(r)
    else:
        return float(r_max)

    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if exceeds(mid):
            hi = mid
        else:
            lo = mid

    return lo


def nonconcentration_radius(
    mesh: SurfaceMesh, center: Center, gamma: float, r_max: float
) -> float:
    """γ-non-concentration radius: sup{a : Θ(x, r) ≤ 2(1 - γ) for all r ≤ a}, capped at r_max.

    Raises:
        InvalidGammaError: gamma outside (0, 1).
        NonPositiveRadiusError: r_max ≤ 0.

    """
    if not 0 < gamma < 1:
        raise InvalidGammaError(f"gamma must be in (0, 1), got {gamma}")
    _check_radius(r_max)

    point = resolve_center(mesh, center)
    threshold = 2.0 * (1.0 - gamma)
    return _sup_below(lambda r: density_ratio(mesh, point, r) > threshold, r_max)


def total_curvature_radius(
    mesh: SurfaceMesh,
    packet: CurvaturePacket,
    center: Center,
    epsilon_tc: float,
    sigma: float,
) -> float:
    """r_ε = sup{r ≤ σ : ∫_{B_r}|A|² ≤ ε}.

    Raises:
        NonPositiveRadiusError: epsilon_tc or sigma not positive.

    """
    _check_radius(sigma)
    if not epsilon_tc > 0:
        raise NonPositiveRadiusError(f"epsilon_tc must be positive, got {epsilon_tc}")

    point = resolve_center(mesh, center)
    return _sup_below(
        lambda r: clipped_integral(mesh, packet, packet.sff_density, point, r) > epsilon_tc,
        sigma,
    )


def sigma_from_gamma(gamma: float) -> float:
    """σ = γ / (20(1 - γ) + γ)."""
    _check_gamma(gamma)
    return gamma / (20.0 * (1.0 - gamma) + gamma)


def radii_report(
    mesh: SurfaceMesh,
    packet: CurvaturePacket,
    center: Center,
    gamma: float,
    epsilon_tc: float,
    r_max: float,
) -> RadiiReport:
    """r^D_γ and r_ε at one point, σ derived from γ."""
    sigma = sigma_from_gamma(gamma)
    return RadiiReport(
        gamma=gamma,
        r_D=nonconcentration_radius(mesh, center, gamma, r_max),
        epsilon_tc=epsilon_tc,
        r_eps=total_curvature_radius(mesh, packet, center, epsilon_tc, sigma),
        sigma=sigma,
    )


def monotonicity_constant(delta: float) -> float:
    """C_δ = 3/16 + 1/(4δ)."""
    if not delta > 0:
        raise PreconditionUnmetError(f"delta must be positive, got {delta}")
    return 3.0 / 16.0 + 1.0 / (4.0 * delta)


def monotonicity_slack(
    mesh: SurfaceMesh, packet: CurvaturePacket, center: Center, r: float, a: float, delta: float
) -> Tuple[float, float]:
    """(LHS, RHS) of the monotonicity inequality at one sample.

    Raises:
        BadSampleError: the sample does not satisfy 0 < r ≤ a.

    """
    if not 0 < r <= a:
        raise BadSampleError(f"need 0 < r <= a, got r={r}, a={a}")

    point = resolve_center(mesh, center)
    lhs = ball_mass(mesh, point, r) / r**2
    rhs = (1 + delta) * ball_mass(mesh, point, a) / a**2 + monotonicity_constant(
        delta
    ) * clipped_integral(mesh, packet, packet.mean_curvature_sq, point, a)
    return lhs, rhs


def monotonicity_audit(
    mesh: SurfaceMesh,
    packet: CurvaturePacket,
    samples: Sequence[Tuple[Center, float, float]],
    delta: float,
    allowance: Optional[float] = None,
    slacks: Optional[Sequence[Tuple[float, float]]] = None,
) -> List[Violation]:
    """Samples breaking μ(B_r)/r² ≤ (1+δ)μ(B_a)/a² + C_δ∫_{B_a}|H⃗|² beyond the allowance.

    `slacks` takes the (LHS, RHS) pairs of `monotonicity_slack` when they were
    already evaluated for `samples`.

    Raises:
        BadSampleError: a sample does not satisfy 0 < r ≤ a.

    """
    allowance = density_config.audit_allowance if allowance is None else allowance

    if slacks is None:
        slacks = []
        for index, (center, r, a) in enumerate(samples):
            try:
                slacks.append(monotonicity_slack(mesh, packet, center, r, a, delta))
            except BadSampleError as e:
                raise BadSampleError(f"sample {index}: {e}") from e
    elif len(slacks) != len(samples):
        raise ValueError(f"{len(slacks)} slacks for {len(samples)} samples")

    violations = [
        Violation(
            index=index,
            center=tuple(resolve_center(mesh, center).tolist()),
            r=r,
            a=a,
            lhs=lhs,
            rhs=rhs,
        )
        for index, ((center, r, a), (lhs, rhs)) in enumerate(zip(samples, slacks))
        if lhs > rhs * (1 + allowance)
    ]

    if violations:
        logger.warning(f"{len(violations)} monotonicity violations out of {len(samples)}")

    return violations


def audit_samples(
    mesh: SurfaceMesh, count: int, seed: int, a_max: Optional[float] = None
) -> List[Tuple[int, float, float]]:
    """Seeded random (vertex, r, a) triples, a log-uniform in [a_max/100, a_max]."""
    rng = numpy.random.default_rng(seed)
    if a_max is None:
        x = mesh.vertices
        a_max = float(numpy.linalg.norm(x.max(axis=0) - x.min(axis=0)))

    vertices = rng.integers(0, mesh.vertex_count, size=count)
    a = a_max * numpy.exp(rng.uniform(numpy.log(0.01), 0.0, size=count))
    r = a * rng.uniform(0.01, 1.0, size=count)
    return [(int(v), float(ri), float(ai)) for v, ri, ai in zip(vertices, r, a)]


def _check_gamma(gamma: float):
    if not 0 < gamma < 0.5:
        raise InvalidGammaError(f"gamma must be in (0, 1/2), got {gamma}")


def _check_w(W: float):
    if not W > 0:
        raise NonPositiveWError(f"W must be positive, got {W}")


def lemma_constants(gamma: float, W: float) -> Tuple[float, float]:
    """ε(γ) = 8πγ/(32π(1-γ)+7) and a(W, γ) = 4πγ/([32π(1-γ)+7]W)."""
    _check_gamma(gamma)
    _check_w(W)
    denominator = 32 * math.pi * (1 - gamma) + 7
    return 8 * math.pi * gamma / denominator, 4 * math.pi * gamma / (denominator * W)


def delta_from_gamma(gamma: float) -> float:
    """δ(γ) = 16πγ/(32π(1-γ)+7), the monotonicity parameter paired with ε(γ)."""
    _check_gamma(gamma)
    return 16 * math.pi * gamma / (32 * math.pi * (1 - gamma) + 7)


def codim_lemma_constants(gamma: float, area: float, W: float) -> Tuple[float, float]:
    """ε ≤ γ/6 and a = √μ·γ/(6720W²) for surfaces in any codimension."""
    _check_gamma(gamma)
    _check_w(W)
    return gamma / 6.0, math.sqrt(area) * gamma / (6720.0 * W**2)


def codim_local_willmore_bound(epsilon: float, W: float, area: float, r: float) -> float:
    """2ε² + 2²¹W⁴r²/μ."""
    return 2 * epsilon**2 + 2**21 * W**4 * r**2 / area


def area_growth_bound(W: float, r: float) -> float:
    """64W·r²/3."""
    return 64.0 * W * r * r / 3.0


def farthest_point_samples(mesh: SurfaceMesh, count: int, start: int = 0) -> List[int]:
    """Deterministic farthest-point vertex sample, starting at `start`."""
    if count < 1:
        raise ValueError("sample_count must be >= 1")

    x = mesh.vertices
    count = min(count, mesh.vertex_count)
    chosen = [int(start)]
    dist = numpy.linalg.norm(x - x[start], axis=1)
    while len(chosen) < count:
        nxt = int(numpy.argmax(dist))
        chosen.append(nxt)
        dist = numpy.minimum(dist, numpy.linalg.norm(x - x[nxt], axis=1))
    return chosen


def local_willmore_profile(
    mesh: SurfaceMesh, packet: CurvaturePacket, r: float, sample_count: int
) -> float:
    """max over farthest-point basepoints of ∫_{B_r(p)}|H⃗|²."""
    _check_radius(r)
    hsq = packet.mean_curvature_sq
    return max(
        clipped_integral(mesh, packet, hsq, p, r)
        for p in farthest_point_samples(mesh, sample_count)
    )


def local_willmore_bound_check(
    mesh: SurfaceMesh,
    packet: CurvaturePacket,
    epsilon: float,
    W: float,
    gamma: float,
    sample_count: int = 16,
    radii_count: int = 8,
) -> CheckResult:
    """∫_{B_r(p)}|H⃗|² ≤ 2ε² + (16W²/π)r² for r ≤ a(W, γ) at sampled p (5% allowance).

    Raises:
        PreconditionUnmetError: area not 4π within 0.5%, ε > ε(γ), or
            ∫||H⃗| - ⨍|H⃗||² > ε².

    """
    eps_gamma, a = lemma_constants(gamma, W)

    area = float(packet.vertex_area.sum())
    if abs(area - 4 * math.pi) > 0.005 * 4 * math.pi:
        raise PreconditionUnmetError(f"area {area:.6g} is not 4π within 0.5%")
    if epsilon > eps_gamma:
        raise PreconditionUnmetError(
            f"epsilon = {epsilon:.6g} exceeds epsilon(gamma) = {eps_gamma:.6g}"
        )

    hnorm = numpy.sqrt(packet.mean_curvature_sq)
    mean = packet.integrate(hnorm) / area
    deficit = packet.integrate((hnorm - mean) ** 2)
    if deficit > epsilon**2 + ABS_DEFICIT_ALLOWANCE:
        raise PreconditionUnmetError(
            f"∫||H| - mean|H||² = {deficit:.6g} exceeds epsilon² = {epsilon**2:.6g}"
        )

    hsq = packet.mean_curvature_sq
    basepoints = farthest_point_samples(mesh, sample_count)
    checks = []
    for r in numpy.geomspace(a / 64.0, a, radii_count):
        lhs = max(clipped_integral(mesh, packet, hsq, p, r) for p in basepoints)
        rhs = 2 * epsilon**2 + 16 * W**2 / math.pi * r**2
        checks.append(
            le(f"sup B_{r:.6g} |H|^2", lhs, rhs, rtol=LOCAL_WILLMORE_ALLOWANCE)
        )

    return CheckResult(name="local_willmore_bound", checks=checks)


def nonconcentration_criteria_check(
    mesh: SurfaceMesh,
    packet: CurvaturePacket,
    alpha: float,
    gamma: float,
    a: float,
    sample_count: int = 16,
    radii_count: int = 8,
) -> CheckResult:
    """From ∫|H⃗|² ≤ 32π(1-α) and sup_p ∫_{B_a(p)}|H⃗|² ≤ κ² = π²(α-γ)²/4, conclude
    μ(B_s(p))/s² ≤ ∫|H⃗|²/16 + 4κ ≤ 2π(1-γ) for s ≤ a.

    Raises:
        InvalidGammaError: not γ < α < 1/2.
        PreconditionUnmetError: a hypothesis does not hold on the mesh.

    """
    _check_gamma(gamma)
    if not gamma < alpha < 0.5:
        raise InvalidGammaError(f"need gamma < alpha < 1/2, got {gamma}, {alpha}")
    _check_radius(a)

    hsq = packet.mean_curvature_sq
    raw = packet.integrate(hsq)
    if raw > 32 * math.pi * (1 - alpha):
        raise PreconditionUnmetError(
            f"∫|H|² = {raw:.6g} exceeds 32π(1-alpha) = {32 * math.pi * (1 - alpha):.6g}"
        )

    basepoints = farthest_point_samples(mesh, sample_count)
    kappa_sq = math.pi**2 * (alpha - gamma) ** 2 / 4
    local = max(clipped_integral(mesh, packet, hsq, p, a) for p in basepoints)
    if local > kappa_sq:
        raise PreconditionUnmetError(
            f"sup ∫_B_a |H|² = {local:.6g} exceeds kappa² = {kappa_sq:.6g}"
        )

    worst = max(
        ball_mass(mesh, p, s) / s**2
        for s in numpy.geomspace(a / 64.0, a, radii_count)
        for p in basepoints
    )
    allowance = density_config.audit_allowance
    return CheckResult(
        name="nonconcentration_criteria",
        checks=[
            le("mu(B_s)/s^2 <= 42", worst, 42.0),
            le(
                "mu(B_s)/s^2 <= raw/16 + 4 kappa",
                worst,
                raw / 16 + 4 * math.sqrt(local),
                rtol=allowance,
            ),
            le("mu(B_s)/s^2 <= 2pi(1-gamma)", worst, 2 * math.pi * (1 - gamma), rtol=allowance),
        ],
    )


def area_growth_check(
    mesh: SurfaceMesh,
    packet: CurvaturePacket,
    radii: Sequence[float],
    sample_count: int = 16,
) -> CheckResult:
    """μ(B_r(p)) ≤ 64W·r²/3 at sampled p, W = ¼∫|H⃗|²."""
    w = packet.integrate(packet.mean_curvature_sq) / 4.0
    basepoints = farthest_point_samples(mesh, sample_count)
    checks = []
    for r in radii:
        _check_radius(r)
        worst = max(ball_mass(mesh, p, r) for p in basepoints)
        checks.append(le(f"mu(B_{r:.6g})", worst, area_growth_bound(w, r)))
    return CheckResult(name="area_growth", checks=checks)
