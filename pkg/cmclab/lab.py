"""cmclab.lab: configuration-driven experiment runs."""

import math
import os
from typing import Any, Callable, Dict, List, Optional

import numpy
from pydantic import BaseModel

from cmclab.config import ExperimentConfig, Scenario
from cmclab.curvature import compute_curvature
from cmclab.density import (
    audit_samples,
    density_profile,
    density_ratio,
    farthest_point_samples,
    monotonicity_audit,
    monotonicity_slack,
    nonconcentration_radius,
)
from cmclab.errors import CmcLabError, InvalidSpecError
from cmclab.functionals import (
    alexandrov_report,
    diameter_bound,
    energy_report,
    minimal_sphere_constant_check,
)
from cmclab.generators import (
    GeneratorKind,
    GeneratorSpec,
    bubbling_sweep,
    clifford_torus,
    generate,
    neck_vertices,
    normalize_area,
    unit_icosphere,
)
from cmclab.logger import logger
from cmclab.mesh import SurfaceMesh, validate
from cmclab.models import CheckResult, format_value, le, lt
from cmclab.settings import density_config
from cmclab.spheremap import export_param, rigidity_pipeline
from cmclab.storage import load_mesh
from cmclab.svg import write_plot
from cmclab.utils import parallel_map, write_csv

# relative slack of j_c against the expected constant in MinimalSphereCheck
CONSTANT_RTOL = 0.03

# J bound on the area-4π Clifford torus
TORUS_J_BOUND = 0.5

# RigidityCurve: ceiling of w22 + sup|u| at the smallest amplitudes
SMALL_AMPLITUDE = 0.01
SMALL_AMPLITUDE_RIGIDITY = 0.1

# BubblingSweep: at necks this thin the energy is near 32π and r_D has shrunk
CLOSED_NECK = 0.02
BUBBLING_ENERGY_RTOL = 0.1
RADIUS_SHRINK = 5.0


class ExperimentResult(BaseModel):
    """Rows, written files and evaluated inequalities of one run."""

    scenario: Scenario
    rows: List[Dict[str, Any]] = []
    artifacts: List[str] = []
    summary: List[CheckResult] = []

    @property
    def passed(self) -> bool:
        """Every checked inequality holds."""
        return all(check.holds for check in self.summary)


class _Run:
    """State shared by the scenario functions."""

    def __init__(self, config: ExperimentConfig, threads: int, quiet: bool):
        self.config = config
        self.params = config.parameters
        self.threads = self.params.threads or threads
        self.quiet = quiet
        self.result = ExperimentResult(scenario=config.scenario)

    def path(self, name: str) -> str:
        return os.path.join(self.config.output_dir, name)

    def map(self, func: Callable, items: List, label: str) -> List:
        return parallel_map(func, items, max_threads=self.threads, quiet=self.quiet, label=label)

    def csv(self, name: str, rows: List[Dict[str, Any]], fields: List[str]):
        self.result.artifacts.append(write_csv(self.path(name), rows, fields))

    def plot(self, name: str, *args, **kwargs):
        self.result.artifacts.append(write_plot(self.path(name), *args, **kwargs))

    def text(self, name: str, content: str):
        with open(self.path(name), "w", newline="") as f:
            f.write(content)
        self.result.artifacts.append(self.path(name))

    def mesh(self) -> SurfaceMesh:
        if self.config.mesh is not None:
            return load_mesh(str(self.config.mesh))
        return generate(self.config.generator)


def _rigidity_curve(run: _Run):
    base = run.config.generator or GeneratorSpec(kind=GeneratorKind.PerturbedSphere)
    if base.kind != GeneratorKind.PerturbedSphere:
        raise InvalidSpecError(f"needs a PerturbedSphere generator, got {base.kind.value}")

    def point(amplitude: float) -> Dict[str, Any]:
        spec = base.model_copy(
            update={
                "amplitude": amplitude,
                "subdivision": run.params.subdivision,
                "normalize_area": True,
            }
        )
        mesh = generate(spec)
        energy = energy_report(mesh, compute_curvature(mesh))
        _, rigidity = rigidity_pipeline(mesh)
        return {
            "amplitude": amplitude,
            "deficit_l2": energy.deficit_l2,
            "w22_deficit": rigidity.w22_deficit,
            "sup_log_conformal": rigidity.sup_log_conformal,
            "rigidity_sum": rigidity.rigidity_sum,
            "willmore_raw": energy.willmore_raw,
            "qc_mean": rigidity.qc_mean,
        }

    rows = sorted(
        run.map(point, sorted(run.params.amplitudes), "Rigidity curve"),
        key=lambda r: r["amplitude"],
    )
    run.result.rows = rows
    run.csv("rigidity_curve.csv", rows, list(rows[0]))
    run.plot(
        "rigidity_curve.svg",
        {
            "deficit_l2": [(r["amplitude"], r["deficit_l2"]) for r in rows],
            "w22 + sup|u|": [(r["amplitude"], r["rigidity_sum"]) for r in rows],
        },
        title="Rigidity curve",
        xlabel="amplitude",
        ylabel="deficit",
    )

    checks = []
    for prev, nxt in zip(rows, rows[1:]):
        pair = f"{format_value(prev['amplitude'])} < {format_value(nxt['amplitude'])}"
        checks.append(lt(f"deficit_l2 ({pair})", prev["deficit_l2"], nxt["deficit_l2"]))
        checks.append(lt(f"rigidity_sum ({pair})", prev["rigidity_sum"], nxt["rigidity_sum"]))

    first = rows[0]
    if first["amplitude"] <= SMALL_AMPLITUDE:
        checks.append(
            lt(
                f"rigidity_sum at {format_value(first['amplitude'])}",
                first["rigidity_sum"],
                SMALL_AMPLITUDE_RIGIDITY,
            )
        )

    run.result.summary.append(CheckResult(name="rigidity_trend", checks=checks))


def _bubbling_sweep(run: _Run):
    gamma = run.params.gamma
    meshes = bubbling_sweep(run.params.necks, run.params.subdivision)

    def point(item) -> Dict[str, Any]:
        neck, mesh = item
        packet = compute_curvature(mesh)
        region = neck_vertices(mesh, neck)
        # evenly spread basepoints over the neck region
        picks = region[
            numpy.unique(
                numpy.linspace(0, len(region) - 1, min(run.params.basepoints, len(region))).astype(int)
            )
        ]
        r_d = [nonconcentration_radius(mesh, int(v), gamma, run.params.r_max) for v in picks]
        theta = [density_ratio(mesh, int(v), r) for v in picks for r in run.params.radii]
        return {
            "neck": neck,
            "willmore_raw": packet.integrate(packet.mean_curvature_sq),
            "min_r_D": min(r_d),
            "max_theta": max(theta),
        }

    rows = sorted(run.map(point, meshes, "Bubbling sweep"), key=lambda r: -r["neck"])
    run.result.rows = rows
    run.csv("bubbling_sweep.csv", rows, ["neck", "willmore_raw", "min_r_D", "max_theta"])
    run.plot(
        "bubbling_sweep.svg",
        {"willmore_raw / 16pi": [(r["neck"], r["willmore_raw"] / (16 * math.pi)) for r in rows]},
        title="Bubbling sweep",
        xlabel="neck radius",
        ylabel="willmore_raw / 16pi",
    )
    run.plot(
        "bubbling_radii.svg",
        {f"min r_D (gamma={format_value(gamma)})": [(r["neck"], r["min_r_D"]) for r in rows]},
        title="Non-concentration radius at the neck",
        xlabel="neck radius",
        ylabel="min r_D",
    )

    checks = [
        lt(
            f"willmore_raw ({format_value(prev['neck'])} > {format_value(nxt['neck'])})",
            prev["willmore_raw"],
            nxt["willmore_raw"],
        )
        for prev, nxt in zip(rows, rows[1:])
    ]

    first, last = rows[0], rows[-1]
    if len(rows) > 1:
        checks.append(le("min_r_D last <= first", last["min_r_D"], first["min_r_D"]))
    checks.append(lt(f"0 < min_r_D at {format_value(last['neck'])}", 0.0, last["min_r_D"]))

    if last["neck"] <= CLOSED_NECK:
        checks.append(
            le(
                f"|willmore_raw - 32pi| at {format_value(last['neck'])}",
                abs(last["willmore_raw"] - 32 * math.pi),
                BUBBLING_ENERGY_RTOL * 32 * math.pi,
            )
        )
        if len(rows) > 1:
            checks.append(
                le(
                    f"{format_value(RADIUS_SHRINK)} min_r_D last <= min_r_D first",
                    RADIUS_SHRINK * last["min_r_D"],
                    first["min_r_D"],
                )
            )

    run.result.summary.append(CheckResult(name="bubbling_trend", checks=checks))


def _monotonicity_audit(run: _Run):
    mesh = run.mesh()
    packet = compute_curvature(mesh)
    delta = run.params.delta
    samples = audit_samples(mesh, run.params.sample_count, run.params.seed)

    slacks = run.map(
        lambda s: monotonicity_slack(mesh, packet, s[0], s[1], s[2], delta),
        samples,
        "Monotonicity audit",
    )
    violations = monotonicity_audit(mesh, packet, samples, delta, slacks=slacks)
    allowance = 1 + density_config.audit_allowance
    worst = min(range(len(samples)), key=lambda i: slacks[i][1] * allowance - slacks[i][0])

    def row(kind, index, center, r, a, lhs, rhs):
        return {
            "kind": kind,
            "index": index,
            "center": " ".join(format_value(float(c)) for c in center),
            "r": r,
            "a": a,
            "lhs": lhs,
            "rhs": rhs,
        }

    rows = [row("violation", v.index, v.center, v.r, v.a, v.lhs, v.rhs) for v in violations]
    vertex, r, a = samples[worst]
    rows.append(row("worst", worst, mesh.vertices[vertex], r, a, *slacks[worst]))

    run.result.rows = rows
    run.csv("monotonicity_audit.csv", rows, list(rows[0]))
    run.result.summary.append(
        CheckResult(
            name="monotonicity",
            checks=[le("violations", len(violations), 0)],
        )
    )


def _minimal_sphere_check(run: _Run):
    level = run.params.subdivision
    grid = run.params.torus_grid
    surfaces = [
        ("sphere", normalize_area(unit_icosphere(level)), 2.0),
        ("clifford_torus", normalize_area(clifford_torus(grid, grid)), math.pi),
    ]

    def point(item) -> Dict[str, Any]:
        name, mesh, expected = item
        report = energy_report(mesh, compute_curvature(mesh))
        return {
            "surface": name,
            "j_value": report.j_value,
            "j_c": report.j_c,
            "expected_c": expected,
            "pass": abs(report.j_c - expected) <= CONSTANT_RTOL * expected
            and (name != "clifford_torus" or report.j_value < TORUS_J_BOUND),
            "report": report,
        }

    results = run.map(point, surfaces, "Minimal sphere check")
    rows = [{k: v for k, v in r.items() if k != "report"} for r in results]
    run.result.rows = rows
    run.csv("minimal_sphere_check.csv", rows, ["surface", "j_value", "j_c", "expected_c", "pass"])

    run.result.summary.append(
        CheckResult(
            name="limit_constants",
            checks=[
                le(f"|j_c - c| ({r['surface']})", abs(r["j_c"] - r["expected_c"]), CONSTANT_RTOL * r["expected_c"])
                for r in rows
            ]
            + [
                lt("j_value (clifford_torus)", r["j_value"], TORUS_J_BOUND)
                for r in rows
                if r["surface"] == "clifford_torus"
            ],
        )
    )
    run.result.summary.append(minimal_sphere_constant_check(results[0]["report"], run.params.W))


def _density_scan(run: _Run):
    mesh = run.mesh()
    basepoints = farthest_point_samples(mesh, run.params.basepoints)
    profiles = run.map(
        lambda v: density_profile(mesh, v, run.params.radii), basepoints, "Density scan"
    )

    rows = []
    series = {}
    for profile in sorted(profiles, key=lambda p: p.basepoint):
        records = [
            {"basepoint": profile.basepoint, "r": r, "mass": m, "ratio": t}
            for r, m, t in profile.rows()
        ]
        run.csv(f"density-{profile.basepoint}.csv", records, ["basepoint", "r", "mass", "ratio"])
        series[f"vertex {profile.basepoint}"] = [(rec["r"], rec["ratio"]) for rec in records]
        rows.extend(records)

    run.result.rows = rows
    run.plot("density_scan.svg", series, title="Density ratio", xlabel="r", ylabel="theta")


def _single_report(run: _Run):
    mesh = run.mesh()
    packet = compute_curvature(mesh)
    energy = energy_report(mesh, packet)

    sections = ["[energy]", energy.to_text()]
    row: Dict[str, Any] = energy.to_row()

    if mesh.ambient_dim == 3:
        alexandrov = alexandrov_report(mesh, packet)
        sections += ["", "[alexandrov]", alexandrov.to_text()]
        row.update(alexandrov.to_row())

    diag = validate(mesh)
    if diag.euler_characteristic == 2 and diag.components == 1:
        param, rigidity = rigidity_pipeline(normalize_area(mesh))
        sections += ["", "[rigidity]", rigidity.to_text()]
        row.update(rigidity.to_row())
        for path in export_param(param, run.config.output_dir):
            run.result.artifacts.append(path)
    else:
        logger.info(f"no rigidity report for χ = {diag.euler_characteristic}")

    run.text("report.txt", "\n".join(sections) + "\n")
    run.result.rows = [row]
    run.result.summary.append(
        CheckResult(
            name="diameter_bound",
            checks=[le("diameter <= 28 sqrt(area W)", energy.diameter, diameter_bound(energy))],
        )
    )


_SCENARIOS = {
    Scenario.RigidityCurve: _rigidity_curve,
    Scenario.BubblingSweep: _bubbling_sweep,
    Scenario.MonotonicityAudit: _monotonicity_audit,
    Scenario.MinimalSphereCheck: _minimal_sphere_check,
    Scenario.DensityScan: _density_scan,
    Scenario.SingleReport: _single_report,
}


def run(
    config: ExperimentConfig, threads: Optional[int] = None, quiet: bool = True
) -> ExperimentResult:
    """Run a scenario and write its outputs under `config.output_dir`.

    The resolved configuration is written next to the outputs.

    Raises:
        CmcLabError: any module error, its message prefixed by the scenario name.

    """
    os.makedirs(config.output_dir, exist_ok=True)
    state = _Run(config, threads or 1, quiet)

    logger.debug(f"running {config.scenario.value} into {config.output_dir}")
    try:
        _SCENARIOS[config.scenario](state)
    except CmcLabError as e:
        raise type(e)(f"{config.scenario.value}: {e}") from e

    state.text("config.resolved.json", config.model_dump_json(indent=2) + "\n")
    return state.result
