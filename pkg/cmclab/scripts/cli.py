"""cmclab: cli."""

import json
import logging
import multiprocessing
import os
import sys

import click
import cligj
from click_plugins import with_plugins

from cmclab import __version__ as cmclab_version
from cmclab.backends import MeshBackend
from cmclab.config import parse_config, parse_generator_spec
from cmclab.curvature import compute_curvature
from cmclab.density import monotonicity_constant, radii_report
from cmclab.errors import CmcLabError, PreconditionUnmetError
from cmclab.functionals import (
    alexandrov_report,
    c_bounds_check,
    diameter_bound,
    energy_report,
    rigidity_hypothesis_check,
    tracefree_sphere_check,
)
from cmclab.generators import generate
from cmclab.lab import run as run_experiment
from cmclab.logger import logger
from cmclab.mesh import validate as mesh_diagnostics
from cmclab.models import CheckResult, format_value, le
from cmclab.storage import load_mesh, save_mesh

if sys.version_info < (3, 10):
    from importlib_metadata import entry_points
else:
    from importlib.metadata import entry_points


def _echo_checks(checks):
    for result in checks:
        click.echo(f"[{result.name}] {'pass' if result.holds else 'FAIL'}")
        for c in result.checks:
            click.echo(
                f"  {c.name}: {format_value(c.lhs)} <= {format_value(c.rhs)} "
                f"({'ok' if c.holds else 'violated'})"
            )


@with_plugins(entry_points(group="cmclab.plugins"))
@click.group()
@click.version_option(version=cmclab_version, message="%(version)s")
@cligj.verbose_opt
@cligj.quiet_opt
def cmclab(verbose, quiet):
    """cmclab cli."""
    verbosity = verbose - quiet
    logging.basicConfig(stream=sys.stderr, level=max(10, 30 - 10 * verbosity))
    logger.setLevel(max(10, 30 - 10 * verbosity))


@cmclab.command(short_help="Run an experiment configuration")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--threads",
    type=int,
    default=lambda: os.environ.get("LAB_THREADS", multiprocessing.cpu_count()),
    help="threads",
)
@click.option(
    "--quiet",
    "-q",
    help="Remove progressbar and other non-error output.",
    is_flag=True,
    default=False,
)
def run(config, threads, quiet):
    """Run the scenario of CONFIG; exit code 1 when a checked inequality fails."""
    try:
        experiment = parse_config(config)
        result = run_experiment(experiment, threads=int(threads), quiet=quiet)
    except CmcLabError as e:
        raise click.ClickException(str(e)) from e

    if not quiet:
        _echo_checks(result.summary)
        for path in result.artifacts:
            click.echo(path)

    if not result.passed:
        sys.exit(1)


@cmclab.command(short_help="Print the functionals and checks of a mesh")
@click.argument("mesh", type=str)
@click.option("--gamma", type=float, default=0.1, show_default=True, help="Non-concentration parameter.")
@click.option("--delta", type=float, default=0.5, show_default=True, help="Monotonicity parameter.")
@click.option("--epsilon", type=float, default=0.5, show_default=True, help="Deficit bound.")
@click.option("--w", "w_bound", type=float, help="Willmore bound (default: the measured energy).")
@click.option("--alpha", type=float, default=0.25, show_default=True, help="Willmore-threshold parameter.")
@click.option(
    "--json",
    "to_json",
    default=False,
    is_flag=True,
    help="Print as JSON.",
)
def report(mesh, gamma, delta, epsilon, w_bound, alpha, to_json):
    """Report on MESH (path or URL)."""
    try:
        surface = load_mesh(mesh)
        packet = compute_curvature(surface)
        energy = energy_report(surface, packet)
        w_bound = w_bound if w_bound is not None else energy.willmore_quarter
        c_delta = monotonicity_constant(delta)

        sections = {"energy": energy}
        if surface.ambient_dim == 3:
            try:
                sections["alexandrov"] = alexandrov_report(surface, packet)
            except CmcLabError as e:
                logger.warning(f"no Alexandrov report: {e}")

        sections["radii"] = radii_report(
            surface, packet, 0, gamma, epsilon, r_max=max(energy.diameter, 1e-6)
        )

        checks = [
            rigidity_hypothesis_check(energy, alpha, epsilon),
            CheckResult(
                name="diameter_bound",
                checks=[le("diameter <= 28 sqrt(area W)", energy.diameter, diameter_bound(energy))],
            ),
        ]
        try:
            checks.append(c_bounds_check(energy, epsilon))
        except PreconditionUnmetError as e:
            logger.info(f"c bounds skipped: {e}")
        if energy.euler_char == 2:
            checks.append(tracefree_sphere_check(energy, w_bound))

    except CmcLabError as e:
        raise click.ClickException(str(e)) from e

    if to_json:
        document = {name: model.model_dump() for name, model in sections.items()}
        document["C_delta"] = c_delta
        document["checks"] = [c.model_dump() for c in checks]
        click.echo(json.dumps(document))
        return

    for name, model in sections.items():
        click.echo(f"[{name}]")
        click.echo(model.to_text())
    click.echo(f"C_delta = {format_value(c_delta)}")
    _echo_checks(checks)


@cmclab.command(short_help="Generate a synthetic mesh")
@click.argument("spec", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "-o", type=click.Path(exists=False), required=True, help="Output file name")
def gen(spec, output):
    """Build the surface described by the TOML generator SPEC."""
    try:
        mesh = generate(parse_generator_spec(spec))
        save_mesh(mesh, output)
    except CmcLabError as e:
        raise click.ClickException(str(e)) from e


@cmclab.command(short_help="Check mesh topology")
@click.argument("mesh", type=str)
@click.option(
    "--json",
    "to_json",
    default=False,
    is_flag=True,
    help="Print as JSON.",
)
def validate(mesh, to_json):
    """Print the diagnostics of MESH; exit code 1 unless it is a closed oriented manifold."""
    try:
        with MeshBackend(mesh, check=False) as src:
            diag = mesh_diagnostics(src.mesh)
    except CmcLabError as e:
        raise click.ClickException(str(e)) from e

    if to_json:
        click.echo(diag.model_dump_json())
    else:
        click.echo(diag.to_text())

    if not diag.is_valid:
        sys.exit(1)
