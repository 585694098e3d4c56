"""tests cmclab.config."""

import os

import pytest

from cmclab.config import Scenario, loads_config, parse_config, parse_generator_spec
from cmclab.errors import ConfigError, InvalidSpecError
from cmclab.generators import GeneratorKind

fixtures = os.path.join(os.path.dirname(__file__), "fixtures")
audit = os.path.join(fixtures, "audit.toml")
sphere = os.path.join(fixtures, "sphere.toml")
tetrahedron = os.path.join(fixtures, "tetrahedron.obj")

CONFIG = """scenario = "MonotonicityAudit"

[generator]
kind = "Icosphere"
subdivision = 1

[parameters]
{parameters}
"""


def test_parse_config():
    """Read a configuration file."""
    config = parse_config(audit)
    assert config.scenario == Scenario.MonotonicityAudit
    assert config.output_dir == "audit"
    assert config.mesh is None
    assert config.generator.kind == GeneratorKind.Icosphere
    assert config.generator.subdivision == 2
    assert config.parameters.sample_count == 40
    assert config.parameters.seed == 7
    # defaults
    assert config.parameters.gamma == 0.1
    assert config.parameters.threads is None

    with pytest.raises(ConfigError):
        parse_config(os.path.join(fixtures, "missing.toml"))


def test_loads_config_out_of_range():
    """Out-of-range values name the key and its line."""
    with pytest.raises(ConfigError) as err:
        loads_config(CONFIG.format(parameters="delta = 0.5\ngamma = 0.7"))
    assert err.value.key == "parameters.gamma"
    assert err.value.line == 9

    with pytest.raises(ConfigError) as err:
        loads_config(CONFIG.format(parameters="necks = [0.1, 0.3]"))
    assert err.value.key == "parameters"
    assert "descending" in str(err.value)


def test_loads_config_unknown_key():
    """Typos are not ignored."""
    with pytest.raises(ConfigError) as err:
        loads_config(CONFIG.format(parameters="gamna = 0.1"))
    assert err.value.key == "parameters.gamna"
    assert err.value.line == 8

    with pytest.raises(ConfigError) as err:
        loads_config(CONFIG.replace('kind = "Icosphere"', 'kind = "Sphere"').format(parameters=""))
    assert err.value.key == "generator.kind"
    assert err.value.line == 4


def test_loads_config_syntax():
    """TOML syntax errors carry the line."""
    with pytest.raises(ConfigError) as err:
        loads_config('scenario = "SingleReport"\n\n[parameters\ngamma = 0.1\n')
    assert err.value.line == 3


def test_loads_config_input(tmp_path):
    """Mesh and generator are exclusive; relative meshes resolve against the file."""
    with pytest.raises(ConfigError):
        loads_config(f'scenario = "SingleReport"\nmesh = "{tetrahedron}"\n\n[generator]\nkind = "Icosphere"\n')

    with pytest.raises(ConfigError):
        loads_config('scenario = "DensityScan"\n')

    # sweeps build their own surfaces
    assert loads_config('scenario = "BubblingSweep"\n').generator is None

    with pytest.raises(ConfigError) as err:
        loads_config('scenario = "SingleReport"\nmesh = "nothere.obj"\n', base_dir=str(tmp_path))
    assert err.value.key == "mesh"
    assert err.value.line == 2

    with open(tetrahedron, "rb") as f:
        (tmp_path / "tetra.obj").write_bytes(f.read())
    path = tmp_path / "config.toml"
    path.write_text('scenario = "SingleReport"\nmesh = "tetra.obj"\n')

    config = parse_config(str(path))
    assert str(config.mesh) == str(tmp_path / "tetra.obj")


def test_parse_generator_spec(tmp_path):
    """Generator specs are bare GeneratorSpec fields."""
    spec = parse_generator_spec(sphere)
    assert spec.kind == GeneratorKind.Icosphere
    assert spec.subdivision == 2
    assert spec.radius == 2.0

    path = tmp_path / "bad.toml"
    path.write_text('kind = "Icosphere"\nradius = -1.0\n')
    with pytest.raises(InvalidSpecError):
        parse_generator_spec(str(path))

    path.write_text('kind = "Icosphere\n')
    with pytest.raises(ConfigError):
        parse_generator_spec(str(path))

    with pytest.raises(ConfigError):
        parse_generator_spec(str(tmp_path / "missing.toml"))
