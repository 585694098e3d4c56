"""cmclab.config: experiment configuration documents."""

import math
import os
import re
import sys
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, FilePath, ValidationError, model_validator

from cmclab.errors import ConfigError
from cmclab.generators import GeneratorSpec, parse_spec

if sys.version_info < (3, 11):
    import tomli as tomllib
else:
    import tomllib


class Scenario(str, Enum):
    """Experiment pipelines."""

    RigidityCurve = "RigidityCurve"
    BubblingSweep = "BubblingSweep"
    MonotonicityAudit = "MonotonicityAudit"
    MinimalSphereCheck = "MinimalSphereCheck"
    DensityScan = "DensityScan"
    SingleReport = "SingleReport"


class Parameters(BaseModel):
    """Scenario parameters.

    Attributes:
        gamma: non-concentration parameter, in (0, ½).
        alpha: Willmore-threshold parameter, in (0, ½).
        delta: monotonicity parameter.
        epsilon: deficit bound ε.
        W: Willmore bound.
        epsilon_tc: total-curvature threshold of r_ε.
        r_max: cap of the radius searches.
        amplitudes: RigidityCurve sweep.
        necks: BubblingSweep sweep, descending.
        radii: DensityScan radii.
        sample_count: monotonicity audit samples.
        basepoints: DensityScan and BubblingSweep basepoints.
        seed: audit sample seed.
        subdivision: refinement of the generated sweep meshes.
        torus_grid: Clifford torus grid of MinimalSphereCheck.
        threads: worker threads (defaults to the CLI setting).

    """

    model_config = ConfigDict(extra="forbid")

    gamma: float = Field(0.1, gt=0, lt=0.5)
    alpha: float = Field(0.25, gt=0, lt=0.5)
    delta: float = Field(0.5, gt=0)
    epsilon: float = Field(0.5, gt=0)
    W: float = Field(7.0 * math.pi, gt=0)
    epsilon_tc: float = Field(0.5, gt=0)
    r_max: float = Field(1.0, gt=0)
    amplitudes: List[float] = [0.01, 0.02, 0.04, 0.08]
    necks: List[float] = [0.3, 0.1, 0.05, 0.02]
    radii: List[float] = [0.05, 0.1, 0.2, 0.3, 0.5, 1.0]
    sample_count: int = Field(500, ge=1)
    basepoints: int = Field(8, ge=1)
    seed: int = 0
    subdivision: int = Field(4, ge=0, le=7)
    torus_grid: int = Field(128, ge=8)
    threads: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def check_sweeps(self):
        """Sweep values must be usable by their generators and radius searches."""
        if not self.amplitudes or any(not 0 <= a < 1 for a in self.amplitudes):
            raise ValueError("amplitudes must be a non-empty list in [0, 1)")
        if not self.necks or any(not 0 < n < 0.5 for n in self.necks):
            raise ValueError("necks must be a non-empty list in (0, 0.5)")
        if any(b >= a for a, b in zip(self.necks, self.necks[1:])):
            raise ValueError("necks must be descending")
        if not self.radii or any(r <= 0 for r in self.radii):
            raise ValueError("radii must be a non-empty list of positive values")
        return self


class ExperimentConfig(BaseModel):
    """One experiment: a scenario, its input surface and parameters."""

    model_config = ConfigDict(extra="forbid")

    scenario: Scenario
    output_dir: str = "results"
    mesh: Optional[FilePath] = None
    generator: Optional[GeneratorSpec] = None
    parameters: Parameters = Parameters()

    @model_validator(mode="after")
    def check_input(self):
        """A mesh path and a generator are mutually exclusive."""
        if self.mesh is not None and self.generator is not None:
            raise ValueError("use either `mesh` or `[generator]`, not both")
        if self.scenario in (Scenario.DensityScan, Scenario.SingleReport, Scenario.MonotonicityAudit):
            if self.mesh is None and self.generator is None:
                raise ValueError(f"{self.scenario.value} needs `mesh` or `[generator]`")
        return self


def _find_line(text: str, loc: Sequence[Any]) -> Optional[int]:
    """Line of the `key = value` entry (or `[section]` header) at a dotted key path."""
    keys = [str(k) for k in loc if not isinstance(k, int)]
    if not keys:
        return None

    *sections, key = keys
    section: Tuple[str, ...] = ()
    header = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]\s*(#.*)?$")
    entry = re.compile(r"^\s*([A-Za-z0-9_\-\"']+)\s*=")

    for number, line in enumerate(text.splitlines(), start=1):
        match = header.match(line)
        if match:
            section = tuple(match.group(1).split("."))
            if list(section) == keys:
                return number
            continue

        match = entry.match(line)
        if match and list(section) == sections and match.group(1).strip("\"'") == key:
            return number

    return None


def loads_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    """Parse and validate a TOML experiment document.

    Relative `mesh` paths are resolved against `base_dir`.

    Raises:
        ConfigError: TOML syntax error, unknown key or out-of-range value.

    """
    try:
        document: Dict[str, Any] = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ConfigError(str(e), line=int(match.group(1)) if match else None) from e

    mesh = document.get("mesh")
    if isinstance(mesh, str) and not os.path.isabs(mesh):
        document["mesh"] = os.path.join(base_dir, mesh)

    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(k) for k in error["loc"])
        raise ConfigError(error["msg"], key=key, line=_find_line(text, error["loc"])) from e


def parse_config(path: str) -> ExperimentConfig:
    """Read an experiment configuration file.

    Raises:
        ConfigError: missing file or invalid content.

    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read configuration: {e}") from e

    return loads_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def parse_generator_spec(path: str) -> GeneratorSpec:
    """Read a generator spec from a TOML file of `GeneratorSpec` fields.

    Raises:
        ConfigError: missing file or TOML syntax error.
        InvalidSpecError: the fields do not validate.

    """
    try:
        with open(path, "rb") as f:
            document = tomllib.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read generator spec: {e}") from e
    except tomllib.TOMLDecodeError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ConfigError(str(e), line=int(match.group(1)) if match else None) from e

    return parse_spec(document)
