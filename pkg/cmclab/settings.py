"""cmclab runtime settings."""

from pydantic import model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class CacheSettings(BaseSettings):
    """Curvature cache settings"""

    # TTL of the cache in seconds
    ttl: int = 300

    # Maximum number of cached curvature packets
    maxsize: int = 512

    # Whether or not caching is enabled
    disable: bool = False

    model_config = SettingsConfigDict(env_prefix="CMCLAB_CACHE_")

    @model_validator(mode="before")
    def check_enable(cls, values):
        """Check if cache is disabled."""
        if values.get("disable"):
            values["ttl"] = 0
            values["maxsize"] = 0

        return values


class FlowSettings(BaseSettings):
    """Conformal sphere map settings"""

    # implicit step of the conformalized mean curvature flow
    time_step: float = 0.1
    max_iterations: int = 200

    # relative standard deviation of radii at which the flow is considered round
    sphericity_tolerance: float = 1e-4

    # area-weighted mean quasi-conformal distortion gate
    qc_gate: float = 1.05

    centering_tolerance: float = 1e-6
    centering_max_iterations: int = 100

    model_config = SettingsConfigDict(env_prefix="CMCLAB_FLOW_")


class DensitySettings(BaseSettings):
    """Radius search settings"""

    grid_points: int = 64

    # smallest grid radius is r_max / grid_floor
    grid_floor: float = 1024.0

    bisection_steps: int = 30

    # relative slack allowed on audited monotonicity inequalities
    audit_allowance: float = 1e-2

    model_config = SettingsConfigDict(env_prefix="CMCLAB_DENSITY_")


cache_config = CacheSettings()
flow_config = FlowSettings()
density_config = DensitySettings()
