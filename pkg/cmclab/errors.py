"""Custom exceptions"""

from typing import Optional


class CmcLabError(Exception):
    """Base exception"""


class ParseError(CmcLabError):
    """Malformed mesh file."""

    def __init__(self, message: str, line: Optional[int] = None):
        """Keep the offending line number."""
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TopologyError(CmcLabError):
    """Open boundary, non-manifold edge or inconsistent orientation."""


class DegenerateTriangleError(TopologyError):
    """Triangle area under the degeneracy floor."""


class DimensionError(CmcLabError):
    """Ambient dimension not supported by the format or operation."""


class CodimensionError(DimensionError):
    """Operation requires a surface in R³."""


class NotOrthogonalError(CmcLabError):
    """Rotation matrix is not orthogonal."""


class NonPositiveFactorError(CmcLabError):
    """Scale factor must be positive."""


class MeshIOError(CmcLabError):
    """Mesh could not be read or written."""


class MeshNotFoundError(MeshIOError):
    """Mesh not found."""


class MeshExistsError(MeshIOError):
    """Mesh file already exists."""


class DegenerateVolumeError(CmcLabError):
    """Enclosed volume too small to fix an inner normal."""


class NegativeVolumeError(CmcLabError):
    """Enclosed volume stays negative after re-orientation."""


class DegeneratePositionsError(CmcLabError):
    """Centered immersion has (almost) zero L² norm."""


class PreconditionUnmetError(CmcLabError):
    """Hypothesis of a checked inequality does not hold."""


class NonPositiveRadiusError(CmcLabError):
    """Radius must be positive."""


class InvalidGammaError(CmcLabError):
    """Gamma outside its admissible range."""


class NonPositiveWError(CmcLabError):
    """Willmore bound must be positive."""


class BadSampleError(CmcLabError):
    """Audit sample does not satisfy 0 < r <= a."""


class GenusError(CmcLabError):
    """Surface is not a topological sphere."""


class FlowDivergedError(CmcLabError):
    """Spherical flow did not reach the quality gate."""


class CenteringDivergedError(CmcLabError):
    """Möbius centering did not converge."""


class DegenerateCovarianceError(CmcLabError):
    """Alignment cross-covariance is rank deficient."""


class InvalidSpecError(CmcLabError):
    """Invalid generator specification."""


class ConfigError(CmcLabError):
    """Invalid experiment configuration."""

    def __init__(
        self, message: str, key: Optional[str] = None, line: Optional[int] = None
    ):
        """Keep the offending key path and line."""
        self.key = key
        self.line = line
        prefix = ""
        if key:
            prefix += f"{key}: "
        if line is not None:
            prefix = f"line {line}: " + prefix
        super().__init__(prefix + message)


_HTTP_EXCEPTIONS = {
    404: MeshNotFoundError,
}

_FILE_EXCEPTIONS = {
    FileNotFoundError: MeshNotFoundError,
    IsADirectoryError: MeshIOError,
    PermissionError: MeshIOError,
}
