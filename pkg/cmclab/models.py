"""cmclab models."""

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator


def format_value(value: Any) -> str:
    """Fixed 12-significant-digit rendering used by every text and CSV output."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    if value is None:
        return ""
    return str(value)


class Report(BaseModel):
    """Base for flat report documents."""

    def to_text(self) -> str:
        """Flat `key = value` text block."""
        lines = []
        for key, value in self.model_dump(exclude_none=True).items():
            if isinstance(value, (list, tuple)):
                value = " ".join(format_value(v) for v in _flatten(value))
            else:
                value = format_value(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines)

    def to_row(self) -> Dict[str, str]:
        """Scalar fields as a formatted CSV record."""
        return {
            key: format_value(value)
            for key, value in self.model_dump().items()
            if not isinstance(value, (list, tuple, dict))
        }


def _flatten(values):
    for v in values:
        if isinstance(v, (list, tuple)):
            yield from _flatten(v)
        else:
            yield v


class EnergyReport(Report):
    """Global functionals of a closed mesh."""

    area: float = Field(gt=0)
    willmore_quarter: float
    willmore_raw: float
    deficit_l2: Optional[float] = None
    mean_scalar: Optional[float] = None
    abs_mean_deficit: float
    j_value: float = Field(ge=0)
    j_c: float
    position_l2: float
    tracefree_energy: float
    total_curvature: float
    euler_char: int
    diameter: float
    ambient_dim: int = Field(ge=3)


class AlexandrovReport(Report):
    """Alexandrov deficit of the domain enclosed by a surface in R³."""

    enclosed_volume: float = Field(gt=0)
    h0: float
    delta2: float = Field(ge=0)
    rescale_factor: float = Field(gt=0)


class InequalityCheck(BaseModel):
    """One evaluated inequality `lhs <= rhs`, allowance already folded into `holds`."""

    name: str
    lhs: float
    rhs: float
    holds: bool

    @property
    def slack(self) -> float:
        """rhs - lhs."""
        return self.rhs - self.lhs


def le(name: str, lhs: float, rhs: float, rtol: float = 0.0, atol: float = 0.0):
    """Check `lhs <= rhs` up to a relative and an absolute allowance."""
    lhs, rhs = float(lhs), float(rhs)
    return InequalityCheck(
        name=name, lhs=lhs, rhs=rhs, holds=lhs <= rhs + rtol * abs(rhs) + atol
    )


def lt(name: str, lhs: float, rhs: float):
    """Check `lhs < rhs` strictly."""
    lhs, rhs = float(lhs), float(rhs)
    return InequalityCheck(name=name, lhs=lhs, rhs=rhs, holds=lhs < rhs)


class CheckResult(BaseModel):
    """Outcome of an inequality chain. Truthy iff every inequality holds."""

    name: str
    checks: List[InequalityCheck] = []

    @property
    def holds(self) -> bool:
        """All inequalities hold."""
        return all(c.holds for c in self.checks)

    def __bool__(self) -> bool:
        """Same as `holds`."""
        return self.holds

    def failed(self) -> List[InequalityCheck]:
        """Inequalities that do not hold."""
        return [c for c in self.checks if not c.holds]


class RadiiReport(Report):
    """Non-concentration and total-curvature radii at one point."""

    gamma: float = Field(gt=0, lt=0.5)
    r_D: float = Field(ge=0)
    epsilon_tc: float = Field(gt=0)
    r_eps: float = Field(gt=0)
    sigma: float = Field(gt=0)

    @model_validator(mode="after")
    def check_r_eps(self):
        """r_eps never exceeds sigma."""
        if self.r_eps > self.sigma * (1 + 1e-12):
            raise ValueError("r_eps must not exceed sigma")
        return self


class Violation(BaseModel):
    """Monotonicity audit sample where LHS > RHS·(1 + allowance)."""

    index: int
    center: Tuple[float, ...]
    r: float
    a: float
    lhs: float
    rhs: float


class RigidityReport(Report):
    """Deficits of the aligned conformal sphere map."""

    w22_deficit: float = Field(ge=0)
    sup_log_conformal: float = Field(ge=0)
    sup_exp_conformal: float = Field(ge=0)
    rotation: List[List[float]]
    translation: List[float]
    qc_max: float
    qc_mean: float
    residual_energy: float = 0.0
    c_deficit: Optional[float] = None

    @property
    def rigidity_sum(self) -> float:
        """w22_deficit + sup_log_conformal."""
        return self.w22_deficit + self.sup_log_conformal
