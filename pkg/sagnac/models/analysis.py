"""
Pydantic models for fit and Bell-test results.
"""
import math
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class FitResult(BaseModel):
    """Sinusoidal fringe fit C(theta1) = c0 [1 + V cos(2 (theta1 - phase_offset))]."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "c0": 164000.0,
                "visibility": 0.9685,
                "phase_offset": 2.356,
                "sigma_c0": 280.0,
                "sigma_v": 0.0012,
                "sigma_phase": 0.0009,
                "chi2_per_dof": 1.02,
            }
        },
    )

    c0: float = Field(..., description="Mean coincidence level (counts)")
    visibility: float = Field(..., ge=0.0, le=1.0)
    phase_offset: float = Field(..., description="Fringe maximum position (rad), in [0, pi)")
    sigma_c0: float = Field(..., ge=0.0)
    sigma_v: float = Field(..., ge=0.0)
    sigma_phase: float = Field(..., ge=0.0)
    chi2_per_dof: float = Field(..., ge=0.0)
    residuals: List[float] = Field(default_factory=list, description="Weighted residuals per point")
    gradient_norm: float = Field(0.0, ge=0.0, description="Objective gradient norm at the optimum")
    phase_degenerate: bool = Field(False, description="Phase is unconstrained (V at zero)")
    extrema_visibility: float = Field(..., description="(Cmax - Cmin)/(Cmax + Cmin) from the data")


class CHSHResult(BaseModel):
    """Correlation values and the CHSH S parameter."""

    model_config = ConfigDict(frozen=True)

    e_values: List[Tuple[float, float]] = Field(..., description="(E, sigma_E) per angle pair")
    s: float = Field(..., ge=0.0)
    sigma_s: float = Field(..., ge=0.0, description="Includes accidental-estimate variance")
    sigma_s_raw: float = Field(..., ge=0.0, description="Raw-count variance only")

    @field_validator("e_values")
    @classmethod
    def _bounded(cls, values: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if len(values) != 4:
            raise ValueError("CHSH needs exactly four correlation values")
        for e, sigma_e in values:
            if sigma_e < 0.0:
                raise ValueError("sigma_E must be non-negative")
            if abs(e) > 1.0 + 3.0 * sigma_e + 1e-12:
                raise ValueError(f"|E| = {abs(e):.6f} exceeds 1 beyond statistical tolerance")
        return values

    @property
    def significance(self) -> float:
        """Violation of the classical bound in standard deviations."""
        if self.sigma_s == 0.0:
            return math.inf if self.s > 2.0 else 0.0
        return (self.s - 2.0) / self.sigma_s
