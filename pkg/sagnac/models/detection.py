"""
Pydantic models for the detection chain and recorded photon counts.
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

MIN_FRINGE_POINTS = 8


class DetectionConfig(BaseModel):
    """
    Detector and counting parameters.

    The default uncorrelated singles rates (`dark_rate_*`) are a reconstruction:
    together with the pair flux they give the ~1e5/s singles quoted alongside
    the ~10/s accidental rate. They stand for every uncorrelated click
    (detector darks and photons whose partner was lost), not darks alone.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    det_eff_1: float = Field(1.0, ge=0.0, le=1.0, description="Detector 1 efficiency")
    det_eff_2: float = Field(1.0, ge=0.0, le=1.0, description="Detector 2 efficiency")
    dark_rate_1: float = Field(91800.0, ge=0.0, description="Uncorrelated singles on arm 1 (counts/s)")
    dark_rate_2: float = Field(91800.0, ge=0.0, description="Uncorrelated singles on arm 2 (counts/s)")
    coincidence_window: float = Field(1e-9, gt=0.0, description="Coincidence window (s)")
    integration_time: float = Field(40.0, gt=0.0, description="Counting time per setting (s)")
    pump_power_mw: float = Field(3.28, gt=0.0, description="Pump power (mW)")
    rng_seed: int = Field(20070423, ge=0, lt=2**64, description="Master seed")


class ExpectedRates(BaseModel):
    """Mean count rates at one analyzer setting."""

    model_config = ConfigDict(frozen=True)

    theta1: float
    theta2: float
    r1: float = Field(..., ge=0.0, description="Singles rate, arm 1 (counts/s)")
    r2: float = Field(..., ge=0.0, description="Singles rate, arm 2 (counts/s)")
    rc: float = Field(..., ge=0.0, description="True coincidence rate (counts/s)")


class CountRecord(BaseModel):
    """Counts recorded at one analyzer setting."""

    model_config = ConfigDict(frozen=True)

    theta1: float = Field(..., description="Analyzer 1 angle (rad)")
    theta2: float = Field(..., description="Analyzer 2 angle (rad)")
    singles_1: int = Field(..., ge=0)
    singles_2: int = Field(..., ge=0)
    coincidences_raw: int = Field(..., ge=0)
    accidental_estimate: float = Field(..., ge=0.0, description="Expected accidental counts")
    duration: float = Field(..., gt=0.0, description="Counting time (s)")
    label: Optional[str] = Field(None, description="CHSH outcome label (++, +-, -+, --)")


class FringeScan(BaseModel):
    """Coincidence fringe recorded over a theta1 grid at fixed theta2."""

    model_config = ConfigDict(frozen=True)

    theta2: float = Field(..., description="Analyzer 2 angle (rad)")
    points: List[CountRecord]

    @model_validator(mode="after")
    def _identifiable(self) -> "FringeScan":
        if len(self.points) < MIN_FRINGE_POINTS:
            raise ValueError(
                f"fringe scan needs at least {MIN_FRINGE_POINTS} points, got {len(self.points)}"
            )
        angles = [point.theta1 for point in self.points]
        if any(later <= earlier for earlier, later in zip(angles, angles[1:])):
            raise ValueError("theta1 grid must be strictly increasing")
        return self

    @property
    def theta1(self) -> List[float]:
        return [point.theta1 for point in self.points]
