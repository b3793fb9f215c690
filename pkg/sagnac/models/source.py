"""
Pydantic models for the pump field, the Sagnac source parameters and its output.
"""
import cmath
import math
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sagnac.models.polarization import BiphotonState, DensityState


class PumpField(BaseModel):
    """Classical pump field entering the interferometer, amplitudes in sqrt(mW)."""

    model_config = ConfigDict(frozen=True)

    e_h: complex = Field(..., description="H amplitude (sqrt(mW))")
    e_v: complex = Field(..., description="V amplitude (sqrt(mW))")

    @field_validator("e_h", "e_v")
    @classmethod
    def _finite(cls, value: complex) -> complex:
        if not cmath.isfinite(value):
            raise ValueError("pump amplitude must be finite")
        return value

    @model_validator(mode="after")
    def _has_power(self) -> "PumpField":
        if self.power_mw <= 0.0:
            raise ValueError("pump field carries no power")
        return self

    @classmethod
    def from_jones(cls, jones_vector) -> "PumpField":
        e_h, e_v = (complex(x) for x in jones_vector)
        return cls(e_h=e_h, e_v=e_v)

    @property
    def power_mw(self) -> float:
        return abs(self.e_h) ** 2 + abs(self.e_v) ** 2

    @property
    def phi_p(self) -> float:
        """Relative phase arg(e_v) - arg(e_h)."""
        return cmath.phase(self.e_v) - cmath.phase(self.e_h)

    @property
    def jones(self) -> np.ndarray:
        return np.array([self.e_h, self.e_v], dtype=complex)


class PBSPumpTransfer(BaseModel):
    """Power fractions of the pump routed by the interferometer PBS."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    t_h: float = Field(0.73, ge=0.0, le=1.0, description="H pump transmitted into the correct port")
    leak_h: float = Field(0.03, ge=0.0, le=1.0, description="H pump leaking into the wrong port")
    r_v: float = Field(0.80, ge=0.0, le=1.0, description="V pump reflected into the correct port")
    leak_v: float = Field(0.05, ge=0.0, le=1.0, description="V pump leaking into the wrong port")

    @model_validator(mode="after")
    def _conserves_power(self) -> "PBSPumpTransfer":
        if self.t_h + self.leak_h > 1.0:
            raise ValueError("t_h + leak_h exceeds 1")
        if self.r_v + self.leak_v > 1.0:
            raise ValueError("r_v + leak_v exceeds 1")
        return self


class SourceParams(BaseModel):
    """
    Interferometer and crystal parameters.

    The pump wavenumber is derived as k_s + k_i so that energy conservation
    holds exactly in floating point.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    eta_h: float = Field(1.0, gt=0.0, description="Generation efficiency, counterclockwise (H-pumped) path")
    eta_v: float = Field(1.0, gt=0.0, description="Generation efficiency, clockwise (V-pumped) path")
    pbs_pump: PBSPumpTransfer = Field(default_factory=PBSPumpTransfer)
    l_a: float = Field(0.10, ge=0.0, description="PBS to crystal, path A (m)")
    l_b: float = Field(0.12, ge=0.0, description="PBS to crystal, path B (m)")
    k_s: float = Field(2.0 * math.pi / 809.92e-9, gt=0.0, description="Signal wavenumber (rad/m)")
    k_i: float = Field(2.0 * math.pi / 809.92e-9, gt=0.0, description="Idler wavenumber (rad/m)")
    theta_s: float = Field(0.0, description="HWP2 phase acquired by the signal (rad)")
    theta_i: float = Field(0.0, description="HWP2 phase acquired by the idler (rad)")
    theta_p: float = Field(0.0, description="HWP2 phase acquired by the pump (rad)")
    pair_rate_per_mw: float = Field(5000.0, ge=0.0, description="Detected pairs/s per mW of pump")

    @field_validator("l_a", "l_b", "k_s", "k_i", "theta_s", "theta_i", "theta_p", "pair_rate_per_mw")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("parameter must be finite")
        return value

    @property
    def k_p(self) -> float:
        return self.k_s + self.k_i

    @property
    def waveplate_phase(self) -> float:
        """theta_s + theta_i - theta_p, the fixed dispersion term of the output phase."""
        return self.theta_s + self.theta_i - self.theta_p


class SourceOutput(BaseModel):
    """Biphoton state leaving the interferometer together with its bookkeeping."""

    model_config = ConfigDict(frozen=True)

    state: Union[BiphotonState, DensityState]
    beta: float = Field(..., ge=0.0, description="Relative amplitude of the |VH> term")
    phi: float = Field(..., gt=-math.pi, le=math.pi, description="Relative phase (rad), in (-pi, pi]")
    usable_pump_mw: float = Field(..., ge=0.0, description="Pump power that drives down-conversion (mW)")
    pump_mw: float = Field(..., gt=0.0, description="Pump power entering the interferometer (mW)")
    pair_rate_per_mw: float = Field(..., ge=0.0, description="Detected pairs/s per mW of pump")
    coherence: float = Field(1.0, ge=0.0, le=1.0, description="HV/VH coherence factor d")

    @property
    def usable_fraction(self) -> float:
        return self.usable_pump_mw / self.pump_mw


class DephasingCalibration(BaseModel):
    """Linear map from collection divergence to rms phase spread."""

    model_config = ConfigDict(frozen=True)

    slope: float = Field(..., ge=0.0, description="rad per mrad of full divergence")
    offset: float = Field(0.0, description="rad")


class CollectionCalibration(BaseModel):
    """Gaussian emission-cone model of collected flux versus divergence."""

    model_config = ConfigDict(frozen=True)

    flux_limit: float = Field(..., gt=0.0, description="pairs/s/mW with no aperture limit")
    width_mrad: float = Field(..., gt=0.0, description="rms half-width of the emission cone (mrad)")
