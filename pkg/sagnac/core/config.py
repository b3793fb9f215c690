"""
Run configuration management using pydantic-settings.

A run is described by one TOML file (`key = value` lines under `[section]`
headers). Angles are given in degrees here and nowhere else. No environment
variables or .env files are consulted; command-line overrides are passed as
init arguments and take precedence over the file.
"""
import math
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from sagnac.core.errors import OutputError
from sagnac.models.detection import DetectionConfig
from sagnac.models.source import (
    CollectionCalibration,
    DephasingCalibration,
    PBSPumpTransfer,
    SourceParams,
)
from sagnac.services.source_model import calibrate_collection, calibrate_dephasing


class SourceSection(BaseModel):
    """[source]: interferometer, crystal and flux parameters."""

    model_config = ConfigDict(extra="forbid")

    eta_h: float = Field(1.0, description="Generation efficiency, H-pumped path")
    eta_v: float = Field(1.0, description="Generation efficiency, V-pumped path")
    pbs_t_h: float = Field(0.73, description="PBS transmission of the H pump")
    pbs_leak_h: float = Field(0.03, description="H pump leaking into the wrong port")
    pbs_r_v: float = Field(0.80, description="PBS reflection of the V pump")
    pbs_leak_v: float = Field(0.05, description="V pump leaking into the wrong port")
    l_a_m: float = Field(0.10, description="PBS to crystal, path A (m)")
    l_b_m: float = Field(0.12, description="PBS to crystal, path B (m)")
    signal_wavelength_nm: float = Field(809.92, gt=0.0)
    idler_wavelength_nm: float = Field(809.92, gt=0.0)
    theta_s_deg: float = Field(0.0, description="HWP2 phase on the signal")
    theta_i_deg: float = Field(0.0, description="HWP2 phase on the idler")
    theta_p_deg: float = Field(0.0, description="HWP2 phase on the pump")
    pair_rate_per_mw: float = Field(5000.0, description="Detected pairs/s/mW")
    bandwidth_nm: float = Field(1.0, gt=0.0, description="Interference filter bandwidth")

    def to_params(self) -> SourceParams:
        return SourceParams(
            eta_h=self.eta_h,
            eta_v=self.eta_v,
            pbs_pump=PBSPumpTransfer(
                t_h=self.pbs_t_h,
                leak_h=self.pbs_leak_h,
                r_v=self.pbs_r_v,
                leak_v=self.pbs_leak_v,
            ),
            l_a=self.l_a_m,
            l_b=self.l_b_m,
            k_s=2.0 * math.pi / (self.signal_wavelength_nm * 1e-9),
            k_i=2.0 * math.pi / (self.idler_wavelength_nm * 1e-9),
            theta_s=math.radians(self.theta_s_deg),
            theta_i=math.radians(self.theta_i_deg),
            theta_p=math.radians(self.theta_p_deg),
            pair_rate_per_mw=self.pair_rate_per_mw,
        )


class PumpSection(BaseModel):
    """[pump]: power and HWP1/QWP1 preparation."""

    model_config = ConfigDict(extra="forbid")

    power_mw: float = Field(3.28, gt=0.0)
    auto_balance: bool = Field(True, description="Solve HWP1/QWP1 for beta = 1")
    target_phi_deg: float = Field(180.0, description="Target relative phase when balancing")
    hwp1_deg: Optional[float] = None
    qwp1_deg: Optional[float] = None

    @model_validator(mode="after")
    def _angles_or_balance(self) -> "PumpSection":
        if not self.auto_balance and (self.hwp1_deg is None or self.qwp1_deg is None):
            raise ValueError("pump needs hwp1_deg and qwp1_deg when auto_balance is false")
        return self


class DephasingSection(BaseModel):
    """
    [dephasing]: wavefront dephasing of the collected modes.

    `coherence`, when set, fixes d directly. Otherwise d follows from
    `divergence_mrad` through a linear divergence-to-sigma calibration; without
    explicit slope/offset that calibration is fitted to the two anchors below.
    The far anchor's 30 mrad is an assumed divergence for the no-iris
    measurement, which has no stated angle.
    """

    model_config = ConfigDict(extra="forbid")

    coherence: Optional[float] = Field(None, gt=0.0, le=1.0)
    divergence_mrad: float = Field(12.5, ge=0.0)
    slope: Optional[float] = Field(None, ge=0.0, description="rad per mrad")
    offset: Optional[float] = Field(None, description="rad")
    anchor_near_mrad: float = 12.5
    anchor_near_coherence: float = 0.968
    anchor_far_mrad: float = 30.0
    anchor_far_coherence: float = 0.930
    flux_near: float = Field(5000.0, description="pairs/s/mW at the near anchor")
    flux_far: float = Field(22750.0, description="pairs/s/mW at the far anchor")

    @model_validator(mode="after")
    def _slope_and_offset_together(self) -> "DephasingSection":
        if (self.slope is None) != (self.offset is None):
            raise ValueError("give both slope and offset, or neither")
        return self

    def calibration(self) -> DephasingCalibration:
        if self.slope is not None:
            return DephasingCalibration(slope=self.slope, offset=self.offset)
        return calibrate_dephasing(
            (self.anchor_near_mrad, self.anchor_near_coherence),
            (self.anchor_far_mrad, self.anchor_far_coherence),
        )

    def collection(self) -> CollectionCalibration:
        return calibrate_collection(
            (self.anchor_near_mrad, self.flux_near),
            (self.anchor_far_mrad, self.flux_far),
        )


class DetectionSection(BaseModel):
    """[detection]: detectors and counting."""

    model_config = ConfigDict(extra="forbid")

    det_eff_1: float = 1.0
    det_eff_2: float = 1.0
    dark_rate_1: float = Field(91800.0, description="Uncorrelated singles, reconstructed")
    dark_rate_2: float = Field(91800.0, description="Uncorrelated singles, reconstructed")
    coincidence_window_s: float = 1e-9
    integration_time_s: float = 40.0


class ScanSection(BaseModel):
    """[scan]: fringe and aperture-sweep grids."""

    model_config = ConfigDict(extra="forbid")

    theta2_deg: List[float] = Field(default_factory=lambda: [0.0, 46.0, 90.5, 135.0])
    theta1_start_deg: float = 0.0
    theta1_stop_deg: float = 350.0
    theta1_step_deg: float = Field(10.0, gt=0.0)
    sweep_theta2_deg: float = 45.0
    sweep_divergences_mrad: List[float] = Field(
        default_factory=lambda: [2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 20.0, 25.0, 30.0]
    )

    @model_validator(mode="after")
    def _grid(self) -> "ScanSection":
        if self.theta1_stop_deg <= self.theta1_start_deg:
            raise ValueError("theta1_stop_deg must exceed theta1_start_deg")
        return self

    def theta1_grid(self) -> List[float]:
        count = int(math.floor((self.theta1_stop_deg - self.theta1_start_deg) / self.theta1_step_deg + 1e-9)) + 1
        return [math.radians(self.theta1_start_deg + k * self.theta1_step_deg) for k in range(count)]


class ChshSection(BaseModel):
    """[chsh]: the four (theta1, theta2) analyzer pairs, degrees."""

    model_config = ConfigDict(extra="forbid")

    angles_deg: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(0.0, 157.5), (-45.0, 157.5), (-45.0, 112.5), (0.0, 112.5)]
    )

    @model_validator(mode="after")
    def _four_pairs(self) -> "ChshSection":
        if len(self.angles_deg) != 4:
            raise ValueError("chsh.angles_deg needs exactly four pairs")
        return self

    def angle_set(self) -> List[Tuple[float, float]]:
        return [(math.radians(a), math.radians(b)) for a, b in self.angles_deg]


class OutputSection(BaseModel):
    """[output]: where result files go."""

    model_config = ConfigDict(extra="forbid")

    directory: str = "results"


class RunConfig(BaseSettings):
    """Complete description of a simulated experiment."""

    model_config = SettingsConfigDict(extra="forbid", toml_file=None)

    seed: int = Field(20070423, ge=0, lt=2**64, description="Master RNG seed")
    workers: int = Field(1, ge=1, description="Threads used for per-setting simulation")
    debug: bool = False

    source: SourceSection = Field(default_factory=SourceSection)
    pump: PumpSection = Field(default_factory=PumpSection)
    dephasing: DephasingSection = Field(default_factory=DephasingSection)
    detection: DetectionSection = Field(default_factory=DetectionSection)
    scan: ScanSection = Field(default_factory=ScanSection)
    chsh: ChshSection = Field(default_factory=ChshSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings, TomlConfigSettingsSource(settings_cls))

    @model_validator(mode="after")
    def _validate_domain(self) -> "RunConfig":
        # build every domain model once so invariant violations surface before a run
        self.source_params()
        self.detection_config()
        self.dephasing.calibration()
        self.dephasing.collection()
        return self

    def source_params(self) -> SourceParams:
        return self.source.to_params()

    def detection_config(self) -> DetectionConfig:
        return DetectionConfig(
            det_eff_1=self.detection.det_eff_1,
            det_eff_2=self.detection.det_eff_2,
            dark_rate_1=self.detection.dark_rate_1,
            dark_rate_2=self.detection.dark_rate_2,
            coincidence_window=self.detection.coincidence_window_s,
            integration_time=self.detection.integration_time_s,
            pump_power_mw=self.pump.power_mw,
            rng_seed=self.seed,
        )

    @property
    def output_dir(self) -> Path:
        return Path(self.output.directory)


def load_run_config(path: Optional[Path] = None, **overrides) -> RunConfig:
    """
    Load a RunConfig from a TOML file, applying keyword overrides on top.

    Args:
        path: TOML file; defaults only when None
        **overrides: Values that take precedence over the file

    Returns:
        Validated RunConfig

    Raises:
        OutputError: If the file cannot be read
        pydantic.ValidationError: If a value violates a constraint or a key is unknown
    """
    if path is None:
        return RunConfig(**overrides)

    path = Path(path)
    if not path.is_file():
        raise OutputError(f"config file not found: {path}", path=str(path))

    class FileRunConfig(RunConfig):
        model_config = SettingsConfigDict(toml_file=path)

    return FileRunConfig(**overrides)
