"""
Experiment orchestration: wires source, detection and analysis into the
reproducible runs behind each command and writes their result files.
"""
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from pydantic import ValidationError

from sagnac.core.config import RunConfig
from sagnac.core.errors import ConfigValidationError, SchemaError
from sagnac.core.logging import get_logger
from sagnac.models.analysis import FitResult
from sagnac.models.detection import CountRecord, FringeScan
from sagnac.models.report import CommandReport
from sagnac.models.source import SourceOutput
from sagnac.services import analysis
from sagnac.services.detection import pair_rate, run_chsh, run_fringe, subtract_accidentals
from sagnac.services.source_model import (
    aperture_to_sigma,
    classical_visibility,
    collection_flux,
    dephase_output,
    prepare_pump,
    sigma_for_coherence,
    source_from_angles,
)
from sagnac.utils.csv_io import (
    CHSH_COLUMNS,
    CHSH_SCHEMA,
    FRINGE_COLUMNS,
    FRINGE_SCHEMA,
    SWEEP_COLUMNS,
    SWEEP_SCHEMA,
    ensure_output_dir,
    parse_count,
    parse_float,
    read_csv,
    write_csv,
    write_report,
)

logger = get_logger(__name__)

CORRECTED_TOLERANCE = 1e-6


def _record_row(rec: CountRecord) -> list:
    return [
        math.degrees(rec.theta1),
        math.degrees(rec.theta2),
        rec.singles_1,
        rec.singles_2,
        rec.coincidences_raw,
        rec.accidental_estimate,
        subtract_accidentals(rec),
        rec.duration,
    ]


def load_fringe_csv(path: Path) -> FringeScan:
    """
    Read a fringe table back into a FringeScan.

    Raises:
        SchemaError: On malformed rows, inconsistent theta2 or a scan that
            violates the FringeScan invariants
    """
    rows = read_csv(path, FRINGE_SCHEMA, FRINGE_COLUMNS)
    records = []
    theta2_deg = None
    for line, row in rows:
        row_theta2 = parse_float(row, "theta2_deg", line)
        if theta2_deg is None:
            theta2_deg = row_theta2
        elif row_theta2 != theta2_deg:
            raise SchemaError("theta2_deg differs from the first row", row=line)
        raw = parse_count(row, "raw_coinc", line)
        accidentals = parse_float(row, "accidentals", line)
        corrected = parse_float(row, "corrected", line)
        if abs(corrected - (raw - accidentals)) > CORRECTED_TOLERANCE * max(1.0, abs(corrected)):
            raise SchemaError("corrected does not equal raw_coinc - accidentals", row=line)
        try:
            records.append(CountRecord(
                theta1=math.radians(parse_float(row, "theta1_deg", line)),
                theta2=math.radians(row_theta2),
                singles_1=parse_count(row, "singles1", line),
                singles_2=parse_count(row, "singles2", line),
                coincidences_raw=raw,
                accidental_estimate=accidentals,
                duration=parse_float(row, "duration_s", line),
            ))
        except ValidationError as e:
            raise SchemaError(f"invalid record: {e.errors()[0]['msg']}", row=line) from None

    if theta2_deg is None:
        raise SchemaError("fringe table has no data rows", row=3)
    try:
        return FringeScan(theta2=math.radians(theta2_deg), points=records)
    except ValidationError as e:
        raise SchemaError(f"invalid fringe scan: {e.errors()[0]['msg']}") from None


class ExperimentService:
    """Runs the configured experiments and writes their outputs."""

    def __init__(self, config: RunConfig):
        """
        Initialize the service.

        Args:
            config: Validated run configuration
        """
        self.config = config
        self.params = config.source_params()
        self.detection = config.detection_config()
        self.output_dir = config.output_dir

    def sigma_phi(self, divergence_mrad: Optional[float] = None) -> float:
        """Phase spread from an explicit coherence, or from the divergence calibration."""
        dephasing = self.config.dephasing
        if divergence_mrad is None and dephasing.coherence is not None:
            return sigma_for_coherence(dephasing.coherence)
        divergence = dephasing.divergence_mrad if divergence_mrad is None else divergence_mrad
        return aperture_to_sigma(divergence, dephasing.calibration())

    def pure_source(self, pair_rate_per_mw: Optional[float] = None) -> Tuple[SourceOutput, Tuple[float, float]]:
        """Prepare the pump and build the pure output state."""
        params = self.params
        if pair_rate_per_mw is not None:
            params = params.model_copy(update={"pair_rate_per_mw": pair_rate_per_mw})
        pump = self.config.pump
        if pump.auto_balance:
            return source_from_angles(
                params,
                pump.power_mw,
                target_phi=math.radians(pump.target_phi_deg),
            )
        return source_from_angles(
            params,
            pump.power_mw,
            hwp1_angle=math.radians(pump.hwp1_deg),
            qwp1_angle=math.radians(pump.qwp1_deg),
        )

    def source(self, divergence_mrad: Optional[float] = None,
               pair_rate_per_mw: Optional[float] = None) -> SourceOutput:
        pure, _ = self.pure_source(pair_rate_per_mw)
        return dephase_output(pure, self.sigma_phi(divergence_mrad))

    def _path(self, name: str) -> Path:
        return ensure_output_dir(self.output_dir) / name

    def _measured_flux(self, fit: FitResult, source: SourceOutput, bandwidth_nm: float = 1.0) -> float:
        # the joint probability averages to 1/4 over theta1 when the marginals are unpolarized
        return analysis.brightness(
            4.0 * fit.c0,
            self.detection.integration_time,
            source.pump_mw,
            bandwidth_nm,
        )

    @staticmethod
    def _fit_table(csv_path: Path) -> Tuple[FringeScan, FitResult, List[Tuple[str, object]]]:
        scan = load_fringe_csv(csv_path)
        fit = analysis.fit_fringe(scan)
        entries: List[Tuple[str, object]] = [
            ("theta2_deg", math.degrees(scan.theta2)),
            ("num_points", len(scan.points)),
        ]
        return scan, fit, entries + analysis.fit_summary(fit)

    def fit_file(self, csv_path: Path) -> CommandReport:
        """Fit an existing fringe table and write `fit_report.txt`."""
        _, _, entries = self._fit_table(Path(csv_path))
        report_path = self._path("fit_report.txt")
        write_report(report_path, entries)
        return CommandReport(command="fit", entries=entries, artifacts=[str(report_path)])

    def fringe(self, theta2_deg: float) -> CommandReport:
        """
        Simulate and fit one fringe at fixed idler analyzer angle.

        The fit runs on the table as written, so re-fitting the CSV later gives
        identical parameters.
        """
        source = self.source()
        scan = run_fringe(
            source,
            math.radians(theta2_deg),
            self.config.scan.theta1_grid(),
            self.detection,
            workers=self.config.workers,
        )
        csv_path = write_csv(
            self._path(f"fringe_{theta2_deg:g}.csv"),
            FRINGE_SCHEMA,
            FRINGE_COLUMNS,
            (_record_row(rec) for rec in scan.points),
        )
        _, fit, fit_entries = self._fit_table(csv_path)

        measured = self._measured_flux(fit, source, self.config.source.bandwidth_nm)
        entries: List[Tuple[str, object]] = [("coherence", source.coherence), ("seed", self.config.seed)]
        entries += fit_entries
        entries += [
            ("brightness_pairs_per_s_per_mw_per_nm", measured),
            ("pbs_corrected_brightness", analysis.pbs_corrected_brightness(measured, source.usable_fraction)),
        ]
        report_path = self._path(f"fringe_{theta2_deg:g}_report.txt")
        write_report(report_path, entries)
        return CommandReport(command="fringe", entries=entries, artifacts=[str(csv_path), str(report_path)])

    def chsh(self) -> CommandReport:
        """Simulate the 16 CHSH measurements and evaluate S."""
        source = self.source()
        angle_set = self.config.chsh.angle_set()
        records = run_chsh(source, self.detection, angle_set, workers=self.config.workers)
        csv_path = write_csv(
            self._path("chsh.csv"),
            CHSH_SCHEMA,
            CHSH_COLUMNS,
            ([rec.label] + _record_row(rec) for rec in records),
        )
        result = analysis.chsh_from_records(records)

        entries: List[Tuple[str, object]] = [("coherence", source.coherence), ("seed", self.config.seed)]
        for index, ((theta1, theta2), (e, sigma_e)) in enumerate(zip(angle_set, result.e_values), start=1):
            entries += [
                (f"E{index}_angles_deg", f"{math.degrees(theta1):g};{math.degrees(theta2):g}"),
                (f"E{index}", e),
                (f"sigma_E{index}", sigma_e),
            ]
        entries += [
            ("S", result.s),
            ("sigma_S", result.sigma_s),
            ("sigma_S_raw", result.sigma_s_raw),
            ("significance", result.significance),
            ("S_expected", analysis.analytic_chsh(source.state, angle_set)),
        ]
        report_path = self._path("chsh_report.txt")
        write_report(report_path, entries)
        return CommandReport(command="chsh", entries=entries, artifacts=[str(csv_path), str(report_path)])

    def sweep_aperture(self, divergences_mrad: Sequence[float]) -> CommandReport:
        """
        Fringe visibility and flux versus collection divergence.

        Each divergence sets both the dephasing (through the divergence-to-sigma
        calibration) and the collected pair flux (through the emission-cone
        calibration).
        """
        divergences = [float(d) for d in divergences_mrad]
        if any(later < earlier for earlier, later in zip(divergences, divergences[1:])):
            raise ConfigValidationError("divergence list must be monotone non-decreasing", divergences=divergences)
        collection = self.config.dephasing.collection()
        theta2 = math.radians(self.config.scan.sweep_theta2_deg)
        grid = self.config.scan.theta1_grid()

        rows = []
        for divergence in divergences:
            flux = collection_flux(divergence, collection)
            source = self.source(divergence_mrad=divergence, pair_rate_per_mw=flux)
            scan = run_fringe(source, theta2, grid, self.detection, workers=self.config.workers)
            fit = analysis.fit_fringe(scan)
            measured = self._measured_flux(fit, source)
            rows.append([divergence, source.coherence, fit.visibility, fit.sigma_v, flux, measured])
            logger.info(
                "Aperture point done",
                extra={
                    "extra_fields": {
                        "divergence_mrad": divergence,
                        "visibility": fit.visibility,
                        "flux": flux,
                        "rate": pair_rate(source),
                    }
                }
            )

        csv_path = write_csv(self._path("sweep_aperture.csv"), SWEEP_SCHEMA, SWEEP_COLUMNS, rows)
        entries = [("num_points", len(rows)), ("theta2_deg", self.config.scan.sweep_theta2_deg)]
        report_path = self._path("sweep_aperture_report.txt")
        write_report(report_path, entries)
        return CommandReport(command="sweep-aperture", entries=entries, artifacts=[str(csv_path), str(report_path)])

    def balance(self) -> CommandReport:
        """Solve the pump plates for beta = 1 at the configured target phase and verify."""
        pump = self.config.pump
        output, (hwp1, qwp1) = source_from_angles(
            self.params,
            pump.power_mw,
            target_phi=math.radians(pump.target_phi_deg),
        )
        prepared = prepare_pump(pump.power_mw, hwp1, qwp1)
        entries = [
            ("hwp1_deg", math.degrees(hwp1)),
            ("qwp1_deg", math.degrees(qwp1)),
            ("beta", output.beta),
            ("phi_deg", math.degrees(output.phi)),
            ("pump_phase_deg", math.degrees(prepared.phi_p)),
            ("usable_pump_mw", output.usable_pump_mw),
            ("usable_fraction", output.usable_fraction),
            ("classical_visibility", classical_visibility(prepared, self.params, self.sigma_phi())),
        ]
        report_path = self._path("balance_report.txt")
        write_report(report_path, entries)
        return CommandReport(command="balance", entries=entries, artifacts=[str(report_path)])
