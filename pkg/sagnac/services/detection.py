"""
Detection chain simulation: expected rates, Poisson sampling and accidental subtraction.

Every sampled record draws from its own generator, seeded from
(master seed, stream key, setting index) through numpy's SeedSequence, so a
scan gives identical counts whether its settings run sequentially or on a
thread pool.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from sagnac.core.errors import ConfigValidationError
from sagnac.core.logging import get_logger
from sagnac.models.detection import CountRecord, DetectionConfig, ExpectedRates, FringeScan
from sagnac.models.source import SourceOutput
from sagnac.services.polarization import joint_probability, marginal_probability

logger = get_logger(__name__)

FRINGE_STREAM = 1
CHSH_STREAM = 2

PUMP_POWER_TOLERANCE = 1e-9

ORTHOGONAL = math.pi / 2.0

DEFAULT_CHSH_ANGLES: Tuple[Tuple[float, float], ...] = (
    (0.0, 7.0 * math.pi / 8.0),
    (-math.pi / 4.0, 7.0 * math.pi / 8.0),
    (-math.pi / 4.0, 5.0 * math.pi / 8.0),
    (0.0, 5.0 * math.pi / 8.0),
)

CHSH_OUTCOMES: Tuple[Tuple[str, float, float], ...] = (
    ("++", 0.0, 0.0),
    ("+-", 0.0, ORTHOGONAL),
    ("-+", ORTHOGONAL, 0.0),
    ("--", ORTHOGONAL, ORTHOGONAL),
)


def pair_rate(source: SourceOutput) -> float:
    """
    Detected pair rate R (pairs/s).

    The per-mW flux is referenced to the pump entering the interferometer,
    before PBS losses, which is how detected flux is quoted for this source.
    """
    return source.pair_rate_per_mw * source.pump_mw


def expected_rates(
    state,
    theta1: float,
    theta2: float,
    source: SourceOutput,
    cfg: DetectionConfig,
) -> ExpectedRates:
    """
    Mean singles and true-coincidence rates at one analyzer setting.

    Uncorrelated singles add to each arm but never to the true coincidences.

    Raises:
        ConfigValidationError: If the detection pump power disagrees with the
            power the source was prepared with
    """
    if not math.isclose(cfg.pump_power_mw, source.pump_mw, rel_tol=PUMP_POWER_TOLERANCE):
        raise ConfigValidationError(
            "detection pump power does not match the source pump power",
            detection_pump_mw=cfg.pump_power_mw,
            source_pump_mw=source.pump_mw,
        )
    rate = pair_rate(source)
    rc = rate * joint_probability(state, theta1, theta2) * cfg.det_eff_1 * cfg.det_eff_2
    r1 = rate * marginal_probability(state, theta1, arm=1) * cfg.det_eff_1 + cfg.dark_rate_1
    r2 = rate * marginal_probability(state, theta2, arm=2) * cfg.det_eff_2 + cfg.dark_rate_2
    return ExpectedRates(theta1=theta1, theta2=theta2, r1=r1, r2=r2, rc=rc)


def accidental_rate(r1: float, r2: float, window: float) -> float:
    """Uncorrelated coincidences r1 * r2 * tau (counts/s)."""
    if r1 < 0.0 or r2 < 0.0 or window < 0.0:
        raise ValueError("rates and window must be non-negative")
    return r1 * r2 * window


def record_generator(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one setting, derived from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def sample_counts(
    rates: ExpectedRates,
    duration: float,
    rng: np.random.Generator,
    window: float,
    label: Optional[str] = None,
) -> CountRecord:
    """
    Draw Poisson singles and coincidences for one setting.

    The raw coincidence mean includes the accidental rate implied by the
    expected singles; the stored accidental estimate is recomputed from the
    sampled singles, as it would be in the lab.
    """
    if not duration > 0.0:
        raise ValueError(f"duration must be positive, got {duration}")
    singles_1 = int(rng.poisson(rates.r1 * duration))
    singles_2 = int(rng.poisson(rates.r2 * duration))
    coincidence_mean = (rates.rc + accidental_rate(rates.r1, rates.r2, window)) * duration
    coincidences = int(rng.poisson(coincidence_mean))
    estimate = accidental_rate(singles_1 / duration, singles_2 / duration, window) * duration
    return CountRecord(
        theta1=rates.theta1,
        theta2=rates.theta2,
        singles_1=singles_1,
        singles_2=singles_2,
        coincidences_raw=coincidences,
        accidental_estimate=estimate,
        duration=duration,
        label=label,
    )


def subtract_accidentals(rec: CountRecord) -> float:
    """Raw coincidences minus the accidental estimate; negative values are kept."""
    corrected = rec.coincidences_raw - rec.accidental_estimate
    if corrected < 0.0:
        logger.warning(
            "Accidental subtraction produced negative counts",
            extra={
                "extra_fields": {
                    "theta1": rec.theta1,
                    "theta2": rec.theta2,
                    "corrected": corrected,
                }
            }
        )
    return corrected


def _stream_key(theta2: float) -> int:
    """Non-negative integer key for a fringe, from theta2 in millidegrees."""
    return int(round(math.degrees(theta2) * 1000.0)) % 2**32


def _map_settings(task, count: int, workers: int) -> list:
    if workers <= 1:
        return [task(index) for index in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(count)))


def run_fringe(
    source: SourceOutput,
    theta2: float,
    theta1_grid: Sequence[float],
    cfg: DetectionConfig,
    workers: int = 1,
) -> FringeScan:
    """
    Simulate a coincidence fringe over `theta1_grid` at fixed `theta2`.

    Args:
        source: Source output (pure or dephased)
        theta2: Idler analyzer angle (rad)
        theta1_grid: Strictly increasing signal analyzer angles (rad)
        cfg: Detection configuration
        workers: Threads used to simulate settings

    Returns:
        FringeScan with one CountRecord per grid angle
    """
    grid = [float(theta) for theta in theta1_grid]
    stream = _stream_key(theta2)

    def simulate(index: int) -> CountRecord:
        rates = expected_rates(source.state, grid[index], theta2, source, cfg)
        rng = record_generator(cfg.rng_seed, FRINGE_STREAM, stream, index)
        return sample_counts(rates, cfg.integration_time, rng, cfg.coincidence_window)

    points = _map_settings(simulate, len(grid), workers)
    scan = FringeScan(theta2=theta2, points=points)

    logger.info(
        "Fringe scan simulated",
        extra={
            "extra_fields": {
                "theta2_deg": math.degrees(theta2),
                "num_points": len(points),
                "seed": cfg.rng_seed,
            }
        }
    )
    return scan


def chsh_settings(angle_set: Sequence[Tuple[float, float]]) -> List[Tuple[str, float, float]]:
    """The 16 labeled (label, theta1, theta2) settings, grouped by angle pair."""
    if len(angle_set) != 4:
        raise ValueError(f"CHSH needs four angle pairs, got {len(angle_set)}")
    return [
        (label, theta1 + shift1, theta2 + shift2)
        for theta1, theta2 in angle_set
        for label, shift1, shift2 in CHSH_OUTCOMES
    ]


def run_chsh(
    source: SourceOutput,
    cfg: DetectionConfig,
    angle_set: Sequence[Tuple[float, float]] = DEFAULT_CHSH_ANGLES,
    workers: int = 1,
) -> List[CountRecord]:
    """
    Simulate the 16 coincidence measurements of a CHSH test.

    Records come in groups of four per angle pair, labeled ++, +-, -+, --.
    """
    settings = chsh_settings(angle_set)

    def simulate(index: int) -> CountRecord:
        label, theta1, theta2 = settings[index]
        rates = expected_rates(source.state, theta1, theta2, source, cfg)
        rng = record_generator(cfg.rng_seed, CHSH_STREAM, index)
        return sample_counts(rates, cfg.integration_time, rng, cfg.coincidence_window, label=label)

    records = _map_settings(simulate, len(settings), workers)

    logger.info(
        "CHSH measurements simulated",
        extra={"extra_fields": {"num_records": len(records), "seed": cfg.rng_seed}}
    )
    return records
