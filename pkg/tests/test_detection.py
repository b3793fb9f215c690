import math

import numpy as np
import pytest

from sagnac.core.errors import ConfigValidationError
from sagnac.models.detection import CountRecord, DetectionConfig, ExpectedRates, FringeScan
from sagnac.models.polarization import BiphotonState
from sagnac.models.source import SourceOutput
from sagnac.services.detection import (
    CHSH_OUTCOMES,
    DEFAULT_CHSH_ANGLES,
    accidental_rate,
    chsh_settings,
    expected_rates,
    pair_rate,
    record_generator,
    run_chsh,
    run_fringe,
    sample_counts,
    subtract_accidentals,
)
from sagnac.services.source_model import apply_dephasing


def singlet_source(state, pair_rate_per_mw: float = 5000.0, coherence: float = 1.0) -> SourceOutput:
    return SourceOutput(
        state=state,
        beta=1.0,
        phi=math.pi,
        usable_pump_mw=0.765 * 3.28,
        pump_mw=3.28,
        pair_rate_per_mw=pair_rate_per_mw,
        coherence=coherence,
    )


def record(raw: int, estimate: float) -> CountRecord:
    return CountRecord(
        theta1=0.0,
        theta2=0.0,
        singles_1=1000,
        singles_2=1000,
        coincidences_raw=raw,
        accidental_estimate=estimate,
        duration=1.0,
    )


@pytest.mark.parametrize("r1, r2, window, expected", [
    (1e5, 1e5, 1e-9, 10.0),
    (0.0, 3e4, 1e-9, 0.0),
    (5e4, 2e4, 1e-9, 1.0),
])
def test_accidental_rate(r1, r2, window, expected):
    assert accidental_rate(r1, r2, window) == pytest.approx(expected, rel=1e-12)


def test_default_singles_reproduce_quoted_accidental_level(singlet, detection):
    rates = expected_rates(singlet, math.radians(135.0), math.radians(45.0), singlet_source(singlet), detection)
    assert rates.r1 == pytest.approx(1e5, rel=1e-3)
    assert accidental_rate(rates.r1, rates.r2, detection.coincidence_window) == pytest.approx(10.0, rel=2e-3)


def test_pair_rate_uses_input_pump_power(singlet):
    assert pair_rate(singlet_source(singlet)) == pytest.approx(5000.0 * 3.28)


def test_peak_coincidences_of_singlet(singlet, detection):
    rates = expected_rates(singlet, math.radians(135.0), math.radians(45.0), singlet_source(singlet), detection)
    assert rates.rc == pytest.approx(0.5 * 5000.0 * 3.28, rel=1e-12)


def test_parallel_analyzers_on_singlet_have_no_true_coincidences(singlet, detection):
    for theta in np.linspace(0.0, math.pi, 7):
        assert expected_rates(singlet, theta, theta, singlet_source(singlet), detection).rc == pytest.approx(0.0, abs=1e-9)


def test_singlet_singles_do_not_depend_on_theta1(singlet, detection):
    source = singlet_source(singlet)
    singles = [expected_rates(singlet, theta, 0.3, source, detection).r1 for theta in np.linspace(0, math.pi, 25)]
    assert max(singles) - min(singles) <= 1e-12 * max(singles)


def test_true_coincidences_never_exceed_singles(singlet):
    cfg = DetectionConfig(det_eff_1=0.6, det_eff_2=0.4, dark_rate_1=0.0, dark_rate_2=0.0)
    rho = apply_dephasing(singlet, 0.8)
    source = singlet_source(rho)
    rng = np.random.default_rng(41)
    for theta1, theta2 in rng.uniform(-math.pi, math.pi, size=(100, 2)):
        rates = expected_rates(rho, theta1, theta2, source, cfg)
        assert rates.rc <= min(rates.r1, rates.r2) + 1e-9


def test_zero_rate_gives_zero_counts():
    rates = ExpectedRates(theta1=0.0, theta2=0.0, r1=0.0, r2=0.0, rc=0.0)
    for seed in range(10):
        rec = sample_counts(rates, 40.0, record_generator(seed, 1), 1e-9)
        assert rec.singles_1 == rec.singles_2 == rec.coincidences_raw == 0
        assert rec.accidental_estimate == 0.0


def test_large_mean_within_five_sigma():
    mean = 1e6
    rates = ExpectedRates(theta1=0.0, theta2=0.0, r1=mean, r2=mean, rc=mean)
    for seed in range(100):
        rec = sample_counts(rates, 1.0, record_generator(seed, 1), 0.0)
        for value in (rec.singles_1, rec.singles_2, rec.coincidences_raw):
            assert abs(value - mean) <= 5.0 * math.sqrt(mean)


def test_fixed_seed_gives_identical_record():
    rates = ExpectedRates(theta1=0.1, theta2=0.2, r1=1e5, r2=9e4, rc=8000.0)
    first = sample_counts(rates, 40.0, record_generator(7, 1, 2, 3), 1e-9)
    second = sample_counts(rates, 40.0, record_generator(7, 1, 2, 3), 1e-9)
    assert first == second


def test_accidental_estimate_comes_from_sampled_singles():
    rates = ExpectedRates(theta1=0.0, theta2=0.0, r1=1e5, r2=1e5, rc=0.0)
    rec = sample_counts(rates, 40.0, record_generator(3, 1), 1e-9)
    assert rec.accidental_estimate == pytest.approx(rec.singles_1 * rec.singles_2 * 1e-9 / 40.0, rel=1e-12)


@pytest.mark.parametrize("raw, estimate, expected", [
    (410, 10.0, 400.0),
    (0, 0.0, 0.0),
    (3, 5.0, -2.0),
])
def test_subtract_accidentals(raw, estimate, expected):
    assert subtract_accidentals(record(raw, estimate)) == pytest.approx(expected)


def test_run_fringe_is_deterministic_and_thread_independent(singlet, detection, degree_grid):
    source = singlet_source(singlet)
    sequential = run_fringe(source, math.radians(46.0), degree_grid, detection, workers=1)
    repeated = run_fringe(source, math.radians(46.0), degree_grid, detection, workers=1)
    threaded = run_fringe(source, math.radians(46.0), degree_grid, detection, workers=4)
    assert sequential == repeated == threaded
    assert isinstance(sequential, FringeScan)
    assert len(sequential.points) == 36


def test_fringe_streams_differ_between_theta2(singlet, detection, degree_grid):
    source = singlet_source(singlet)
    a = run_fringe(source, math.radians(45.0), degree_grid, detection)
    b = run_fringe(source, math.radians(45.0) + math.radians(180.0), degree_grid, detection)
    assert [p.singles_1 for p in a.points] != [p.singles_1 for p in b.points]


def test_fringe_scan_rejects_unsorted_grid():
    points = [record(10, 0.0).model_copy(update={"theta1": float(k % 3)}) for k in range(8)]
    with pytest.raises(ValueError):
        FringeScan(theta2=0.0, points=points)


def test_fringe_scan_needs_eight_points():
    points = [record(10, 0.0).model_copy(update={"theta1": 0.1 * k}) for k in range(7)]
    with pytest.raises(ValueError):
        FringeScan(theta2=0.0, points=points)


def test_chsh_settings_labels_and_angles():
    settings = chsh_settings(DEFAULT_CHSH_ANGLES)
    assert len(settings) == 16
    assert [label for label, _, _ in settings[:4]] == ["++", "+-", "-+", "--"]
    label, theta1, theta2 = settings[0]
    assert (theta1, theta2) == DEFAULT_CHSH_ANGLES[0]
    _, theta1, theta2 = settings[1]
    assert theta1 == DEFAULT_CHSH_ANGLES[0][0]
    assert theta2 == pytest.approx(DEFAULT_CHSH_ANGLES[0][1] + math.pi / 2.0)


def test_run_chsh_records(singlet, detection):
    records = run_chsh(singlet_source(singlet), detection, workers=2)
    assert len(records) == 16
    assert [rec.label for rec in records[:4]] == ["++", "+-", "-+", "--"]
    assert records == run_chsh(singlet_source(singlet), detection)


def test_detection_pump_power_must_match_source(singlet):
    cfg = DetectionConfig(pump_power_mw=100.0)
    with pytest.raises(ConfigValidationError):
        expected_rates(singlet, 1.0, 0.2, singlet_source(singlet), cfg)
    with pytest.raises(ConfigValidationError):
        run_chsh(singlet_source(singlet), cfg)


def test_four_outcome_rates_sum_to_detected_pair_rate(singlet):
    cfg = DetectionConfig(det_eff_1=0.7, det_eff_2=0.6)
    rng = np.random.default_rng(23)
    states = [singlet, apply_dephasing(singlet, 0.9)]
    states += [BiphotonState.from_amplitudes(rng.normal(size=4) + 1j * rng.normal(size=4)) for _ in range(5)]
    for state in states:
        source = singlet_source(state)
        expected = pair_rate(source) * 0.7 * 0.6
        for theta1, theta2 in rng.uniform(-math.pi, math.pi, size=(20, 2)):
            total = sum(
                expected_rates(state, theta1 + shift1, theta2 + shift2, source, cfg).rc
                for _, shift1, shift2 in CHSH_OUTCOMES
            )
            assert total == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("theta1, theta2", [(0.5, 1.7), (math.radians(135.0), math.radians(45.0)), (0.0, 0.0)])
def test_sampled_means_converge_to_expected_counts(singlet, detection, theta1, theta2):
    rates = expected_rates(singlet, theta1, theta2, singlet_source(singlet), detection)
    duration = 1.0
    seeds = 400
    records = [
        sample_counts(rates, duration, record_generator(seed, 9), detection.coincidence_window)
        for seed in range(seeds)
    ]
    expected = {
        "coincidences_raw": (rates.rc + accidental_rate(rates.r1, rates.r2, detection.coincidence_window)) * duration,
        "singles_1": rates.r1 * duration,
        "singles_2": rates.r2 * duration,
    }
    for field, mean in expected.items():
        empirical = np.mean([getattr(rec, field) for rec in records])
        assert abs(empirical - mean) <= 5.0 * math.sqrt(mean) / math.sqrt(seeds)
