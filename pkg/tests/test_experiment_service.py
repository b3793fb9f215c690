import math

import pytest

from sagnac.core.config import RunConfig
from sagnac.services.experiment_service import ExperimentService
from sagnac.services.source_model import coherence_factor


def service(tmp_path, **overrides) -> ExperimentService:
    return ExperimentService(RunConfig(output={"directory": str(tmp_path)}, **overrides))


def test_explicit_coherence_takes_precedence(tmp_path):
    svc = service(tmp_path, dephasing={"coherence": 0.9685})
    assert svc.source().coherence == pytest.approx(0.9685, abs=1e-12)


def test_default_divergence_uses_calibration(tmp_path):
    svc = service(tmp_path)
    assert coherence_factor(svc.sigma_phi()) == pytest.approx(0.968, abs=1e-12)
    assert coherence_factor(svc.sigma_phi(30.0)) == pytest.approx(0.930, abs=1e-12)


def test_explicit_calibration_with_zero_offset(tmp_path):
    svc = service(tmp_path, dephasing={"slope": 0.01, "offset": 0.0})
    assert svc.source(divergence_mrad=0.0).coherence == 1.0


def test_explicit_plate_angles(tmp_path):
    svc = service(tmp_path, pump={"auto_balance": False, "hwp1_deg": 22.5, "qwp1_deg": 45.0})
    output, (hwp1, qwp1) = svc.pure_source()
    assert (hwp1, qwp1) == (math.radians(22.5), math.radians(45.0))
    assert output.beta == pytest.approx(math.sqrt(0.73 / 0.80), abs=1e-12)


def test_balance_report_entries(tmp_path):
    report = service(tmp_path).balance()
    assert report.value("beta") == pytest.approx(1.0, abs=1e-6)
    assert report.value("usable_fraction") == pytest.approx(report.value("usable_pump_mw") / 3.28)
    assert 0.0 < report.value("classical_visibility") < 1.0
    assert (tmp_path / "balance_report.txt").is_file()


def test_pair_rate_override_keeps_state(tmp_path):
    svc = service(tmp_path)
    bright = svc.source(pair_rate_per_mw=20000.0)
    assert bright.pair_rate_per_mw == 20000.0
    assert bright.beta == pytest.approx(svc.source().beta)
