import math
from typing import Sequence

import numpy as np
import pytest

from sagnac.models.detection import CountRecord, DetectionConfig, FringeScan
from sagnac.models.polarization import BiphotonState
from sagnac.models.source import PBSPumpTransfer, SourceParams
from sagnac.services.analysis import fringe_model


@pytest.fixture
def singlet() -> BiphotonState:
    return BiphotonState.singlet()


@pytest.fixture
def published_params() -> SourceParams:
    return SourceParams()


@pytest.fixture
def symmetric_params() -> SourceParams:
    return SourceParams(pbs_pump=PBSPumpTransfer(t_h=0.8, leak_h=0.05, r_v=0.8, leak_v=0.05))


@pytest.fixture
def detection() -> DetectionConfig:
    return DetectionConfig()


@pytest.fixture
def degree_grid() -> list:
    """theta1 = 0, 10, ..., 350 degrees."""
    return [math.radians(10.0 * k) for k in range(36)]


def noiseless_scan(
    theta1: Sequence[float],
    theta2: float,
    c0: float,
    visibility: float,
    phase: float,
    duration: float = 40.0,
) -> FringeScan:
    """
    Scan whose corrected counts equal the fringe model exactly.

    Raw counts are integers, so the fractional part is carried by the
    accidental estimate.
    """
    points = []
    for theta, value in zip(theta1, fringe_model(np.asarray(theta1), c0, visibility, phase)):
        raw = int(math.ceil(value))
        points.append(CountRecord(
            theta1=float(theta),
            theta2=theta2,
            singles_1=100000,
            singles_2=100000,
            coincidences_raw=raw,
            accidental_estimate=raw - float(value),
            duration=duration,
        ))
    return FringeScan(theta2=theta2, points=points)


@pytest.fixture
def make_noiseless_scan():
    return noiseless_scan
