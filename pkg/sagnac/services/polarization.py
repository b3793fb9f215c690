"""
Jones calculus for single photons and Born-rule probabilities for photon pairs.

Sign convention: a retarder with retardance G and fast axis at angle t from H is
R(t) diag(1, exp(iG)) R(-t), with R the real rotation matrix. Any consistent
choice gives the same detection probabilities. Angles are in radians.
"""
from typing import Union

import numpy as np

from sagnac.core.errors import StateValidationError
from sagnac.models.polarization import BiphotonState, DensityState, PolarizationOperator

State = Union[BiphotonState, DensityState]


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def waveplate(retardance: float, axis_angle: float) -> PolarizationOperator:
    """
    Jones operator of a linear retarder.

    Args:
        retardance: Phase delay of the slow axis (rad); pi for a HWP, pi/2 for a QWP
        axis_angle: Fast-axis angle from H (rad)

    Returns:
        Unitary PolarizationOperator
    """
    retarder = np.diag([1.0, np.exp(1j * retardance)])
    return PolarizationOperator(m=rotation(axis_angle) @ retarder @ rotation(-axis_angle))


def half_wave_plate(axis_angle: float) -> PolarizationOperator:
    return waveplate(np.pi, axis_angle)


def quarter_wave_plate(axis_angle: float) -> PolarizationOperator:
    return waveplate(np.pi / 2.0, axis_angle)


def analyzer_vector(angle: float) -> np.ndarray:
    """Jones vector of linear polarization at `angle` from H."""
    return np.array([np.cos(angle), np.sin(angle)], dtype=complex)


def projector(angle: float) -> PolarizationOperator:
    """Rank-1 projector onto linear polarization at `angle` from H."""
    vector = analyzer_vector(angle)
    return PolarizationOperator(m=np.outer(vector, vector.conj()))


def _require_normalized(state: State) -> None:
    if not state.is_normalized():
        raise StateValidationError(
            "state is not normalized",
            norm=state.norm_squared if isinstance(state, BiphotonState) else state.trace,
        )


def as_density(state: State) -> DensityState:
    if isinstance(state, DensityState):
        return state
    return DensityState.from_pure(state)


def joint_probability(state: State, theta1: float, theta2: float) -> float:
    """
    Probability that both photons pass linear analyzers at theta1 (signal) and theta2 (idler).

    Raises:
        StateValidationError: If the state is not normalized
    """
    _require_normalized(state)
    if isinstance(state, BiphotonState):
        bra = np.kron(analyzer_vector(theta1), analyzer_vector(theta2)).conj()
        probability = abs(bra @ state.amp) ** 2
    else:
        joint = np.kron(projector(theta1).m, projector(theta2).m)
        probability = np.real(np.trace(joint @ state.rho))
    return float(min(max(probability, 0.0), 1.0))


def marginal_probability(state: State, theta: float, arm: int) -> float:
    """
    Single-arm probability of passing an analyzer at `theta`.

    Args:
        state: Two-photon state
        theta: Analyzer angle (rad)
        arm: 1 for the signal photon, 2 for the idler photon
    """
    _require_normalized(state)
    if arm not in (1, 2):
        raise ValueError(f"arm must be 1 or 2, got {arm}")
    single = projector(theta).m
    operator = np.kron(single, np.eye(2)) if arm == 1 else np.kron(np.eye(2), single)
    probability = np.real(np.trace(operator @ as_density(state).rho))
    return float(min(max(probability, 0.0), 1.0))


def correlation(state: State, theta1: float, theta2: float) -> float:
    """Analytic E(theta1, theta2) = P++ - P+- - P-+ + P--."""
    orthogonal = np.pi / 2.0
    return (
        joint_probability(state, theta1, theta2)
        - joint_probability(state, theta1, theta2 + orthogonal)
        - joint_probability(state, theta1 + orthogonal, theta2)
        + joint_probability(state, theta1 + orthogonal, theta2 + orthogonal)
    )


def fidelity(a: BiphotonState, b: BiphotonState) -> float:
    """|<a|b>|^2 between two normalized pure states."""
    _require_normalized(a)
    _require_normalized(b)
    overlap = np.vdot(a.amp, b.amp)
    return float(min(abs(overlap) ** 2, 1.0))
