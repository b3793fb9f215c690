"""
Polarization Sagnac source model.

Builds the biphoton state produced by the two counter-propagating
down-conversion paths, solves the pump preparation for a balanced output and
applies the wavefront dephasing channel that limits visibility at large
collection divergence.

Labeling: the V-pumped (clockwise) path exits as |H_s V_i> and the H-pumped
(counterclockwise) path exits as |V_s H_i> after its pi/2 rotation at HWP2,
so that beta = eta_H E_H / (eta_V E_V) and phi = theta_s + theta_i - theta_p - phi_p.
"""
import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy import optimize

from sagnac.core.errors import SolverError
from sagnac.core.logging import get_logger
from sagnac.models.polarization import BiphotonState, DensityState
from sagnac.models.source import (
    CollectionCalibration,
    DephasingCalibration,
    PumpField,
    SourceOutput,
    SourceParams,
)
from sagnac.services.polarization import as_density, half_wave_plate, quarter_wave_plate

logger = get_logger(__name__)

BALANCE_TOLERANCE = 1e-6
BALANCE_MAX_EVALUATIONS = 100
DEFAULT_BALANCE_GUESS = (math.pi / 8.0, math.pi / 4.0)


def wrap_phase(phase: float) -> float:
    """Reduce a phase to (-pi, pi]."""
    wrapped = math.pi - (math.pi - phase) % (2.0 * math.pi)
    # the modulo can round up to 2*pi for inputs just above pi
    return wrapped + 2.0 * math.pi if wrapped <= -math.pi else wrapped


def prepare_pump(input_power_mw: float, hwp1_angle: float, qwp1_angle: float) -> PumpField:
    """
    Transform H-polarized fiber output with HWP1 then QWP1.

    Args:
        input_power_mw: Pump power (mW)
        hwp1_angle: HWP1 fast-axis angle (rad)
        qwp1_angle: QWP1 fast-axis angle (rad)

    Returns:
        PumpField carrying the same total power
    """
    if not input_power_mw > 0.0:
        raise ValueError(f"input power must be positive, got {input_power_mw}")
    jones = np.array([math.sqrt(input_power_mw), 0.0], dtype=complex)
    optics = quarter_wave_plate(qwp1_angle) @ half_wave_plate(hwp1_angle)
    return PumpField.from_jones(optics.apply(jones))


def _path_gains(params: SourceParams) -> Tuple[float, float]:
    """Field gains of the H-pumped and V-pumped paths, PBS pump routing included."""
    gain_h = params.eta_h * math.sqrt(params.pbs_pump.t_h)
    gain_v = params.eta_v * math.sqrt(params.pbs_pump.r_v)
    return gain_h, gain_v


def _path_amplitudes(
    pump: PumpField,
    params: SourceParams,
    include_path_phase: bool = True,
) -> Tuple[complex, complex]:
    """
    Unnormalized amplitudes (a_HV, a_VH) at the PBS output.

    The propagation phase factors are evaluated separately from the waveplate
    phases. With k_p = k_s + k_i the two path sums are bitwise equal, so the
    relative phase carries no rounding from the large k*L products.
    """
    gain_h, gain_v = _path_gains(params)
    a_vh = gain_h * pump.e_h * complex(math.cos(params.theta_s + params.theta_i),
                                       math.sin(params.theta_s + params.theta_i))
    a_hv = gain_v * pump.e_v * complex(math.cos(params.theta_p), math.sin(params.theta_p))
    if include_path_phase:
        k_down = params.k_s + params.k_i
        path_h = params.k_p * params.l_a + k_down * params.l_b
        path_v = params.k_p * params.l_b + k_down * params.l_a
        a_vh *= complex(math.cos(path_h), math.sin(path_h))
        a_hv *= complex(math.cos(path_v), math.sin(path_v))
    return a_hv, a_vh


def sagnac_state(pump: PumpField, params: SourceParams) -> SourceOutput:
    """
    Combine the two down-conversion paths into the output biphoton state.

    Args:
        pump: Pump field entering the interferometer
        params: Interferometer parameters

    Returns:
        SourceOutput with a pure state, beta, phi and usable pump power

    Raises:
        ValueError: If neither path down-converts
    """
    a_hv, a_vh = _path_amplitudes(pump, params)
    if abs(a_hv) == 0.0 and abs(a_vh) == 0.0:
        raise ValueError("no down-conversion: both path amplitudes vanish")

    state = BiphotonState.from_amplitudes([0.0, a_hv, a_vh, 0.0])
    if abs(a_hv) == 0.0:
        beta, phi = math.inf, 0.0
    else:
        beta = abs(a_vh) / abs(a_hv)
        phi = wrap_phase(float(np.angle(a_vh * a_hv.conjugate())))

    pbs = params.pbs_pump
    usable = pbs.t_h * abs(pump.e_h) ** 2 + pbs.r_v * abs(pump.e_v) ** 2
    return SourceOutput(
        state=state,
        beta=beta,
        phi=phi,
        usable_pump_mw=usable,
        pump_mw=pump.power_mw,
        pair_rate_per_mw=params.pair_rate_per_mw,
    )


def _balance_seeds(params: SourceParams, target_phi: float) -> list[Tuple[float, float]]:
    """
    Initial guesses for the balance solve.

    The required pump polarization is known in closed form; its Stokes
    azimuth psi and ellipticity chi give QWP1 at psi and HWP1 at (psi + chi)/2.
    The fixed guess (pi/8, pi/4) (diagonal light) is kept as a fallback.
    """
    gain_h, gain_v = _path_gains(params)
    kappa = gain_h / gain_v
    delta = params.waveplate_phase - target_phi
    norm = 1.0 + kappa ** 2
    s1 = (1.0 - kappa ** 2) / norm
    s2 = 2.0 * kappa * math.cos(delta) / norm
    s3 = 2.0 * kappa * math.sin(delta) / norm
    psi = 0.5 * math.atan2(s2, s1)
    chi = 0.5 * math.asin(max(-1.0, min(1.0, s3)))
    return [(0.5 * (psi + chi), psi), DEFAULT_BALANCE_GUESS]


def balance_solve(
    params: SourceParams,
    target_phi: float,
    input_power_mw: float = 1.0,
) -> Tuple[float, float]:
    """
    Find HWP1/QWP1 angles giving beta = 1 and phi = target_phi.

    Solves a_VH exp(-i target_phi) = a_HV as two real equations in the two
    plate angles with MINPACK's hybrid Powell method, then verifies the
    result through `sagnac_state`.

    Args:
        params: Interferometer parameters
        target_phi: Desired relative phase (rad)
        input_power_mw: Pump power used for the round trip (mW)

    Returns:
        (hwp1_angle, qwp1_angle) in radians

    Raises:
        SolverError: If either path cannot down-convert or no seed converges
    """
    gain_h, gain_v = _path_gains(params)
    if gain_h <= 0.0 or gain_v <= 0.0:
        raise SolverError(
            "balance is impossible: a down-conversion path has zero gain",
            gain_h=gain_h,
            gain_v=gain_v,
        )

    rotation = complex(math.cos(target_phi), -math.sin(target_phi))

    def residual(angles: np.ndarray) -> np.ndarray:
        pump = prepare_pump(input_power_mw, angles[0], angles[1])
        a_hv, a_vh = _path_amplitudes(pump, params, include_path_phase=False)
        mismatch = (a_vh * rotation - a_hv) / math.sqrt(input_power_mw)
        return np.array([mismatch.real, mismatch.imag])

    seeds = _balance_seeds(params, target_phi)
    for seed in seeds:
        solution = optimize.root(
            residual,
            np.array(seed),
            method="hybr",
            options={"xtol": 1e-13, "maxfev": BALANCE_MAX_EVALUATIONS},
        )
        hwp1, qwp1 = (float(x) for x in solution.x)
        output = sagnac_state(prepare_pump(input_power_mw, hwp1, qwp1), params)
        beta_error = abs(output.beta - 1.0)
        phi_error = abs(wrap_phase(output.phi - target_phi))

        logger.debug(
            "Balance attempt finished",
            extra={
                "extra_fields": {
                    "seed": list(seed),
                    "evaluations": int(solution.nfev),
                    "beta_error": beta_error,
                    "phi_error": phi_error,
                }
            }
        )

        if beta_error <= BALANCE_TOLERANCE and phi_error <= BALANCE_TOLERANCE:
            logger.info(
                "Pump balance solved",
                extra={
                    "extra_fields": {
                        "hwp1_rad": hwp1,
                        "qwp1_rad": qwp1,
                        "beta": output.beta,
                        "phi": output.phi,
                    }
                }
            )
            return hwp1, qwp1

    raise SolverError(
        "balance solver did not converge",
        target_phi=target_phi,
        max_evaluations=BALANCE_MAX_EVALUATIONS,
    )


def coherence_factor(sigma_phi: float) -> float:
    """d = exp(-sigma^2 / 2) for a Gaussian phase spread."""
    return math.exp(-0.5 * sigma_phi ** 2)


def sigma_for_coherence(coherence: float) -> float:
    """Inverse of `coherence_factor` for d in (0, 1]."""
    if not 0.0 < coherence <= 1.0:
        raise ValueError(f"coherence must lie in (0, 1], got {coherence}")
    return math.sqrt(-2.0 * math.log(coherence))


def apply_dephasing(
    state: Union[BiphotonState, DensityState],
    sigma_phi: float,
) -> DensityState:
    """
    Average the state over a Gaussian spread of the HV/VH relative phase.

    Only the |HV><VH| coherence (and its conjugate) is damped; populations are
    untouched.
    """
    if not sigma_phi >= 0.0:
        raise ValueError(f"sigma_phi must be non-negative, got {sigma_phi}")
    rho = np.array(as_density(state).rho)
    damping = coherence_factor(sigma_phi) if math.isfinite(sigma_phi) else 0.0
    rho[1, 2] *= damping
    rho[2, 1] *= damping
    return DensityState(rho=rho)


def dephase_output(output: SourceOutput, sigma_phi: float) -> SourceOutput:
    """Return a copy of `output` whose state went through the dephasing channel."""
    return output.model_copy(
        update={
            "state": apply_dephasing(output.state, sigma_phi),
            "coherence": output.coherence * coherence_factor(sigma_phi),
        }
    )


def aperture_to_sigma(divergence_mrad: float, calibration: DephasingCalibration) -> float:
    """Phase spread collected through an iris of the given full divergence."""
    if not divergence_mrad >= 0.0:
        raise ValueError(f"divergence must be non-negative, got {divergence_mrad}")
    return max(0.0, calibration.offset + calibration.slope * divergence_mrad)


def calibrate_dephasing(
    anchor_a: Tuple[float, float],
    anchor_b: Tuple[float, float],
) -> DephasingCalibration:
    """
    Line through two (divergence_mrad, coherence) anchor points in sigma space.

    Raises:
        ValueError: If the anchors share a divergence or imply a negative slope
    """
    (div_a, d_a), (div_b, d_b) = anchor_a, anchor_b
    if div_a == div_b:
        raise ValueError("calibration anchors need distinct divergences")
    sigma_a, sigma_b = sigma_for_coherence(d_a), sigma_for_coherence(d_b)
    slope = (sigma_b - sigma_a) / (div_b - div_a)
    return DephasingCalibration(slope=slope, offset=sigma_a - slope * div_a)


def collection_flux(divergence_mrad: float, calibration: CollectionCalibration) -> float:
    """Detected pairs/s/mW collected within a full divergence angle."""
    if not divergence_mrad >= 0.0:
        raise ValueError(f"divergence must be non-negative, got {divergence_mrad}")
    exponent = divergence_mrad ** 2 / (2.0 * calibration.width_mrad ** 2)
    return calibration.flux_limit * -math.expm1(-exponent)


def calibrate_collection(
    anchor_a: Tuple[float, float],
    anchor_b: Tuple[float, float],
) -> CollectionCalibration:
    """
    Fit the emission-cone width and limiting flux to two (divergence_mrad, flux) anchors.

    Raises:
        ValueError: If the flux ratio is outside what a Gaussian cone can produce
    """
    (div_a, flux_a), (div_b, flux_b) = sorted([anchor_a, anchor_b])
    if div_a <= 0.0 or div_a == div_b:
        raise ValueError("collection anchors need distinct positive divergences")
    ratio = flux_b / flux_a
    ratio_limit = (div_b / div_a) ** 2
    if not 1.0 < ratio < ratio_limit:
        raise ValueError(f"flux ratio {ratio:.4f} must lie in (1, {ratio_limit:.4f})")

    def captured(divergence: float, width: float) -> float:
        return -math.expm1(-divergence ** 2 / (2.0 * width ** 2))

    def mismatch(width: float) -> float:
        return captured(div_b, width) / captured(div_a, width) - ratio

    width = optimize.brentq(mismatch, 0.05 * div_a, 1e3 * div_b, xtol=1e-12, rtol=1e-14)
    return CollectionCalibration(flux_limit=flux_a / captured(div_a, width), width_mrad=width)


def classical_visibility(
    pump: PumpField,
    params: SourceParams,
    sigma_phi: float = 0.0,
) -> float:
    """
    Classical fringe visibility of the interferometer measured with pump light.

    With HWP2 on axis the two circulating pump components recombine at the PBS;
    their interference contrast is limited by the power imbalance and by the
    same wavefront phase spread that dephases the biphoton.
    """
    a = math.sqrt(params.pbs_pump.t_h) * abs(pump.e_h)
    b = math.sqrt(params.pbs_pump.r_v) * abs(pump.e_v)
    if a == 0.0 and b == 0.0:
        return 0.0
    return 2.0 * a * b / (a ** 2 + b ** 2) * coherence_factor(sigma_phi)


def source_from_angles(
    params: SourceParams,
    input_power_mw: float,
    hwp1_angle: Optional[float] = None,
    qwp1_angle: Optional[float] = None,
    target_phi: Optional[float] = None,
) -> Tuple[SourceOutput, Tuple[float, float]]:
    """
    Prepare the pump from explicit plate angles or by balancing to `target_phi`.

    Returns:
        (pure SourceOutput, (hwp1_angle, qwp1_angle))
    """
    if hwp1_angle is None or qwp1_angle is None:
        if target_phi is None:
            raise ValueError("give both plate angles or a target phase")
        hwp1_angle, qwp1_angle = balance_solve(params, target_phi, input_power_mw)
    pump = prepare_pump(input_power_mw, hwp1_angle, qwp1_angle)
    return sagnac_state(pump, params), (hwp1_angle, qwp1_angle)
