"""
Fringe fitting, visibility, CHSH correlations and brightness normalization.
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from sagnac.core.errors import FitError
from sagnac.core.logging import get_logger
from sagnac.models.analysis import CHSHResult, FitResult
from sagnac.models.detection import CountRecord, FringeScan
from sagnac.services.detection import CHSH_OUTCOMES, DEFAULT_CHSH_ANGLES
from sagnac.services.detection import subtract_accidentals
from sagnac.services.polarization import correlation

logger = get_logger(__name__)

FIT_MAX_EVALUATIONS = 200
PHASE_GRID_SIZE = 16
MIN_DISTINCT_ANGLES = 4
GRADIENT_TOLERANCE = 1e-8
CHSH_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


def visibility(c_max: float, c_min: float) -> float:
    """(C_max - C_min) / (C_max + C_min)."""
    if c_max + c_min == 0.0:
        raise ValueError("visibility undefined for zero counts")
    if c_min < 0.0 or c_max < c_min:
        raise ValueError(f"need c_max >= c_min >= 0, got ({c_max}, {c_min})")
    return (c_max - c_min) / (c_max + c_min)


def corrected_counts(scan: FringeScan) -> np.ndarray:
    return np.array([subtract_accidentals(point) for point in scan.points])


def extrema_visibility(scan: FringeScan) -> float:
    """Visibility from the largest and smallest corrected counts, the minimum floored at zero."""
    counts = corrected_counts(scan)
    c_max = float(np.max(counts))
    if c_max <= 0.0:
        return 0.0
    return visibility(c_max, max(float(np.min(counts)), 0.0))


def fringe_model(theta1, c0: float, visibility_: float, phase_offset: float):
    """C(theta1) = c0 [1 + V cos(2 (theta1 - phase_offset))]."""
    return c0 * (1.0 + visibility_ * np.cos(2.0 * (np.asarray(theta1) - phase_offset)))


def _model_jacobian(theta: np.ndarray, c0: float, vis: float, phase: float) -> np.ndarray:
    """Columns d model / d (c0, V, phase)."""
    argument = 2.0 * (theta - phase)
    return np.column_stack([
        1.0 + vis * np.cos(argument),
        c0 * np.cos(argument),
        2.0 * c0 * vis * np.sin(argument),
    ])


def fit_fringe(scan: FringeScan, fix_visibility: Optional[float] = None) -> FitResult:
    """
    Poisson-weighted least-squares fit of a two-photon polarization fringe.

    Residuals are (C_i - model_i) / sqrt(max(C_i, 1)) on accidental-corrected
    counts. Starting values come from the data mean and extrema and the best of
    a coarse 16-point phase grid; the minimization is Levenberg-Marquardt with
    an analytic Jacobian. Uncertainties are the square roots of the diagonal of
    (J^T J)^-1 at the optimum (no chi-square rescaling).

    Convergence is MINPACK's own (status > 0 with finite parameters). The
    gradient norm of the objective in scaled parameters (c0 divided by the
    data mean) is then compared with 1e-8 * max(1, sqrt(chi2)); exceeding it
    logs a warning and is reported in `FitResult.gradient_norm` rather than
    failing the fit.

    Args:
        scan: Fringe scan to fit
        fix_visibility: Hold V at this value instead of fitting it

    Returns:
        FitResult with V folded into [0, 1] and the phase folded into [0, pi)

    Raises:
        FitError: If the scan has too few distinct angles or the fit does not converge
    """
    theta = np.array(scan.theta1, dtype=float)
    counts = corrected_counts(scan)
    weights = 1.0 / np.sqrt(np.maximum(counts, 1.0))

    distinct = np.unique(np.round(np.mod(theta, np.pi), 9))
    if len(distinct) < MIN_DISTINCT_ANGLES:
        raise FitError(
            "scan does not constrain the fringe model",
            distinct_angles=int(len(distinct)),
        )

    mean = float(np.mean(counts))
    if mean <= 0.0:
        raise FitError("fringe has no positive signal", mean_counts=mean)
    scale = mean

    if fix_visibility is None:
        c_max, c_min = float(np.max(counts)), max(float(np.min(counts)), 0.0)
        vis_guess = min(max(visibility(c_max, c_min), 0.0), 1.0)
        free = [True, True, True]
    else:
        if not 0.0 <= fix_visibility <= 1.0:
            raise ValueError(f"fixed visibility must lie in [0, 1], got {fix_visibility}")
        vis_guess = fix_visibility
        free = [True, False, fix_visibility > 0.0]

    phases = np.arange(PHASE_GRID_SIZE) * np.pi / PHASE_GRID_SIZE
    costs = [
        np.sum((weights * (counts - fringe_model(theta, mean, vis_guess, phase))) ** 2)
        for phase in phases
    ]
    start = np.array([1.0, vis_guess, phases[int(np.argmin(costs))]])
    free_index = np.flatnonzero(free)

    def unpack(x: np.ndarray) -> np.ndarray:
        params = start.copy()
        params[free_index] = x
        return params

    def residuals(x: np.ndarray) -> np.ndarray:
        p = unpack(x)
        return weights * (counts - fringe_model(theta, scale * p[0], p[1], p[2]))

    def jacobian(x: np.ndarray) -> np.ndarray:
        p = unpack(x)
        columns = _model_jacobian(theta, scale * p[0], p[1], p[2])
        columns[:, 0] *= scale
        return -weights[:, None] * columns[:, free_index]

    result = optimize.least_squares(
        residuals,
        start[free_index],
        jac=jacobian,
        method="lm",
        ftol=1e-14,
        xtol=1e-14,
        gtol=1e-14,
        max_nfev=FIT_MAX_EVALUATIONS,
    )
    if result.status <= 0 or not np.all(np.isfinite(result.x)):
        raise FitError(
            "fringe fit did not converge",
            status=int(result.status),
            evaluations=int(result.nfev),
        )

    c0_scaled, vis, phase = unpack(result.x)
    jac = jacobian(result.x)
    gradient_norm = float(np.linalg.norm(jac.T @ result.fun))
    if gradient_norm > GRADIENT_TOLERANCE * max(1.0, math.sqrt(2.0 * result.cost)):
        logger.warning(
            "Fringe fit stopped with a non-negligible gradient",
            extra={"extra_fields": {"gradient_norm": gradient_norm}}
        )

    sigmas = np.zeros(3)
    phase_degenerate = not free[2]
    column_norms = np.linalg.norm(jac, axis=0)
    usable = [
        position for position, index in enumerate(free_index)
        if not (index == 2 and column_norms[position] <= 1e-12 * max(1.0, column_norms.max()))
    ]
    if len(usable) < len(free_index):
        phase_degenerate = True
    curvature = jac[:, usable].T @ jac[:, usable]
    covariance = np.linalg.pinv(curvature)
    for position, variance in zip(usable, np.diag(covariance)):
        sigmas[free_index[position]] = math.sqrt(max(float(variance), 0.0))
    sigmas[0] *= scale
    if phase_degenerate or sigmas[2] > np.pi / 2.0:
        phase_degenerate = True
        sigmas[2] = math.inf

    # a negative amplitude is the same fringe shifted by a quarter period
    if vis < 0.0:
        vis, phase = -vis, phase + np.pi / 2.0
    vis = min(vis, 1.0)

    dof = len(counts) - len(free_index)
    chi2 = 2.0 * result.cost
    fit = FitResult(
        c0=scale * c0_scaled,
        visibility=vis,
        phase_offset=float(np.mod(phase, np.pi)),
        sigma_c0=float(sigmas[0]),
        sigma_v=float(sigmas[1]),
        sigma_phase=float(sigmas[2]),
        chi2_per_dof=chi2 / dof if dof > 0 else 0.0,
        residuals=[float(r) for r in result.fun],
        gradient_norm=gradient_norm,
        phase_degenerate=phase_degenerate,
        extrema_visibility=extrema_visibility(scan),
    )

    if phase_degenerate:
        logger.warning(
            "Fringe phase is unconstrained",
            extra={"extra_fields": {"visibility": fit.visibility, "sigma_v": fit.sigma_v}}
        )
    logger.info(
        "Fringe fitted",
        extra={
            "extra_fields": {
                "theta2_deg": math.degrees(scan.theta2),
                "visibility": fit.visibility,
                "sigma_v": fit.sigma_v,
                "chi2_per_dof": fit.chi2_per_dof,
                "evaluations": int(result.nfev),
            }
        }
    )
    return fit


def chsh_e(
    counts: Sequence[float],
    variances: Optional[Sequence[float]] = None,
) -> Tuple[float, float]:
    """
    Correlation E from the four coincidence counts (C++, C+-, C-+, C--).

    sigma_E is first-order propagation, sigma_E^2 = sum_k (dE/dC_k)^2 var_k with
    dE/dC_k = (s_k - E) / N. Variances default to the counts themselves.

    Raises:
        ValueError: If the counts sum to zero or less
    """
    values = np.asarray(counts, dtype=float)
    if values.shape != (4,):
        raise ValueError("chsh_e needs four counts")
    total = float(np.sum(values))
    if total <= 0.0:
        raise ValueError("correlation undefined for zero total counts")
    e = float(np.dot(CHSH_SIGNS, values)) / total
    var = np.maximum(values, 0.0) if variances is None else np.asarray(variances, dtype=float)
    derivatives = (CHSH_SIGNS - e) / total
    return e, float(math.sqrt(np.sum(derivatives ** 2 * var)))


def accidental_variance(rec: CountRecord) -> float:
    """
    Variance of the accidental estimate propagated from the sampled singles.

    The estimate is s1 s2 tau / T, so var = est^2 (1/s1 + 1/s2).
    """
    if rec.singles_1 == 0 or rec.singles_2 == 0:
        return 0.0
    return rec.accidental_estimate ** 2 * (1.0 / rec.singles_1 + 1.0 / rec.singles_2)


def chsh_e_from_records(records: Sequence[CountRecord]) -> Tuple[float, float, float]:
    """
    (E, sigma_E including accidental variance, sigma_E from raw counts only).

    Records must be ordered ++, +-, -+, --.
    """
    labels = [rec.label for rec in records]
    expected = [label for label, _, _ in CHSH_OUTCOMES]
    if labels != expected:
        raise ValueError(f"records must be labeled {expected}, got {labels}")
    corrected = [subtract_accidentals(rec) for rec in records]
    raw_var = [float(rec.coincidences_raw) for rec in records]
    full_var = [raw + accidental_variance(rec) for raw, rec in zip(raw_var, records)]
    e, sigma_full = chsh_e(corrected, full_var)
    _, sigma_raw = chsh_e(corrected, raw_var)
    return e, sigma_full, sigma_raw


def chsh_s(
    e: Sequence[Tuple[float, float]],
    sigma_raw: Optional[Sequence[float]] = None,
) -> CHSHResult:
    """
    S = |E1 + E2 + E3 - E4| for E ordered as (0, 7pi/8), (-pi/4, 7pi/8), (-pi/4, 5pi/8), (0, 5pi/8).
    """
    values = [(float(value), float(sigma)) for value, sigma in e]
    if len(values) != 4:
        raise ValueError("CHSH needs four correlation values")
    s = abs(values[0][0] + values[1][0] + values[2][0] - values[3][0])
    sigma_s = math.sqrt(sum(sigma ** 2 for _, sigma in values))
    raw = sigma_s if sigma_raw is None else math.sqrt(sum(x ** 2 for x in sigma_raw))
    return CHSHResult(e_values=values, s=s, sigma_s=sigma_s, sigma_s_raw=raw)


def chsh_from_records(records: Sequence[CountRecord]) -> CHSHResult:
    """Evaluate S from the 16 labeled records produced by a CHSH run."""
    if len(records) != 16:
        raise ValueError(f"CHSH needs 16 records, got {len(records)}")
    groups = [records[start:start + 4] for start in range(0, 16, 4)]
    evaluated = [chsh_e_from_records(group) for group in groups]
    result = chsh_s(
        [(e, sigma) for e, sigma, _ in evaluated],
        sigma_raw=[raw for _, _, raw in evaluated],
    )
    logger.info(
        "CHSH evaluated",
        extra={
            "extra_fields": {
                "s": result.s,
                "sigma_s": result.sigma_s,
                "significance": result.significance,
            }
        }
    )
    return result


def analytic_chsh(state, angle_set: Sequence[Tuple[float, float]] = DEFAULT_CHSH_ANGLES) -> float:
    """S evaluated from exact probabilities, without sampling."""
    e = [correlation(state, theta1, theta2) for theta1, theta2 in angle_set]
    return abs(e[0] + e[1] + e[2] - e[3])


def brightness(pairs_detected: float, duration: float, pump_mw: float, bandwidth_nm: float) -> float:
    """Spectral brightness in pairs/s/mW/nm."""
    if duration <= 0.0 or pump_mw <= 0.0 or bandwidth_nm <= 0.0:
        raise ValueError("duration, pump power and bandwidth must be positive")
    return pairs_detected / (duration * pump_mw * bandwidth_nm)


def pbs_corrected_brightness(value: float, usable_fraction: float) -> float:
    """Brightness referenced to the pump power that actually drives down-conversion."""
    if not 0.0 < usable_fraction <= 1.0:
        raise ValueError(f"usable fraction must lie in (0, 1], got {usable_fraction}")
    return value / usable_fraction


def fit_summary(fit: FitResult) -> List[Tuple[str, float]]:
    """Ordered report entries for a fringe fit."""
    return [
        ("visibility", fit.visibility),
        ("sigma_visibility", fit.sigma_v),
        ("c0", fit.c0),
        ("sigma_c0", fit.sigma_c0),
        ("phase_offset_deg", math.degrees(fit.phase_offset)),
        ("sigma_phase_deg", math.degrees(fit.sigma_phase)),
        ("chi2_per_dof", fit.chi2_per_dof),
        ("extrema_visibility", fit.extrema_visibility),
        ("phase_degenerate", fit.phase_degenerate),
    ]
