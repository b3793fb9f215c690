"""
Pydantic models for single-photon polarization operators and two-photon states.

All matrices are expressed in the {H, V} basis; two-photon objects use the
fixed product ordering (HH, HV, VH, VV) over signal (x) idler.
"""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

BASIS = ("HH", "HV", "VH", "VV")

NORM_TOLERANCE = 1e-10
MIN_NORM = 1e-9
HERMITIAN_TOLERANCE = 1e-12
EIGENVALUE_FLOOR = -1e-10


def _frozen_array(value, shape: tuple[int, ...], name: str) -> np.ndarray:
    """Coerce to a read-only complex array of the given shape with finite entries."""
    array = np.array(value, dtype=complex)
    if array.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    array.setflags(write=False)
    return array


class PolarizationOperator(BaseModel):
    """2x2 complex operator acting on one photon's polarization qubit."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    m: np.ndarray = Field(..., description="Jones matrix in the {H, V} basis")

    @field_validator("m", mode="before")
    @classmethod
    def _coerce_matrix(cls, value):
        return _frozen_array(value, (2, 2), "Jones matrix")

    def __matmul__(self, other: "PolarizationOperator") -> "PolarizationOperator":
        """Compose operators; `a @ b` applies `b` first."""
        return PolarizationOperator(m=self.m @ other.m)

    def apply(self, jones_vector) -> np.ndarray:
        """Act on a single-photon Jones vector."""
        return self.m @ np.asarray(jones_vector, dtype=complex)

    def dagger(self) -> "PolarizationOperator":
        return PolarizationOperator(m=self.m.conj().T)

    def is_unitary(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs((self.dagger() @ self).m - np.eye(2))) <= tol)


class BiphotonState(BaseModel):
    """
    Pure two-photon polarization state.

    Amplitudes are not forced to unit norm on construction; use
    `from_amplitudes` to normalize. Operations that need a physical state
    reject non-normalized input.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    amp: np.ndarray = Field(..., description="Amplitudes ordered (HH, HV, VH, VV)")

    @field_validator("amp", mode="before")
    @classmethod
    def _coerce_amplitudes(cls, value):
        return _frozen_array(value, (4,), "state amplitudes")

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "BiphotonState":
        """
        Build a normalized state.

        Raises:
            ValueError: If the norm is below MIN_NORM (degenerate state)
        """
        amplitudes = np.asarray(amplitudes, dtype=complex)
        norm = float(np.linalg.norm(amplitudes))
        if not np.isfinite(norm) or norm < MIN_NORM:
            raise ValueError(f"cannot normalize state with norm {norm:.3e}")
        return cls(amp=amplitudes / norm)

    @classmethod
    def basis_state(cls, label: str) -> "BiphotonState":
        amplitudes = np.zeros(4, dtype=complex)
        amplitudes[BASIS.index(label)] = 1.0
        return cls(amp=amplitudes)

    @classmethod
    def singlet(cls) -> "BiphotonState":
        """(|HV> - |VH>)/sqrt(2)."""
        return cls.from_amplitudes([0.0, 1.0, -1.0, 0.0])

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2))

    def is_normalized(self, tol: float = NORM_TOLERANCE) -> bool:
        return abs(self.norm_squared - 1.0) <= tol

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amp, self.amp.conj())


class DensityState(BaseModel):
    """Mixed two-photon polarization state."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho: np.ndarray = Field(..., description="4x4 density matrix in the (HH, HV, VH, VV) basis")

    @field_validator("rho", mode="before")
    @classmethod
    def _coerce_density(cls, value):
        rho = _frozen_array(value, (4, 4), "density matrix")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOLERANCE:
            raise ValueError("density matrix is not Hermitian")
        if np.min(np.linalg.eigvalsh(rho)) < EIGENVALUE_FLOOR:
            raise ValueError("density matrix has a negative eigenvalue")
        return rho

    @classmethod
    def from_pure(cls, state: BiphotonState) -> "DensityState":
        return cls(rho=state.density_matrix())

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def is_normalized(self, tol: float = NORM_TOLERANCE) -> bool:
        return abs(self.trace - 1.0) <= tol

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))
