"""Quantum reference values for the two-qubit singlet state.

E(a, b) = <psi| (a.sigma (x) b.sigma) |psi> = -a.b   for the singlet
psi = (|01> - |10>) / sqrt(2), with a, b unit vectors in R^3.

The CHSH combination A1B1 + A1B2 + A2B1 - A2B2 of joint spin
observables is itself an observable; its spectrum is bounded by 2*sqrt(2)
in absolute value, attained at the canonical xz-plane angles
(0, 90, 45, -45) degrees.  Expectations of linear combinations of
observables equal the same linear combination of the individual
expectations, commuting or not; ``linearity_check`` measures the
residual of that identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_NORM_TOL = 1e-12
_HERMITIAN_TOL = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class UnitVector3:
    """Direction in R^3, normalized on construction; rejects the zero vector."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if norm < 1e-300:
            raise ValueError("cannot normalize the zero vector")
        if abs(norm - 1.0) > _NORM_TOL:
            object.__setattr__(self, "x", self.x / norm)
            object.__setattr__(self, "y", self.y / norm)
            object.__setattr__(self, "z", self.z / norm)

    @classmethod
    def from_xz_degrees(cls, angle_deg: float) -> "UnitVector3":
        """Direction at angle_deg from +z toward +x, in the xz-plane."""
        theta = math.radians(angle_deg)
        return cls(math.sin(theta), 0.0, math.cos(theta))

    def dot(self, other: "UnitVector3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Observable:
    """4x4 complex Hermitian matrix acting on the two-qubit space."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"observable must be 4x4, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > _HERMITIAN_TOL:
            raise ValueError("observable is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def max_abs_eigenvalue(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))


@dataclass(frozen=True)
class SingletState:
    """Two-qubit state (|01> - |10>)/sqrt(2) in the computational basis."""

    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.amplitudes, dtype=complex)
        if v.shape != (4,):
            raise ValueError("state needs 4 amplitudes")
        if abs(np.vdot(v, v).real - 1.0) > _NORM_TOL:
            raise ValueError("state is not normalized")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)


def singlet_state() -> SingletState:
    inv = 1.0 / math.sqrt(2.0)
    return SingletState(np.array([0.0, inv, -inv, 0.0], dtype=complex))


def spin_matrix(direction: UnitVector3) -> np.ndarray:
    """2x2 spin observable direction . (sigma_x, sigma_y, sigma_z)."""
    return direction.x * PAULI_X + direction.y * PAULI_Y + direction.z * PAULI_Z


def joint_observable(a: UnitVector3, b: UnitVector3) -> Observable:
    """Tensor-product observable (a.sigma) (x) (b.sigma)."""
    return Observable(np.kron(spin_matrix(a), spin_matrix(b)))


def expectation(obs: Observable, state: SingletState) -> float:
    v = state.amplitudes
    value = np.vdot(v, obs.matrix @ v)
    return float(value.real)


def singlet_correlation(a: UnitVector3, b: UnitVector3) -> float:
    """<psi| (a.sigma (x) b.sigma) |psi>; equals -(a.b) to 1e-10."""
    return expectation(joint_observable(a, b), singlet_state())


def chsh_operator(a1: UnitVector3, a2: UnitVector3, b1: UnitVector3, b2: UnitVector3) -> Observable:
    """A1B1 + A1B2 + A2B1 - A2B2 as a single Hermitian observable."""
    matrix = (
        joint_observable(a1, b1).matrix
        + joint_observable(a1, b2).matrix
        + joint_observable(a2, b1).matrix
        - joint_observable(a2, b2).matrix
    )
    return Observable(matrix)


def linearity_check(observables: list[Observable], weights: list[float], state: SingletState) -> float:
    """| <sum w_i O_i> - sum w_i <O_i> |.

    Zero up to rounding for any observables, commuting or not.
    """
    if len(observables) != len(weights):
        raise ValueError(f"{len(observables)} observables but {len(weights)} weights")
    if not observables:
        raise ValueError("need at least one observable")
    combined = sum(w * o.matrix for w, o in zip(weights, observables))
    lhs = expectation(Observable(combined), state)
    rhs = sum(w * expectation(o, state) for w, o in zip(weights, observables))
    return abs(lhs - rhs)


def correlation_curve(angles_deg: list[float]) -> list[tuple[float, float]]:
    """(angle_degrees, singlet correlation) with one station fixed at 0 degrees.

    The correlation depends only on the angle between the settings, so
    the xz-plane grid is fully general; values equal -cos(angle).
    """
    fixed = UnitVector3.from_xz_degrees(0.0)
    return [
        (float(theta), singlet_correlation(fixed, UnitVector3.from_xz_degrees(theta)))
        for theta in angles_deg
    ]
