"""Dense complex matrix layer.

Operators are plain ``numpy`` arrays; the ``as_*`` helpers validate the
role-specific invariants and return a complex copy.  Exponentials are taken
through Hermitian eigendecompositions, logarithms through a complex Schur
form, so both stay exactly (up to rounding) unitary / skew-Hermitian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    NegativeTime,
    NonHermitianGenerator,
    NonHermitianInput,
    NonUnitaryInput,
    ValidationError,
)

TOL_HERM = 1e-10
TOL_UNIT = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
TOL_EXP = 1e-9
TOL_NUM = 1e-8
TOL_PHASE = 1e-12
TOL_CLUSTER = 1e-9

Generator = Union[np.ndarray, Callable[[float], np.ndarray]]


def _square(X, name="matrix") -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {X.shape}")
    return X


def _scale(X: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(X))) if X.size else 1.0)


def is_hermitian(X, tol: float = TOL_HERM) -> bool:
    X = _square(X)
    return bool(np.max(np.abs(X - X.conj().T), initial=0.0) <= tol * _scale(X))


def as_hermitian(X, tol: float = TOL_HERM, error=NonHermitianInput) -> np.ndarray:
    """Validate ``X`` as Hermitian and return its exactly Hermitian part."""
    X = _square(X)
    if not is_hermitian(X, tol):
        raise error("operator is not Hermitian within tolerance")
    return (X + X.conj().T) / 2


def is_unitary(U, tol: float = TOL_UNIT) -> bool:
    U = _square(U)
    n = U.shape[0]
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(n)), initial=0.0) <= tol * max(1, n))


def as_unitary(U, tol: float = TOL_UNIT) -> np.ndarray:
    U = _square(U)
    if not is_unitary(U, tol):
        raise NonUnitaryInput("operator is not unitary within tolerance")
    return U


def as_density(rho, tol: float = TOL_TRACE) -> np.ndarray:
    """Validate a density operator: Hermitian, unit trace, positive semidefinite."""
    rho = as_hermitian(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"density operator has trace {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min(initial=0.0) < -TOL_PSD:
        raise ValidationError("density operator has a negative eigenvalue")
    return rho


@dataclass(frozen=True)
class SkewLog:
    """Principal logarithm of a unitary.

    ``matrix`` is skew-Hermitian, ``phases`` are its eigenphases in (-pi, pi].
    """

    matrix: np.ndarray
    phases: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def norm(self) -> float:
        return float(math.sqrt(np.sum(self.phases**2)))


def expm_skew(H, t: float = 1.0) -> np.ndarray:
    """Return ``exp(-i t H)`` for Hermitian ``H``."""
    H = as_hermitian(H)
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * t * w)) @ V.conj().T


def _snap_branch(theta: np.ndarray) -> np.ndarray:
    theta = np.array(theta, dtype=float)
    theta[theta <= -math.pi + TOL_PHASE] = math.pi
    return theta


def _cluster_phases(theta: np.ndarray, tol: float = TOL_CLUSTER) -> np.ndarray:
    """Give eigenphases that coincide on the circle a common value."""
    n = len(theta)
    if n < 2:
        return theta
    order = np.argsort(theta)
    s = theta[order]
    gaps = np.diff(s)
    labels = np.concatenate([[0], np.cumsum(gaps > tol)])
    # wrap-around: a cluster straddling -pi/pi joins the first and last runs
    if labels[-1] > 0 and (s[0] + 2 * math.pi) - s[-1] <= tol:
        labels[labels == labels[-1]] = 0
    out = s.copy()
    for lab in np.unique(labels):
        idx = labels == lab
        if idx.sum() > 1:
            z = np.mean(np.exp(1j * s[idx]))
            out[idx] = np.angle(z)
    result = np.empty_like(theta)
    result[order] = out
    return _snap_branch(result)


def unitary_phases(U) -> np.ndarray:
    """Eigenphases of a unitary in the principal branch (-pi, pi]."""
    U = _square(U)
    return _snap_branch(np.angle(np.linalg.eigvals(U)))


def log_norm(U) -> float:
    """``||Log U||`` from the eigenphases alone; cheap, used inside searches."""
    theta = unitary_phases(U)
    return float(math.sqrt(np.dot(theta, theta)))


def principal_log(U) -> SkewLog:
    """Principal logarithm of a unitary with eigenphases in (-pi, pi]."""
    U = as_unitary(U)
    T, Z = sla.schur(U, output="complex")
    theta = _cluster_phases(np.angle(np.diag(T)))
    L = (Z * (1j * theta)) @ Z.conj().T
    L = (L - L.conj().T) / 2
    return SkewLog(matrix=L, phases=theta)


def hs_norm(X) -> float:
    """Hilbert-Schmidt norm ``sqrt(tr X^dagger X)``."""
    X = _square(X)
    return float(np.sqrt(np.sum(np.abs(X) ** 2)))


def geodesic_distance(U, V) -> float:
    """Bi-invariant geodesic distance ``||Log(U^dagger V)||`` on the unitary group."""
    U = as_unitary(U)
    V = as_unitary(V)
    if U.shape != V.shape:
        raise DimensionMismatch(f"shapes {U.shape} and {V.shape} differ")
    return principal_log(U.conj().T @ V).norm()


def bandwidth(H) -> float:
    """``tr(H^2)`` of a Hermitian operator."""
    H = as_hermitian(H)
    return float(np.real(np.sum(H * H.T)))


def commutator(X, Y) -> np.ndarray:
    return X @ Y - Y @ X


def conjugate(U, rho) -> np.ndarray:
    """``U rho U^dagger``."""
    return U @ rho @ U.conj().T


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR of a complex Ginibre matrix with phase fix)."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (Z + Z.conj().T) / 2


def block_diagonal(blocks: list[np.ndarray], groups: list[list[int]], n: int) -> np.ndarray:
    """Embed ``blocks[g]`` on the index set ``groups[g]`` of an ``n``-dim space."""
    M = np.zeros((n, n), dtype=complex)
    for B, g in zip(blocks, groups):
        ix = np.asarray(g)
        M[np.ix_(ix, ix)] = B
    return M


# ---------------------------------------------------------------------------
# von Neumann propagation
# ---------------------------------------------------------------------------

_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def _step_midpoint(H: Callable[[float], np.ndarray], t: float, dt: float) -> np.ndarray:
    Hm = as_hermitian(H(t + dt / 2), error=NonHermitianGenerator)
    return expm_skew(Hm, dt)


def _step_magnus4(H: Callable[[float], np.ndarray], t: float, dt: float) -> np.ndarray:
    H1 = as_hermitian(H(t + _GAUSS[0] * dt), error=NonHermitianGenerator)
    H2 = as_hermitian(H(t + _GAUSS[1] * dt), error=NonHermitianGenerator)
    K = 0.5 * (H1 + H2) - 1j * (math.sqrt(3) * dt / 12) * commutator(H2, H1)
    return expm_skew(K, dt)


_STEPPERS = {"midpoint": _step_midpoint, "magnus4": _step_magnus4}


def _default_steps(H: Callable[[float], np.ndarray], T: float) -> int:
    # 1000 steps per unit of omega*T, omega estimated from the sampled bandwidth
    samples = [H(T * s) for s in (0.0, 0.25, 0.5, 0.75, 1.0)]
    omega = max(math.sqrt(max(bandwidth(h), 0.0)) for h in samples)
    return max(1000, int(math.ceil(1000 * omega * T)))


def propagator(
    H: Generator,
    T: float,
    steps: int | None = None,
    method: str = "midpoint",
) -> np.ndarray:
    """Time-ordered propagator of ``-i H(t)`` over ``[0, T]``.

    A constant ``H`` given as an array is exponentiated in one shot.  A callable
    is integrated by exponential splitting: ``"midpoint"`` (second order) or
    ``"magnus4"`` (fourth-order Magnus with two Gauss points).  Every step is a
    unitary, so conjugating a state by the result preserves its spectrum.
    """
    if T < 0:
        raise NegativeTime(f"propagation time must be >= 0, got {T}")
    if not callable(H):
        return expm_skew(as_hermitian(H, error=NonHermitianGenerator), T)
    if method not in _STEPPERS:
        raise ValidationError(f"unknown propagation method {method!r}")
    n = np.asarray(H(0.0)).shape[0]
    if T == 0:
        return np.eye(n, dtype=complex)
    if steps is None:
        steps = _default_steps(H, T)
    if steps < 1:
        raise ValidationError("steps must be a positive integer")
    stepper = _STEPPERS[method]
    dt = T / steps
    U = np.eye(n, dtype=complex)
    for j in range(steps):
        U = stepper(H, j * dt, dt) @ U
    return U


def von_neumann_evolve(
    H: Generator,
    rho0,
    T: float,
    steps: int | None = None,
    method: str = "midpoint",
) -> np.ndarray:
    """Solve ``rho' = -i[H(t), rho]`` from ``rho0`` over ``[0, T]``."""
    rho0 = as_hermitian(rho0)
    U = propagator(H, T, steps=steps, method=method)
    if U.shape != rho0.shape:
        raise DimensionMismatch(f"generator is {U.shape}, state is {rho0.shape}")
    rho = conjugate(U, rho0)
    return (rho + rho.conj().T) / 2
