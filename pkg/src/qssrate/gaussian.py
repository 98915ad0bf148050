"""Gaussian-state primitives in shot-noise units.

Covariance matrices (CMs) are plain ``numpy`` arrays with interleaved
ordering ``(q1, p1, q2, p2, ...)``; vacuum is the identity.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ValidationError

# Below 1 - NU_CLAMP a symplectic eigenvalue is treated as unphysical.
NU_CLAMP = 1e-9
SYMMETRY_RTOL = 1e-12
# Homodyne variances below this are treated as singular (pseudo-inverse).
PINV_THRESHOLD = 1e-14

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])
Z2 = np.diag([1.0, -1.0])
I2 = np.eye(2)


def nu_tolerance(V: np.ndarray, floor: float) -> float:
    """Attainable accuracy of a symplectic eigenvalue near 1.

    Rounding of entries of size ``s`` perturbs ``nu^2`` by about ``eps s^2``,
    so strongly squeezed states at large modulation need more slack than
    ``floor``.
    """
    scale = float(np.abs(V).max()) if V.size else 1.0
    return max(floor, np.finfo(float).eps * scale * scale)


def symplectic_form(n: int) -> np.ndarray:
    return np.kron(np.eye(n), _J)


def validate_cm(V, *, name: str = "covariance matrix") -> np.ndarray:
    """Return ``V`` as a float array after shape and symmetry checks."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise ValidationError(f"{name} must be square with even dimension, got {V.shape}")
    if not np.all(np.isfinite(V)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.abs(V).max()))
    if np.abs(V - V.T).max() > SYMMETRY_RTOL * scale:
        raise ValidationError(f"{name} is not symmetric")
    return V


def n_modes(V: np.ndarray) -> int:
    return V.shape[0] // 2


def mode_indices(modes) -> list[int]:
    return [i for m in modes for i in (2 * m, 2 * m + 1)]


def select_modes(V: np.ndarray, modes) -> np.ndarray:
    """Marginal CM of the listed modes, in the listed order."""
    idx = mode_indices(modes)
    return V[np.ix_(idx, idx)]


def tmsv(mu: float) -> np.ndarray:
    """Two-mode squeezed vacuum with local variance ``mu``."""
    if mu < 1.0:
        raise DomainError(f"TMSV variance must be >= 1, got {mu}")
    c = math.sqrt(mu * mu - 1.0)
    return np.block([[mu * I2, c * Z2], [c * Z2, mu * I2]])


def beamsplitter(transmissivity: float) -> np.ndarray:
    """Two-mode beam-splitter symplectic matrix."""
    t = math.sqrt(transmissivity)
    r = math.sqrt(1.0 - transmissivity)
    return np.block([[t * I2, r * I2], [-r * I2, t * I2]])


def apply_symplectic(V: np.ndarray, S: np.ndarray, modes) -> np.ndarray:
    """Apply ``S`` (acting on ``modes``, in that order) to ``V``."""
    full = np.eye(V.shape[0])
    idx = mode_indices(modes)
    full[np.ix_(idx, idx)] = S
    return full @ V @ full.T


def symplectic_eigenvalues(V) -> np.ndarray:
    """Symplectic spectrum in descending order.

    Positive-definite input goes through the Hermitian matrix
    ``i L^T Omega L`` with ``V = L L^T``, which is similar to ``i Omega V``
    but can use ``eigvalsh``. Non-positive-definite input falls back to the
    moduli of ``eig(i Omega V)``.
    """
    V = validate_cm(V)
    n = n_modes(V)
    omega = symplectic_form(n)
    try:
        L = np.linalg.cholesky(V)
    except np.linalg.LinAlgError:
        ev = np.sort(np.abs(np.linalg.eigvals(1j * omega @ V)))
        # eigenvalues come in +/- pairs; take one of each pair
        return ev[::2][::-1].copy()
    K = 1j * (L.T @ omega @ L)
    ev = np.linalg.eigvalsh(K)
    return ev[n:][::-1].copy()


def two_mode_spectrum(V) -> tuple[float, float]:
    """Closed-form symplectic eigenvalues of a two-mode CM.

    With ``V = [[A, C], [C^T, B]]`` and ``Delta = det A + det B + 2 det C``:
    ``nu_+^2 = (Delta + sqrt(Delta^2 - 4 det V)) / 2`` and
    ``nu_-^2 = det V / nu_+^2`` (avoids cancellation in the minus branch).
    """
    V = validate_cm(V)
    if V.shape != (4, 4):
        raise ValidationError(f"two-mode CM must be 4x4, got {V.shape}")
    A, B, C = V[:2, :2], V[2:, 2:], V[:2, 2:]
    delta = np.linalg.det(A) + np.linalg.det(B) + 2.0 * np.linalg.det(C)
    det = np.linalg.det(V)
    disc = max(delta * delta - 4.0 * det, 0.0)
    plus_sq = 0.5 * (delta + math.sqrt(disc))
    if plus_sq <= 0.0:
        raise DomainError("two-mode CM has non-positive symplectic invariant")
    minus_sq = det / plus_sq
    if minus_sq < 0.0:
        raise DomainError("two-mode CM has negative determinant")
    return math.sqrt(plus_sq), math.sqrt(minus_sq)


def entropic_h(nu):
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue ``nu``.

    Evaluated as ``log2(a) + b log2(1 + 1/b)`` with ``a = (nu+1)/2``,
    ``b = (nu-1)/2`` so that large ``nu`` and ``nu -> 1`` stay accurate.
    Values in ``[1 - 1e-9, 1]`` are clamped to 1; smaller ones raise.
    Accepts scalars or arrays.
    """
    arr = np.asarray(nu, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("entropic_h got NaN")
    if np.any(arr < 1.0 - NU_CLAMP):
        raise DomainError(f"symplectic eigenvalue below 1: {arr.min()!r}")
    v = np.maximum(arr, 1.0)
    a = 0.5 * (v + 1.0)
    b = 0.5 * (v - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(b > 0.0, b * np.log1p(1.0 / np.where(b > 0.0, b, 1.0)), 0.0)
    out = np.log2(a) + tail / math.log(2.0)
    out = np.where(np.isinf(v), np.inf, out)
    if out.ndim == 0:
        return float(out)
    return out


def von_neumann_entropy(V) -> float:
    return float(np.sum(entropic_h(symplectic_eigenvalues(V))))


def is_physical(V, tol: float = NU_CLAMP) -> bool:
    """Uncertainty principle: every symplectic eigenvalue >= 1 (within ``tol``)."""
    try:
        V = validate_cm(V)
    except ValidationError:
        return False
    if np.any(np.linalg.eigvalsh(V) <= 0.0):
        return False
    return bool(symplectic_eigenvalues(V).min() >= 1.0 - tol)


def _split(V: np.ndarray, mode: int):
    n = n_modes(V)
    if not 0 <= mode < n:
        raise ValidationError(f"mode {mode} out of range for {n}-mode CM")
    keep = [i for i in range(V.shape[0]) if i // 2 != mode]
    meas = [2 * mode, 2 * mode + 1]
    return keep, meas


def homodyne_condition(V, mode: int, quadrature: str) -> np.ndarray:
    """CM of the remaining modes after homodyning ``quadrature`` of ``mode``.

    ``A - C (Pi B Pi)^MP C^T``; the pseudo-inverse reduces to ``c c^T / b``
    for the measured variance ``b`` and is dropped when ``b`` is below
    ``PINV_THRESHOLD``.
    """
    V = validate_cm(V)
    if quadrature not in ("q", "p"):
        raise ValidationError(f"quadrature must be 'q' or 'p', got {quadrature!r}")
    keep, meas = _split(V, mode)
    j = meas[0] if quadrature == "q" else meas[1]
    A = V[np.ix_(keep, keep)]
    b = V[j, j]
    if b < PINV_THRESHOLD:
        return A.copy()
    c = V[keep, j]
    return A - np.outer(c, c) / b


def heterodyne_condition(V, mode: int) -> np.ndarray:
    """CM of the remaining modes after heterodyning ``mode``: ``A - C (B + I)^-1 C^T``."""
    V = validate_cm(V)
    keep, meas = _split(V, mode)
    A = V[np.ix_(keep, keep)]
    B = V[np.ix_(meas, meas)]
    C = V[np.ix_(keep, meas)]
    return A - C @ np.linalg.solve(B + I2, C.T)
