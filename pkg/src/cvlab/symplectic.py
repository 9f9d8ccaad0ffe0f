"""Symplectic structure of the phase space of n bosonic modes.

Storage ordering is quadrature-interleaved, ``(q1, p1, q2, p2, ...)``, and the
canonical convention ``[q, p] = i`` is used throughout, so the vacuum
covariance matrix is ``I / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CVLabError, DimensionError

SYMPLECTIC_TOL = 1e-10
PAIRING_TOL = 1e-9
SYMMETRY_TOL = 1e-10

_OMEGA_BLOCK = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _frozen(matrix) -> np.ndarray:
    out = np.array(matrix, dtype=float)
    out.setflags(write=False)
    return out


def _check_square_even(matrix: np.ndarray) -> int:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
        raise DimensionError(f"expected a square matrix of even size, got shape {matrix.shape}")
    return matrix.shape[0] // 2


@dataclass(frozen=True)
class SymplecticForm:
    """Antisymmetric form encoding the canonical commutation relations.

    Attributes:
        n_modes: Number of modes.
        kind: ``"omega"`` for the interleaved block form, ``"j"`` for the
            block form acting on ``(q1..qn, p1..pn)``.
        matrix: The ``2n x 2n`` form itself (read-only).
    """

    n_modes: int
    kind: str
    matrix: np.ndarray


@dataclass(frozen=True)
class OrderingPermutation:
    """Permutation ``P`` taking interleaved vectors to block-ordered ones."""

    n_modes: int
    matrix: np.ndarray


class SymplecticMatrix:
    """A real ``2n x 2n`` matrix verified to preserve the symplectic form.

    Args:
        matrix: Candidate transformation in interleaved ordering.
        tol: Max-norm tolerance on ``F Omega F^T - Omega``.

    Raises:
        CVLabError: If the symplectic condition fails.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix, tol: float = SYMPLECTIC_TOL):
        m = np.asarray(matrix, dtype=float)
        if not is_symplectic(m, tol):
            raise CVLabError("matrix does not satisfy the symplectic condition")
        self._matrix = _frozen(m)

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def n_modes(self) -> int:
        return self._matrix.shape[0] // 2

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return SymplecticMatrix(self._matrix @ np.asarray(other))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._matrix, dtype=dtype)

    def inverse(self) -> "SymplecticMatrix":
        om = omega(self.n_modes)
        return SymplecticMatrix(om @ self._matrix.T @ om.T)

    def __repr__(self) -> str:
        return f"SymplecticMatrix(n_modes={self.n_modes})"


def omega(n: int) -> np.ndarray:
    """Return the interleaved symplectic form as a plain array."""
    if n < 1:
        raise DimensionError("mode count must be positive")
    return np.kron(np.eye(n), _OMEGA_BLOCK)


def omega_form(n: int) -> SymplecticForm:
    """Block-diagonal form with 2x2 blocks ``[[0, 1], [-1, 0]]``."""
    return SymplecticForm(n, "omega", _frozen(omega(n)))


def j_form(n: int) -> SymplecticForm:
    """Form ``[[0, -I], [I, 0]]`` acting on block-ordered vectors."""
    if n < 1:
        raise DimensionError("mode count must be positive")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return SymplecticForm(n, "j", _frozen(np.block([[zero, -eye], [eye, zero]])))


def ordering_permutation(n: int) -> OrderingPermutation:
    """Permutation with ``S = P R`` for ``R`` interleaved and ``S`` block-ordered.

    Covariance matrices transform as ``V = P sigma P^T`` and the forms obey
    ``J = -P Omega P^T``.
    """
    if n < 1:
        raise DimensionError("mode count must be positive")
    p = np.zeros((2 * n, 2 * n))
    for k in range(n):
        p[k, 2 * k] = 1.0
        p[n + k, 2 * k + 1] = 1.0
    return OrderingPermutation(n, _frozen(p))


def is_symplectic(F, tol: float = SYMPLECTIC_TOL) -> bool:
    """Check ``max|F Omega F^T - Omega| <= tol``."""
    f = np.asarray(F, dtype=float)
    n = _check_square_even(f)
    om = omega(n)
    return bool(np.max(np.abs(f @ om @ f.T - om)) <= tol)


def check_covariance_shape(sigma: np.ndarray) -> int:
    """Validate a symmetric even-sized matrix and return its mode count."""
    n = _check_square_even(sigma)
    scale = max(1.0, float(np.max(np.abs(sigma))))
    if np.max(np.abs(sigma - sigma.T)) > SYMMETRY_TOL * scale:
        raise CVLabError("covariance matrix is not symmetric")
    return n


def symplectic_spectrum(sigma, form: np.ndarray | None = None,
                        pairing_tol: float = PAIRING_TOL) -> np.ndarray:
    """Symplectic eigenvalues of any symmetric matrix, positivity not required.

    The eigenvalues of ``i Omega sigma`` come in pairs ``+-d``; the ``n``
    moduli are returned in ascending order. Used directly for partially
    transposed matrices, which are symmetric but not always valid states.

    Args:
        sigma: Symmetric ``2n x 2n`` matrix.
        form: Symplectic form to use; defaults to the interleaved ``Omega``.
        pairing_tol: Relative tolerance for matching the ``+-d`` pairs.

    Raises:
        CVLabError: If the spectrum cannot be paired.
    """
    s = np.asarray(sigma, dtype=float)
    n = check_covariance_shape(s)
    om = omega(n) if form is None else np.asarray(form, dtype=float)
    ev = np.linalg.eigvals(1j * om @ s)
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.max(np.abs(ev.imag)) > pairing_tol * scale * 10:
        raise CVLabError("symplectic spectrum has complex entries; matrix is not positive definite")
    vals = np.sort(ev.real)
    neg = -vals[:n][::-1]
    pos = vals[n:]
    if np.max(np.abs(pos - neg)) > pairing_tol * scale:
        raise CVLabError("symplectic spectrum is not paired within tolerance")
    return 0.5 * (pos + neg)


def symplectic_eigenvalues(sigma, pairing_tol: float = PAIRING_TOL) -> np.ndarray:
    """Symplectic eigenvalues of a positive-definite covariance matrix.

    Args:
        sigma: Symmetric positive-definite ``2n x 2n`` matrix (interleaved).
        pairing_tol: Relative tolerance for matching eigenvalue pairs.

    Returns:
        Array of ``n`` positive reals in ascending order.

    Raises:
        CVLabError: On non-symmetric, non-positive-definite, or unpaired input.
    """
    s = np.asarray(sigma, dtype=float)
    check_covariance_shape(s)
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise CVLabError("covariance matrix is not positive definite") from exc
    return symplectic_spectrum(s, pairing_tol=pairing_tol)


def two_mode_symplectic_eigs_from_invariants(I1: float, I2: float, I3: float, I4: float,
                                             tol: float = 1e-12) -> tuple[float, float]:
    """Two-mode symplectic eigenvalues from the four local invariants.

    ``sqrt(2) d_pm = [Delta +- sqrt(Delta^2 - 4 I4)]^(1/2)`` with
    ``Delta = I1 + I2 + 2 I3``.

    Returns:
        ``(d_minus, d_plus)``.
    """
    delta = I1 + I2 + 2.0 * I3
    disc = delta * delta - 4.0 * I4
    if disc < -tol * max(1.0, delta * delta):
        raise CVLabError("negative discriminant: invariants do not describe a valid matrix")
    root = np.sqrt(max(disc, 0.0))
    d_minus = np.sqrt(max(delta - root, 0.0) / 2.0)
    d_plus = np.sqrt((delta + root) / 2.0)
    return float(d_minus), float(d_plus)


def pseudo_inverse(M, tol: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff."""
    return np.linalg.pinv(np.asarray(M), rcond=tol)


def direct_sum(*blocks) -> np.ndarray:
    """Block-diagonal direct sum of square matrices."""
    from scipy.linalg import block_diag

    return block_diag(*[np.asarray(b) for b in blocks])
