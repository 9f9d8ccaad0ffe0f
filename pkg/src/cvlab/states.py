"""Gaussian states: data model, state families, transformations and functionals.

All covariance matrices use interleaved ordering ``(q1, p1, q2, p2, ...)``
with vacuum covariance ``I / 2``. A complex amplitude ``alpha`` corresponds
to the mean ``(sqrt(2) Re alpha, sqrt(2) Im alpha)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import singledispatch
from typing import Iterable, Sequence

import numpy as np

from .errors import CVLabError, DimensionError, NonGaussianError, PhysicalityError
from .symplectic import (
    SymplecticMatrix,
    check_covariance_shape,
    direct_sum,
    ordering_permutation,
    symplectic_spectrum,
)

PHYSICALITY_TOL = 1e-9
VACUUM_VARIANCE = 0.5


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class PhaseSpaceMoments:
    """First and second moments with no physicality requirement.

    Partially transposed matrices live here: they are symmetric and
    correctly shaped but may violate the uncertainty relation.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        cov = _readonly(self.cov)
        n = check_covariance_shape(cov)
        mean = _readonly(np.zeros(2 * n) if self.mean is None else self.mean)
        if mean.shape != (2 * n,):
            raise DimensionError(f"mean must have length {2 * n}, got {mean.shape}")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", mean)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_spectrum(self.cov)

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return is_physical_cov(self.cov, tol)


class GaussianState(PhaseSpaceMoments):
    """A physical n-mode Gaussian state.

    Args:
        mean: Length-``2n`` mean vector, or ``None`` for a centred state.
        cov: ``2n x 2n`` covariance matrix.
        tol: Slack on the uncertainty relation ``min d_k >= 1/2 - tol``.

    Raises:
        PhysicalityError: If ``cov + (i/2) Omega`` is not positive semidefinite.
    """

    def __init__(self, mean, cov, tol: float = PHYSICALITY_TOL):
        super().__init__(mean, cov)
        if not is_physical_cov(self.cov, tol):
            raise PhysicalityError("covariance matrix violates the uncertainty relation")

    def __repr__(self) -> str:
        return f"GaussianState(n_modes={self.n_modes})"


def is_physical_cov(cov, tol: float = PHYSICALITY_TOL) -> bool:
    """True when all symplectic eigenvalues are at least ``1/2 - tol``."""
    c = np.asarray(cov, dtype=float)
    try:
        np.linalg.cholesky(c)
        d = symplectic_spectrum(c)
    except (np.linalg.LinAlgError, CVLabError):
        return False
    return bool(d[0] >= VACUUM_VARIANCE - tol)


# ----------------------------------------------------------------------------
# State families

@dataclass(frozen=True)
class Vacuum:
    n: int = 1


@dataclass(frozen=True)
class Thermal:
    """Product of thermal states; ``N`` is a scalar or one value per mode."""

    N: float | Sequence[float] = 0.0


@dataclass(frozen=True)
class Coherent:
    alphas: complex | Sequence[complex] = 0.0


@dataclass(frozen=True)
class SqueezedVacuum:
    r: float = 0.0
    phi: float = 0.0


@dataclass(frozen=True)
class DisplacedSqueezedThermal:
    """``D(alpha) S(r e^{i phi}) nu_N S^dag D^dag`` for a single mode."""

    alpha: complex = 0.0
    r: float = 0.0
    phi: float = 0.0
    N: float = 0.0


@dataclass(frozen=True)
class TWB:
    r: float = 0.0


@dataclass(frozen=True)
class TwoModeSqueezedThermal:
    r: float = 0.0
    N1: float = 0.0
    N2: float = 0.0


@dataclass(frozen=True)
class TriV3:
    """Three squeezed vacua mixed in a symmetric tritter."""

    r: float = 0.0


@dataclass(frozen=True)
class TriT:
    """State from two interlinked parametric processes; ``N1 = N2 + N3``.

    ``N_thermal`` is the mean photon number of the thermal input on each mode.
    """

    N2: float = 0.0
    N3: float = 0.0
    phi2: float = 0.0
    phi3: float = 0.0
    N_thermal: float = 0.0

    @property
    def N1(self) -> float:
        return self.N2 + self.N3


@dataclass(frozen=True)
class ECS:
    """Entangled coherent state marker; no covariance-matrix description."""

    gamma: float = 1.0


def _nonneg(name: str, value: float) -> None:
    if not np.isfinite(value) or value < 0:
        raise CVLabError(f"{name} must be a finite nonnegative number, got {value}")


def _finite(name: str, value: float) -> None:
    if not np.isfinite(value):
        raise CVLabError(f"{name} must be finite, got {value}")


def amplitude_to_mean(alpha: complex) -> np.ndarray:
    a = complex(alpha)
    return np.sqrt(2.0) * np.array([a.real, a.imag])


@singledispatch
def build(spec) -> GaussianState:
    """Construct the Gaussian state described by a family spec.

    Raises:
        CVLabError: On invalid parameters.
        NonGaussianError: For families without a covariance matrix.
    """
    raise CVLabError(f"unknown state family {type(spec).__name__}")


@build.register
def _(spec: Vacuum) -> GaussianState:
    if int(spec.n) < 1:
        raise CVLabError("vacuum needs at least one mode")
    return GaussianState(None, VACUUM_VARIANCE * np.eye(2 * int(spec.n)))


@build.register
def _(spec: Thermal) -> GaussianState:
    ns = np.atleast_1d(np.asarray(spec.N, dtype=float))
    for v in ns:
        _nonneg("N", v)
    return GaussianState(None, np.diag(np.repeat(ns + 0.5, 2)))


@build.register
def _(spec: Coherent) -> GaussianState:
    alphas = np.atleast_1d(np.asarray(spec.alphas, dtype=complex))
    mean = np.concatenate([amplitude_to_mean(a) for a in alphas])
    return GaussianState(mean, VACUUM_VARIANCE * np.eye(2 * alphas.size))


def _single_mode_cov(r: float, phi: float, N: float) -> np.ndarray:
    sq = squeezer_matrix(r, phi).matrix
    return sq @ ((N + 0.5) * np.eye(2)) @ sq.T


@build.register
def _(spec: SqueezedVacuum) -> GaussianState:
    _finite("r", spec.r)
    _finite("phi", spec.phi)
    return GaussianState(None, _single_mode_cov(spec.r, spec.phi, 0.0))


@build.register
def _(spec: DisplacedSqueezedThermal) -> GaussianState:
    _finite("r", spec.r)
    _finite("phi", spec.phi)
    _nonneg("N", spec.N)
    return GaussianState(amplitude_to_mean(spec.alpha), _single_mode_cov(spec.r, spec.phi, spec.N))


@build.register
def _(spec: TWB) -> GaussianState:
    _finite("r", spec.r)
    return build(TwoModeSqueezedThermal(spec.r, 0.0, 0.0))


@build.register
def _(spec: TwoModeSqueezedThermal) -> GaussianState:
    _finite("r", spec.r)
    _nonneg("N1", spec.N1)
    _nonneg("N2", spec.N2)
    r, n1, n2 = spec.r, spec.N1, spec.N2
    ch2, sh2 = np.cosh(r) ** 2, np.sinh(r) ** 2
    a = np.cosh(2 * r) + 2 * n1 * ch2 + 2 * n2 * sh2
    b = np.cosh(2 * r) + 2 * n1 * sh2 + 2 * n2 * ch2
    c = (1 + n1 + n2) * np.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    cov = 0.5 * np.block([[a * np.eye(2), c * z], [c * z, b * np.eye(2)]])
    return GaussianState(None, cov)


def _from_block_ordering(v: np.ndarray) -> np.ndarray:
    p = ordering_permutation(v.shape[0] // 2).matrix
    return p.T @ v @ p


@build.register
def _(spec: TriV3) -> GaussianState:
    _finite("r", spec.r)
    r = spec.r
    rp = np.cosh(2 * r) + np.sinh(2 * r) / 3
    rm = np.cosh(2 * r) - np.sinh(2 * r) / 3
    s = -2.0 / 3.0 * np.sinh(2 * r)
    ones = np.ones((3, 3)) - np.eye(3)
    q_block = rp * np.eye(3) + s * ones
    p_block = rm * np.eye(3) - s * ones
    v = 0.5 * direct_sum(q_block, p_block)
    return GaussianState(None, _from_block_ordering(v))


def tri_t_block_cov(spec: TriT) -> np.ndarray:
    """Covariance of the three-mode ``T`` state in block ordering (q's, then p's)."""
    for name in ("N2", "N3", "N_thermal"):
        _nonneg(name, getattr(spec, name))
    n1, n2, n3 = spec.N1, spec.N2, spec.N3
    f1, f2, f3 = n1 + 0.5, n2 + 0.5, n3 + 0.5
    g2 = np.sqrt(n2 * (1 + n1))
    g3 = np.sqrt(n3 * (1 + n1))
    a2, b2 = g2 * np.cos(spec.phi2), g2 * np.sin(spec.phi2)
    a3, b3 = g3 * np.cos(spec.phi3), g3 * np.sin(spec.phi3)
    c = np.sqrt(n2 * n3) * np.cos(spec.phi2 - spec.phi3)
    d = np.sqrt(n2 * n3) * np.sin(spec.phi2 - spec.phi3)
    v = np.array([
        [f1, a2, a3, 0, -b2, -b3],
        [a2, f2, c, -b2, 0, d],
        [a3, c, f3, -b3, -d, 0],
        [0, -b2, -b3, f1, -a2, -a3],
        [-b2, 0, -d, -a2, f2, c],
        [-b3, d, 0, -a3, c, f3],
    ])
    return (2 * spec.N_thermal + 1) * v


@build.register
def _(spec: TriT) -> GaussianState:
    return GaussianState(None, _from_block_ordering(tri_t_block_cov(spec)))


@build.register
def _(spec: ECS) -> GaussianState:
    raise NonGaussianError("entangled coherent states have no Gaussian covariance description")


# ----------------------------------------------------------------------------
# Symplectic building blocks

def beam_splitter_matrix(phi: float, theta: float = 0.0) -> SymplecticMatrix:
    """Two-mode mixing with transmissivity ``cos^2 phi`` and phase ``theta``."""
    b = np.array([[np.cos(phi), np.exp(1j * theta) * np.sin(phi)],
                  [-np.exp(-1j * theta) * np.sin(phi), np.cos(phi)]])
    n_block = np.block([[b.real, -b.imag], [b.imag, b.real]])
    p = ordering_permutation(2).matrix
    return SymplecticMatrix(p.T @ n_block @ p)


def _r_xi(r: float, psi: float) -> np.ndarray:
    nu = np.exp(1j * psi) * np.sinh(r)
    return np.array([[nu.real, nu.imag], [nu.imag, -nu.real]])


def squeezer_matrix(r: float, psi: float = 0.0) -> SymplecticMatrix:
    """Single-mode squeezer ``cosh r I + R_xi``; at ``psi = 0`` it stretches q by ``e^r``."""
    return SymplecticMatrix(np.cosh(r) * np.eye(2) + _r_xi(r, psi))


def two_mode_squeezer_matrix(r: float, psi: float = 0.0) -> SymplecticMatrix:
    """Two-mode squeezer ``[[mu I, R_xi], [R_xi, mu I]]`` with ``mu = cosh r``."""
    mu = np.cosh(r) * np.eye(2)
    rx = _r_xi(r, psi)
    return SymplecticMatrix(np.block([[mu, rx], [rx, mu]]))


def phase_rotation_matrix(theta: float) -> SymplecticMatrix:
    c, s = np.cos(theta), np.sin(theta)
    return SymplecticMatrix(np.array([[c, s], [-s, c]]))


def embed(matrix, modes: Sequence[int], n_modes: int) -> SymplecticMatrix:
    """Lift a ``2k x 2k`` symplectic matrix acting on ``modes`` to ``n_modes``."""
    m = np.asarray(matrix, dtype=float)
    modes = list(modes)
    if m.shape != (2 * len(modes), 2 * len(modes)):
        raise DimensionError("matrix size does not match the number of target modes")
    if len(set(modes)) != len(modes) or min(modes) < 0 or max(modes) >= n_modes:
        raise DimensionError(f"invalid target modes {modes} for {n_modes} modes")
    idx = np.array([[2 * k, 2 * k + 1] for k in modes]).ravel()
    big = np.eye(2 * n_modes)
    big[np.ix_(idx, idx)] = m
    return SymplecticMatrix(big)


def apply_symplectic(state: GaussianState, F, d=None) -> GaussianState:
    """Map ``mean -> F mean + d`` and ``cov -> F cov F^T``.

    Args:
        state: Input state.
        F: A ``SymplecticMatrix`` or an array that passes the symplectic check.
        d: Optional displacement added to the mean.
    """
    f = F.matrix if isinstance(F, SymplecticMatrix) else SymplecticMatrix(F).matrix
    if f.shape != state.cov.shape:
        raise DimensionError(f"transformation shape {f.shape} does not match state {state.cov.shape}")
    mean = f @ state.mean
    if d is not None:
        d = np.asarray(d, dtype=float)
        if d.shape != mean.shape:
            raise DimensionError("displacement length does not match the state")
        mean = mean + d
    return GaussianState(mean, f @ state.cov @ f.T)


def tensor(*states: PhaseSpaceMoments) -> GaussianState:
    """Product state of the given Gaussian states, in order."""
    return GaussianState(np.concatenate([s.mean for s in states]),
                         direct_sum(*[s.cov for s in states]))


def _mode_indices(keep: Iterable[int], n_modes: int) -> np.ndarray:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise DimensionError("mode set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n_modes:
        raise DimensionError(f"mode index out of range for {n_modes} modes: {keep}")
    return np.array([[2 * k, 2 * k + 1] for k in keep]).ravel()


def partial_trace(state: GaussianState, keep: Iterable[int]) -> GaussianState:
    """Reduced state on the (0-based) modes in ``keep``."""
    idx = _mode_indices(keep, state.n_modes)
    return GaussianState(state.mean[idx], state.cov[np.ix_(idx, idx)])


# ----------------------------------------------------------------------------
# Scalar functionals

def purity(state: PhaseSpaceMoments) -> float:
    """``Tr rho^2 = 1 / (2^n sqrt(det sigma))``."""
    return float(1.0 / (2.0 ** state.n_modes * np.sqrt(np.linalg.det(state.cov))))


def entropy_term(d) -> np.ndarray:
    """``f(d) = (d + 1/2) ln(d + 1/2) - (d - 1/2) ln(d - 1/2)``, zero at ``d = 1/2``."""
    d = np.asarray(d, dtype=float)
    lo = np.clip(d - 0.5, 0.0, None)
    hi = d + 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lo = np.where(lo > 0, lo * np.log(np.where(lo > 0, lo, 1.0)), 0.0)
    return hi * np.log(hi) - t_lo


def von_neumann_entropy(state: GaussianState) -> float:
    """Entropy in nats from the symplectic spectrum."""
    # each term is nonnegative; clip rounding residue from pure modes
    return float(np.sum(np.clip(entropy_term(state.symplectic_eigenvalues()), 0.0, None)))


def mean_photon_number(state: PhaseSpaceMoments) -> float:
    """Total ``<a^dag a>`` summed over modes."""
    return float(0.5 * (np.trace(state.cov) + state.mean @ state.mean) - 0.5 * state.n_modes)


def nonclassical_depth(state: PhaseSpaceMoments) -> float:
    """``max[(1 - 2u)/2, 0]`` with ``u`` the smallest ordinary eigenvalue of the CM."""
    u = float(np.linalg.eigvalsh(state.cov)[0])
    return max((1.0 - 2.0 * u) / 2.0, 0.0)


def gaussian_density(points, mean, cov) -> np.ndarray:
    """Normalized multivariate normal density; ``points`` has shape ``(..., 2n)``."""
    x = np.asarray(points, dtype=float) - np.asarray(mean, dtype=float)
    inv = np.linalg.inv(cov)
    k = cov.shape[0]
    quad = np.einsum("...i,ij,...j->...", x, inv, x)
    norm = (2 * np.pi) ** (k / 2) * np.sqrt(np.linalg.det(cov))
    return np.exp(-0.5 * quad) / norm


def wigner_at(state: PhaseSpaceMoments, point) -> float | np.ndarray:
    """Wigner function, normalized so that its integral over phase space is 1."""
    return gaussian_density(point, state.mean, state.cov)


def characteristic_at(state: PhaseSpaceMoments, point) -> complex | np.ndarray:
    """``chi(L) = exp(-L^T sigma L / 2 + i L^T mean)``."""
    lam = np.asarray(point, dtype=float)
    quad = np.einsum("...i,ij,...j->...", lam, state.cov, lam)
    return np.exp(-0.5 * quad + 1j * (lam @ state.mean))


# ----------------------------------------------------------------------------
# JSON schema

def state_to_dict(state: PhaseSpaceMoments) -> dict:
    return {
        "n_modes": state.n_modes,
        "ordering": "qp-interleaved",
        "convention": {"hbar": 1, "vacuum_variance": 0.5},
        "mean": [float(x) for x in state.mean],
        "cov": [[float(x) for x in row] for row in state.cov],
    }


def state_from_dict(data: dict, check: bool = True) -> PhaseSpaceMoments:
    """Parse the JSON schema; ``check=False`` skips the physicality test."""
    try:
        n = int(data["n_modes"])
        mean = np.asarray(data["mean"], dtype=float)
        cov = np.asarray(data["cov"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise CVLabError(f"malformed state document: {exc}") from exc
    if data.get("ordering", "qp-interleaved") != "qp-interleaved":
        raise CVLabError("only qp-interleaved ordering is supported")
    conv = data.get("convention", {})
    if conv and (conv.get("hbar", 1) != 1 or conv.get("vacuum_variance", 0.5) != 0.5):
        raise CVLabError("unsupported convention; expected hbar=1, vacuum_variance=0.5")
    if cov.shape != (2 * n, 2 * n):
        raise DimensionError("cov shape does not match n_modes")
    return GaussianState(mean, cov) if check else PhaseSpaceMoments(mean, cov)


def state_to_json(state: PhaseSpaceMoments) -> str:
    # repr of a Python float round-trips exactly (17 significant digits at most)
    return json.dumps(state_to_dict(state), indent=2)
