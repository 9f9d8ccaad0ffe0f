"""Gaussian noisy channels: damping towards a (squeezed) thermal bath.

Each mode ``h`` couples to its own bath with damping rate ``gamma``, thermal
photon number ``N`` and complex squeezing parameter ``M``. The covariance
matrix then evolves as

    sigma(t) = G^(1/2) sigma(0) G^(1/2) + (I - G) sigma_inf,

with ``G = diag(exp(-gamma_h t))`` on each quadrature pair and ``sigma_inf`` the
stationary state of the bath.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CVLabError, DimensionError
from .separability import partial_transpose
from .states import GaussianState, PhaseSpaceMoments, VACUUM_VARIANCE
from .symplectic import direct_sum, symplectic_spectrum

CONSTRAINT_TOL = 1e-12
BISECTION_TOL = 1e-9


@dataclass(frozen=True)
class BathMode:
    """Bath seen by one mode.

    Attributes:
        gamma: Damping rate (inverse time).
        n_thermal: Effective photon number ``N`` of the bath.
        m_squeeze: Phase-sensitive correlation ``M``; needs ``|M|^2 <= N (N + 1)``.
    """

    gamma: float
    n_thermal: float = 0.0
    m_squeeze: complex = 0.0

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise CVLabError(f"damping rate must be nonnegative, got {self.gamma}")
        if not np.isfinite(self.n_thermal) or self.n_thermal < 0:
            raise CVLabError(f"bath photon number must be nonnegative, got {self.n_thermal}")
        n = self.n_thermal
        if abs(complex(self.m_squeeze)) ** 2 > n * (n + 1) + CONSTRAINT_TOL * max(1.0, n * n):
            raise CVLabError("bath squeezing violates |M|^2 <= N (N + 1)")


@dataclass(frozen=True)
class ChannelSpec:
    """Independent baths, one per mode, in mode order."""

    modes: tuple[BathMode, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise CVLabError("a channel needs at least one mode")

    @classmethod
    def uniform(cls, n_modes: int, gamma: float, n_thermal: float = 0.0,
                m_squeeze: complex = 0.0) -> "ChannelSpec":
        """Identical baths on ``n_modes`` modes."""
        return cls(tuple(BathMode(gamma, n_thermal, m_squeeze) for _ in range(n_modes)))

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def to_dict(self) -> dict:
        return {"modes": [{"gamma": float(m.gamma), "n_th": float(m.n_thermal),
                           "m_re": float(complex(m.m_squeeze).real),
                           "m_im": float(complex(m.m_squeeze).imag)} for m in self.modes]}

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelSpec":
        try:
            return cls(tuple(BathMode(float(m["gamma"]), float(m.get("n_th", 0.0)),
                                      complex(float(m.get("m_re", 0.0)), float(m.get("m_im", 0.0))))
                             for m in data["modes"]))
        except (KeyError, TypeError) as exc:
            raise CVLabError(f"malformed channel document: {exc}") from exc


@dataclass(frozen=True)
class BathPhysicalParams:
    """Squeezed thermal bath given by its thermal and squeezing photon numbers."""

    n_th: float
    n_s: float = 0.0

    def __post_init__(self):
        if self.n_th < 0 or self.n_s < 0:
            raise CVLabError("photon numbers must be nonnegative")

    @property
    def N(self) -> float:
        return self.n_th + self.n_s * (1 + 2 * self.n_th)

    @property
    def M(self) -> float:
        return (1 + 2 * self.n_th) * np.sqrt(self.n_s * (1 + self.n_s))

    def bath_mode(self, gamma: float) -> BathMode:
        return BathMode(gamma, self.N, self.M)


@dataclass(frozen=True)
class NeverSeparable:
    """Marker returned when no finite separability time exists."""

    reason: str

    def __float__(self) -> float:
        return float("inf")


def _check_modes(state: PhaseSpaceMoments, spec: ChannelSpec) -> None:
    if state.n_modes != spec.n_modes:
        raise DimensionError(f"channel has {spec.n_modes} modes, state has {state.n_modes}")


def bath_block(mode: BathMode) -> np.ndarray:
    """Stationary 2x2 covariance ``[[N + 1/2 + Re M, Im M], [Im M, N + 1/2 - Re M]]``."""
    m = complex(mode.m_squeeze)
    n = mode.n_thermal + VACUUM_VARIANCE
    return np.array([[n + m.real, m.imag], [m.imag, n - m.real]])


def asymptotic_covariance(spec: ChannelSpec) -> np.ndarray:
    """Direct sum of the per-mode stationary covariance blocks."""
    return direct_sum(*[bath_block(m) for m in spec.modes])


def _damping(spec: ChannelSpec, t: float) -> np.ndarray:
    return np.repeat([np.exp(-m.gamma * t) for m in spec.modes], 2)


def evolve(state: PhaseSpaceMoments, spec: ChannelSpec, t: float) -> GaussianState:
    """State after time ``t`` in the channel.

    Args:
        state: Input Gaussian state.
        spec: One bath per mode.
        t: Elapsed time, nonnegative.

    Raises:
        CVLabError: For negative time.
    """
    if not np.isfinite(t) or t < 0:
        raise CVLabError(f"time must be nonnegative, got {t}")
    _check_modes(state, spec)
    g = _damping(spec, t)
    half = np.sqrt(g)
    cov = half[:, None] * state.cov * half[None, :]
    # each bath block sees a single damping factor, so row scaling suffices
    cov = cov + (1.0 - g)[:, None] * asymptotic_covariance(spec)
    return GaussianState(half * state.mean, 0.5 * (cov + cov.T))


def gaussian_noise_map(state: PhaseSpaceMoments, delta) -> GaussianState:
    """Random displacements with noise covariance ``delta``: ``cov -> cov + delta / 2``."""
    d = np.asarray(delta, dtype=float)
    if d.shape != state.cov.shape:
        raise DimensionError("noise matrix does not match the state")
    if np.max(np.abs(d - d.T)) > 1e-12 * max(1.0, np.max(np.abs(d))):
        raise CVLabError("noise matrix must be symmetric")
    if np.linalg.eigvalsh(d)[0] < -1e-12 * max(1.0, np.max(np.abs(d))):
        raise CVLabError("noise matrix must be positive semidefinite")
    return GaussianState(state.mean, state.cov + 0.5 * d)


# ----------------------------------------------------------------------------
# Single-mode closed forms

def bath_purity_parameters(mode: BathMode) -> tuple[float, float, float]:
    """Purity, squeezing and squeezing phase of the stationary bath state.

    Returns:
        ``(mu_inf, r_inf, phase)`` where the stationary covariance equals
        ``(cosh 2r I + sinh 2r R(phase)) / (2 mu_inf)`` and ``R(phase)`` is the
        reflection ``[[cos, sin], [sin, -cos]]``.
    """
    m = complex(mode.m_squeeze)
    n = mode.n_thermal
    mu_inf = 1.0 / np.sqrt((2 * n + 1) ** 2 - 4 * abs(m) ** 2)
    r_inf = 0.5 * np.arccosh(np.sqrt(1.0 + 4 * mu_inf ** 2 * abs(m) ** 2))
    return float(mu_inf), float(r_inf), float(np.angle(m))


def _single_mode(spec: ChannelSpec) -> BathMode:
    if spec.n_modes != 1:
        raise DimensionError("closed-form single-mode evolution needs a one-mode channel")
    return spec.modes[0]


def _check_initial(mu0: float, r0: float) -> None:
    if not (0 < mu0 <= 1):
        raise CVLabError(f"initial purity must lie in (0, 1], got {mu0}")
    if not np.isfinite(r0) or r0 < 0:
        raise CVLabError(f"squeezing must be a nonnegative real, got {r0}")


def purity_evolution(mu0: float, r0: float, phi0: float, spec: ChannelSpec, t: float) -> float:
    """Closed-form purity of a squeezed thermal state after time ``t``.

    The input is the centred state with covariance
    ``(cosh 2r0 I + sinh 2r0 R(phi0)) / (2 mu0)``, which is what
    ``DisplacedSqueezedThermal(0, r0, phi0, N)`` builds with ``mu0 = 1/(2N+1)``.
    Purity is best preserved for ``r0 = r_inf`` and ``phi0`` equal to the bath
    phase ``arg M``, where the evolution matches that of an unsqueezed state
    in an unsqueezed bath.

    Args:
        mu0: Initial purity.
        r0: Initial squeezing.
        phi0: Initial squeezing phase, same convention as ``squeezer_matrix``.
        spec: One-mode channel.
        t: Elapsed time.
    """
    _check_initial(mu0, r0)
    if t < 0:
        raise CVLabError("time must be nonnegative")
    mode = _single_mode(spec)
    mu_inf, r_inf, phase = bath_purity_parameters(mode)
    e = np.exp(-mode.gamma * t)
    k = (np.cosh(2 * r0) * np.cosh(2 * r_inf)
         - np.sinh(2 * r0) * np.sinh(2 * r_inf) * np.cos(phi0 - phase))
    ratio = mu0 / mu_inf
    inner = ratio ** 2 * (1 - e) ** 2 + e ** 2 + 2 * ratio * e * (1 - e) * k
    return float(mu0 / np.sqrt(inner))


def optimal_purity_evolution(mu0: float, mu_inf: float, gamma: float, t: float) -> float:
    """Purity of an unsqueezed input in an unsqueezed bath."""
    e = np.exp(-gamma * t)
    return float(mu0 * mu_inf / (mu0 + e * (mu_inf - mu0)))


def purity_has_interior_minimum(mu0: float, r0: float, mu_inf: float) -> bool:
    """Whether the purity dips below both endpoints in an unsqueezed bath."""
    return bool(np.cosh(2 * r0) > max(mu0 / mu_inf, mu_inf / mu0))


def nonclassical_depth_evolution(mu0: float, r0: float, spec: ChannelSpec, t: float,
                                 phi0: float = 0.0) -> float:
    """Closed-form nonclassical depth of a squeezed thermal state after time ``t``.

    Uses ``tau = [1 - k + sqrt(k^2 - mu^-2)] / 2``, clipped at zero, where
    ``k`` is the trace of the evolved covariance matrix.
    """
    _check_initial(mu0, r0)
    mode = _single_mode(spec)
    mu_inf, r_inf, _ = bath_purity_parameters(mode)
    e = np.exp(-mode.gamma * t)
    kappa = np.cosh(2 * r0) / mu0 * e + np.cosh(2 * r_inf) / mu_inf * (1 - e)
    mu = purity_evolution(mu0, r0, phi0, spec, t)
    tau = 0.5 * (1 - kappa + np.sqrt(max(kappa ** 2 - mu ** -2, 0.0)))
    return float(max(tau, 0.0))


# ----------------------------------------------------------------------------
# Two-mode squeezed vacuum in identical baths

def twb_sigma_entries(r: float, gamma: float, N: float, M: float, t: float) -> tuple[float, ...]:
    """The four combinations ``Sigma_1^2 .. Sigma_4^2`` for real bath squeezing ``M``.

    In the canonical convention the evolved covariance matrix has
    ``cov[q1, q1] = Sigma_1^2 + Sigma_3^2``, ``cov[q1, q2] = Sigma_1^2 - Sigma_3^2``,
    ``cov[p1, p1] = Sigma_2^2 + Sigma_4^2`` and ``cov[p1, p2] = Sigma_2^2 - Sigma_4^2``.
    """
    e = np.exp(-gamma * t)
    sp, sm = 0.25 * np.exp(2 * r), 0.25 * np.exp(-2 * r)
    dp = 0.25 * (1 + 2 * N + 2 * M) * (1 - e)
    dm = 0.25 * (1 + 2 * N - 2 * M) * (1 - e)
    return sp * e + dp, sm * e + dm, sm * e + dp, sp * e + dm


def twb_evolved_covariance(r: float, gamma: float, N: float, M: float, t: float) -> np.ndarray:
    """Evolved two-mode squeezed vacuum covariance assembled from ``Sigma_k^2``."""
    s1, s2, s3, s4 = twb_sigma_entries(r, gamma, N, M, t)
    a, b, c, d = s1 + s3, s2 + s4, s1 - s3, s2 - s4
    return np.array([[a, 0, c, 0], [0, b, 0, d], [c, 0, a, 0], [0, d, 0, b]])


def twb_separable_at(r: float, gamma: float, N: float, M: float, t: float) -> bool:
    """``Sigma_1^2 Sigma_4^2 >= 1/16`` and ``Sigma_2^2 Sigma_3^2 >= 1/16``."""
    s1, s2, s3, s4 = twb_sigma_entries(r, gamma, N, M, t)
    return bool(s1 * s4 >= 1 / 16 and s2 * s3 >= 1 / 16)


def twb_separability_time(r: float, gamma: float, n_th: float, n_s: float = 0.0) -> float | NeverSeparable:
    """Time after which a two-mode squeezed vacuum becomes separable.

    Both modes see identical squeezed thermal baths parameterized by their
    thermal and squeezing photon numbers. The binding condition is
    ``Sigma_2^2 Sigma_3^2 = 1/16``; with ``u = exp(gamma t) - 1``,
    ``a = 1 + 2 n_th``, ``b = 1 + 2 n_s`` and ``s = exp(-2r)`` it reads
    ``(a^2 - 1) u^2 + 2 (s a b - 1) u - (1 - s^2) = 0``. For ``n_s = 0`` the
    root reduces to ``ln[1 + (1 - exp(-2r)) / (2 n_th)] / gamma``.

    Returns:
        The threshold time, or ``NeverSeparable`` when the entanglement
        survives forever (zero temperature with ``s b <= 1``).
    """
    if r < 0 or gamma <= 0 or n_th < 0 or n_s < 0:
        raise CVLabError("need r >= 0, gamma > 0 and nonnegative photon numbers")
    if r == 0:
        return 0.0
    a, b, s = 1 + 2 * n_th, 1 + 2 * n_s, np.exp(-2 * r)
    quad = 4 * n_th * (1 + n_th)
    lin = s * a * b - 1
    if quad == 0:
        if lin <= 0:
            return NeverSeparable("entanglement survives a zero-temperature bath at every time")
        u = (1 - s * s) / (2 * lin)
    else:
        # stable form of the positive root
        disc = np.sqrt(lin * lin + quad * (1 - s * s))
        u = (1 - s * s) / (lin + disc) if lin > 0 else (disc - lin) / quad
    return float(np.log1p(u) / gamma)


def twb_separability_time_unsqueezed(r: float, gamma: float, n_th: float) -> float | NeverSeparable:
    """``ln[1 + (1 - exp(-2r)) / (2 n_th)] / gamma``, the unsqueezed-bath threshold."""
    if n_th == 0:
        return NeverSeparable("entanglement survives a zero-temperature bath at every time")
    return float(np.log1p((1 - np.exp(-2 * r)) / (2 * n_th)) / gamma)


def min_pt_eigenvalue(state: PhaseSpaceMoments, party_b: Sequence[int]) -> float:
    """Smallest symplectic eigenvalue after transposing ``party_b``."""
    return float(symplectic_spectrum(partial_transpose(state, party_b).cov)[0])


def separability_time_numeric(state: PhaseSpaceMoments, spec: ChannelSpec,
                              partition: Iterable[int], t_max: float,
                              tol: float = BISECTION_TOL) -> float | None:
    """First time at which the transposed party stops witnessing entanglement.

    The bracket starts at ``t_max / 2^20`` and doubles until the smallest
    partially transposed symplectic eigenvalue reaches ``1/2``, then bisects
    to ``tol`` in time.

    Args:
        state: Initial state.
        spec: Channel acting on every mode.
        partition: 0-based modes that are partially transposed.
        t_max: Longest time examined.
        tol: Time resolution.

    Returns:
        The crossing time, ``0.0`` for an initially separable partition, or
        ``None`` when no crossing happens before ``t_max``.
    """
    if not t_max > 0:
        raise CVLabError("t_max must be positive")
    party = list(partition)

    def gap(t: float) -> float:
        return min_pt_eigenvalue(evolve(state, spec, t), party) - VACUUM_VARIANCE

    if gap(0.0) >= 0:
        return 0.0
    lo, hi = 0.0, t_max / 2 ** 20
    while gap(hi) < 0:
        if hi >= t_max:
            return None
        lo, hi = hi, min(2 * hi, t_max)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def t_state_mode_one_time(N1: float, gamma: float, n_th: float) -> float | NeverSeparable:
    """Separability time of the first mode of the ``T`` state in thermal baths."""
    if n_th == 0:
        return NeverSeparable("the first mode stays entangled in a zero-temperature bath")
    return float(np.log(1 + (np.sqrt(N1 * (N1 + 1)) - N1) / n_th) / gamma)


__all__ = [
    "BathMode", "ChannelSpec", "BathPhysicalParams", "NeverSeparable", "bath_block",
    "asymptotic_covariance", "evolve", "gaussian_noise_map", "bath_purity_parameters",
    "purity_evolution", "optimal_purity_evolution", "purity_has_interior_minimum",
    "nonclassical_depth_evolution", "twb_sigma_entries", "twb_evolved_covariance",
    "twb_separable_at", "twb_separability_time",
    "twb_separability_time_unsqueezed", "min_pt_eigenvalue",
    "separability_time_numeric", "t_state_mode_one_time",
]
