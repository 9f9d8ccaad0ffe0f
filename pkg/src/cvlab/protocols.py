"""Teleportation, telecloning and conditional state engineering with twin beams.

A twin beam with parameter ``lam = tanh r`` carries ``N_lam = 2 lam^2 / (1 - lam^2)``
photons in total. All quadrature quantities use the canonical convention
(vacuum variance 1/2); homodyne outcomes are values of ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, stats

from .channels import BathPhysicalParams, gaussian_noise_map, twb_sigma_entries
from .errors import CVLabError
from .states import GaussianState, PhaseSpaceMoments, wigner_at


def lambda_from_r(r: float) -> float:
    return float(np.tanh(r))


def r_from_lambda(lam: float) -> float:
    _check_lambda(lam)
    return float(np.arctanh(lam))


def twb_photons(lam: float) -> float:
    """Total mean photon number ``2 lam^2 / (1 - lam^2)`` of the twin beam."""
    _check_lambda(lam)
    return 2 * lam * lam / (1 - lam * lam)


def _check_lambda(lam: float) -> None:
    if not (0 <= lam < 1):
        raise CVLabError(f"twin-beam parameter must lie in [0, 1), got {lam}")


def _check_eta(eta: float) -> None:
    if not (0 < eta <= 1):
        raise CVLabError(f"efficiency must lie in (0, 1], got {eta}")


# ----------------------------------------------------------------------------
# Teleportation

def teleport_fidelity_ideal(lam: float) -> float:
    """Coherent-state fidelity ``(1 + lam) / 2`` with a pure twin beam."""
    _check_lambda(lam)
    return 0.5 * (1 + lam)


def classical_fidelity_limit(omega: float) -> float:
    """Best measure-and-prepare fidelity ``(1 + Omega) / (2 + Omega)`` for a Gaussian prior."""
    if omega < 0:
        raise CVLabError("prior width must be nonnegative")
    if np.isinf(omega):
        return 1.0
    return (1 + omega) / (2 + omega)


@dataclass(frozen=True)
class TeleportationSetup:
    """Twin-beam teleportation through identical squeezed thermal baths.

    Attributes:
        twb_r: Squeezing of the shared twin beam.
        gamma: Damping rate of both baths.
        n_th: Thermal photons of the baths.
        n_s: Squeezing photons of the baths.
        eta: Efficiency of the joint measurement.
    """

    twb_r: float
    gamma: float = 1.0
    n_th: float = 0.0
    n_s: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if self.twb_r < 0:
            raise CVLabError("twin-beam squeezing must be nonnegative")
        if self.gamma < 0 or self.n_th < 0 or self.n_s < 0:
            raise CVLabError("channel parameters must be nonnegative")
        _check_eta(self.eta)

    @property
    def lam(self) -> float:
        return lambda_from_r(self.twb_r)


def _added_noise(setup: TeleportationSetup, t: float) -> tuple[float, float]:
    bath = BathPhysicalParams(setup.n_th, setup.n_s)
    _, s2, s3, _ = twb_sigma_entries(setup.twb_r, setup.gamma, bath.N, bath.M, t)
    d_eta = (1 - setup.eta) / setup.eta
    return 4 * s3 + d_eta, 4 * s2 + d_eta


def teleportation_cp_map_sigma(setup: TeleportationSetup, t: float = 0.0) -> np.ndarray:
    """Noise matrix ``Sigma`` of the teleportation channel after time ``t``.

    The teleported covariance matrix is ``cov_in + Sigma`` in canonical units,
    with ``Sigma = Diag(4 Sigma_3^2 + D_eta^2, 4 Sigma_2^2 + D_eta^2)`` and
    ``D_eta^2 = (1 - eta) / eta``.
    """
    if t < 0:
        raise CVLabError("time must be nonnegative")
    return np.diag(_added_noise(setup, t))


def teleport_output(state: PhaseSpaceMoments, sigma) -> GaussianState:
    """Apply the teleportation channel, a Gaussian noise map with ``Delta = 2 Sigma``."""
    return gaussian_noise_map(state, 2 * np.asarray(sigma, dtype=float))


def teleport_fidelity_squeezed(setup: TeleportationSetup, t: float, xi: float) -> float:
    """Fidelity for a displaced squeezed input with ``cov = Diag(e^{-2 xi}, e^{2 xi}) / 2``."""
    sq, sp = _added_noise(setup, t)
    return float(1.0 / np.sqrt((np.exp(-2 * xi) + sq) * (np.exp(2 * xi) + sp)))


def teleport_fidelity_noisy(setup: TeleportationSetup, t: float) -> tuple[float, float]:
    """Best fidelity over input squeezing and the squeezing that reaches it.

    Returns:
        ``(F, xi_max)`` with ``F = 1 / (1 + sqrt(S_q S_p))`` and
        ``xi_max = ln(S_p / S_q) / 4`` for added noises ``S_q, S_p``. At unit
        efficiency these are ``(1 + 4 Sigma_2 Sigma_3)^-1`` and
        ``ln(Sigma_2 / Sigma_3) / 2``.
    """
    sq, sp = _added_noise(setup, t)
    return float(1.0 / (1.0 + np.sqrt(sq * sp))), float(0.25 * np.log(sp / sq))


def teleport_fidelity_asymptotic(n_th: float) -> float:
    """Long-time limit ``1 / (2 (1 + n_th))`` of the optimized noisy fidelity."""
    return 1.0 / (2.0 * (1.0 + n_th))


def overlap_fidelity_numeric(pure_input: PhaseSpaceMoments, output: PhaseSpaceMoments,
                             width: float = 10.0) -> float:
    """``Tr[rho_in rho_out] = 2 pi int W_in W_out`` by adaptive quadrature (one mode)."""
    if pure_input.n_modes != 1 or output.n_modes != 1:
        raise CVLabError("numeric overlap is implemented for single-mode states")
    centre = pure_input.mean
    scale = width * np.sqrt(max(np.max(np.diag(pure_input.cov)), np.max(np.diag(output.cov))))

    def integrand(p, q):
        x = np.array([q, p])
        return wigner_at(pure_input, x) * wigner_at(output, x)

    val, _ = integrate.dblquad(integrand, centre[0] - scale, centre[0] + scale,
                               centre[1] - scale, centre[1] + scale, epsabs=1e-12, epsrel=1e-10)
    return float(2 * np.pi * val)


def ips_effective_transmissivity(tau: float, eta_onoff: float) -> float:
    """``tau_eff = 1 - eta (1 - tau)``: loss at the detector folds into the beam splitter."""
    if not (0 <= tau <= 1 and 0 <= eta_onoff <= 1):
        raise CVLabError("transmissivity and efficiency must lie in [0, 1]")
    return 1 - eta_onoff * (1 - tau)


def ips_teleport_fidelity(lam: float, tau_eff: float) -> float:
    """Coherent-state fidelity with a photon-subtracted twin beam as resource."""
    _check_lambda(lam)
    if not (0 <= tau_eff <= 1):
        raise CVLabError("effective transmissivity must lie in [0, 1]")
    t, l = tau_eff, lam
    num = (1 + l) * (1 + l * t) * (1 - l * l * t) * (2 - 2 * l * t + l * l * t)
    den = (1 + l * l * t) * (1 + (1 - t) * l) * (2 - (2 + (1 - t) * l) * l * t)
    return 0.5 * num / den


def ips_improvement_threshold(tau_eff: float, grid: int = 2000) -> float | None:
    """Largest ``lam`` below which photon subtraction beats the plain twin beam.

    Returns:
        The crossing point, ``1.0`` when subtraction helps on the whole range
        and ``None`` when it never helps.
    """
    lams = np.linspace(1e-6, 1 - 1e-6, grid)
    gain = np.array([ips_teleport_fidelity(l, tau_eff) - teleport_fidelity_ideal(l) for l in lams])
    if np.all(gain > 0):
        return 1.0
    if not np.any(gain > 0):
        return None
    first_bad = int(np.argmax(gain <= 0))
    if first_bad == 0:
        return None
    f = lambda l: ips_teleport_fidelity(l, tau_eff) - teleport_fidelity_ideal(l)  # noqa: E731
    return float(optimize.brentq(f, lams[first_bad - 1], lams[first_bad], xtol=1e-14))


# ----------------------------------------------------------------------------
# Telecloning

@dataclass(frozen=True)
class CloneReport:
    fidelities: tuple[float, ...]
    symmetric: bool
    N2: float
    N3: float

    def to_dict(self) -> dict:
        return {"fidelities": list(self.fidelities), "symmetric": self.symmetric,
                "N2": self.N2, "N3": self.N3}


def teleclone_symmetric_fidelity(N: float) -> float:
    """Clone fidelity ``(2 + 3N - 2 sqrt(N (2N + 1)))^-1``; maximal (2/3) at ``N = 1/2``."""
    if N < 0:
        raise CVLabError("photon number must be nonnegative")
    return 1.0 / (2 + 3 * N - 2 * np.sqrt(N * (2 * N + 1)))


def teleclone_asymmetric_fidelities(N2: float, N3: float) -> tuple[float, float]:
    """Fidelities ``(F2, F3)`` of the two clones for photon numbers ``N2, N3``.

    ``F_h = (2 + 2 N_h + N_k - 2 sqrt(N_h (N_1 + 1)))^-1`` with ``N_1 = N_2 + N_3``.
    """
    if N2 < 0 or N3 < 0:
        raise CVLabError("photon numbers must be nonnegative")
    n1 = N2 + N3

    def fid(nh, nk):
        return 1.0 / (2 + 2 * nh + nk - 2 * np.sqrt(nh * (n1 + 1)))

    return float(fid(N2, N3)), float(fid(N3, N2))


def teleclone_optimal_family(F3: float) -> tuple[float, float]:
    """Photon numbers maximizing ``F2`` at fixed ``F3``: ``N2 = 1/F3 - 1``, ``N3 = 1/(4/F3 - 4)``."""
    if not (0.5 <= F3 < 1):
        raise CVLabError("target fidelity must lie in [1/2, 1)")
    return 1 / F3 - 1, 1 / (4 / F3 - 4)


def teleclone_tradeoff(F3: float) -> float:
    """Best ``F2`` at fixed ``F3``: ``4 (1 - F3) / (4 - 3 F3)``."""
    return 4 * (1 - F3) / (4 - 3 * F3)


def teleclone_report(N2: float, N3: float) -> CloneReport:
    f2, f3 = teleclone_asymmetric_fidelities(N2, N3)
    return CloneReport((f2, f3), bool(N2 == N3), float(N2), float(N3))


# ----------------------------------------------------------------------------
# Conditional states from on/off detection of one beam

@dataclass(frozen=True)
class OnOffReport:
    """Mode ``a`` after a click on mode ``b`` of a twin beam.

    ``wigner_origin`` is normalized over quadrature space, i.e. half the
    value normalized over the complex amplitude plane.
    """

    p_click: float
    wigner_origin: float
    fano: float

    def to_dict(self) -> dict:
        return {"p_click": self.p_click, "wigner_origin": self.wigner_origin, "fano": self.fano}


def onoff_conditional(lam: float, eta: float) -> OnOffReport:
    """Click probability, Wigner function at the origin and Fano factor."""
    _check_lambda(lam)
    _check_eta(eta)
    n = twb_photons(lam)
    en = eta * n
    p1 = en / (2 + en)
    w0 = -(1 / np.pi) / (1 + n) * (2 + en) / (2 * (1 + n) - en)
    fano = (2 + n) / 2 * (1 + 2 / (2 + en) - 4 * (2 + n) / (4 + n * (4 + en)))
    return OnOffReport(float(p1), float(w0), float(fano))


def onoff_conditional_ws_origin(lam: float, eta: float, s: float) -> float:
    """s-ordered quasi-probability at the origin, quadrature normalization.

    Negative for every ``s`` in ``(-1, 0]`` and vanishing as ``s -> -1``.
    """
    _check_lambda(lam)
    _check_eta(eta)
    if not (-1 < s <= 0):
        raise CVLabError("ordering parameter must lie in (-1, 0]")
    n = twb_photons(lam)
    en = eta * n
    return float(-(1 + s) * (2 + en) / (np.pi * (1 + n - s) * (2 * (1 + n - s) - en * (1 + s))))


# ----------------------------------------------------------------------------
# Conditional states from homodyne detection of one beam

@dataclass(frozen=True)
class HomodyneReport:
    """Mode ``a`` after measuring ``q`` on mode ``b`` of a twin beam (canonical units).

    Attributes:
        var_q: Variance of ``q`` (squeezed when below 1/2).
        var_p: Variance of ``p``.
        n_th: Thermal photons of the conditional Gaussian state.
        alpha: Complex amplitude of the conditional state.
        xi: Squeezing parameter, ``ln(var_p / var_q) / 4``.
        p_density: Outcome probability density, averaged over the bin.
        photons: Mean photon number of the conditional state.
        squeezed: Whether the (binned) conditional state is squeezed in ``q``.
        max_bin_width: Largest bin width keeping squeezing to second order.
    """

    var_q: float
    var_p: float
    n_th: float
    alpha: complex
    xi: float
    p_density: float
    photons: float
    squeezed: bool
    max_bin_width: float

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("var_q", "var_p", "n_th", "xi", "p_density", "photons",
                                              "squeezed", "max_bin_width")}
        out["alpha_re"], out["alpha_im"] = float(self.alpha.real), float(self.alpha.imag)
        return out


def _binned_spread(x: float, bin_width: float, sd: float) -> tuple[float, float, float]:
    """Probability density, mean and variance of the outcome inside one bin."""
    lo, hi = (x - bin_width / 2) / sd, (x + bin_width / 2) / sd
    dist = stats.truncnorm(lo, hi, loc=0.0, scale=sd)
    mass = stats.norm.cdf(hi) - stats.norm.cdf(lo)
    return float(mass / bin_width), float(dist.mean()), float(dist.var())


def homodyne_conditional(lam: float, eta: float, x: float, bin_width: float = 0.0) -> HomodyneReport:
    """Conditional state after a homodyne ``q`` outcome ``x`` with efficiency ``eta``.

    For a finite bin the state is the mixture of the conditional states
    over the bin; its ``q`` variance grows by ``k^2 Var(outcome | bin)`` where
    ``k`` is the slope of the conditional mean. To second order this adds
    ``k^2 bin_width^2 / 12`` independently of ``x``.

    Args:
        lam: Twin-beam parameter.
        eta: Homodyne efficiency.
        x: Outcome (bin centre).
        bin_width: Detector resolution; 0 for an ideal continuous readout.
    """
    _check_lambda(lam)
    _check_eta(eta)
    if bin_width < 0:
        raise CVLabError("bin width must be nonnegative")
    n = twb_photons(lam)
    en = eta * n
    var_q = 0.5 * (1 + n * (1 - eta)) / (1 + en)
    var_p = 0.5 * (1 + n)
    outcome_var = 0.5 * (1 + n) + (1 - eta) / (2 * eta)
    slope = eta * np.sqrt(n * (n + 2)) / (1 + en)
    sd = np.sqrt(outcome_var)
    if bin_width > 0:
        density, centre, spread = _binned_spread(x, bin_width, sd)
    else:
        density = float(stats.norm.pdf(x, scale=sd))
        centre, spread = x, 0.0
    var_q_total = var_q + slope ** 2 * spread
    n_th = 0.5 * (np.sqrt((1 + n) * (1 + n * (1 - eta)) / (1 + en)) - 1)
    mean_q = slope * centre
    alpha = complex(mean_q / np.sqrt(2), 0.0)
    photons = 0.5 * (var_q_total + var_p + mean_q ** 2) - 0.5
    if eta > 0.5:
        max_bin = float(np.sqrt(6 * (2 * eta - 1) * (1 + en) / (eta ** 2 * (n + 2))))
    else:
        max_bin = 0.0
    return HomodyneReport(float(var_q_total), float(var_p), float(n_th), alpha,
                          float(0.25 * np.log(var_p / var_q)), float(density),
                          float(photons), bool(var_q_total < 0.5), max_bin)


def homodyne_outcome_density(lam: float, eta: float, x: float) -> float:
    """Gaussian density of the ``q`` outcome, variance ``(1 + N_lam)/2 + (1 - eta)/(2 eta)``."""
    return homodyne_conditional(lam, eta, x).p_density


def homodyne_photons(lam: float, x: float) -> float:
    """Photons ``x^2 N(2+N) / (2 (1+N)^2) + N^2 / (4 (1+N))`` after an ideal outcome ``x``."""
    n = twb_photons(lam)
    return float(0.5 * x * x * n * (2 + n) / (1 + n) ** 2 + 0.25 * n * n / (1 + n))
