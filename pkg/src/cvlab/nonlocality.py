"""Bell-type tests for two- and three-mode continuous-variable states.

Three families of local dichotomic observables are covered:

* displaced parity, whose correlator is the Wigner function up to ``pi^n``
  in quadrature normalization;
* pseudospin operators, either the Fock-space parity blocks or the
  phase-space representation with symbols ``sgn(q)`` and ``-pi delta``;
* sign-binned homodyne outcomes.

States are :class:`~cvlab.states.PhaseSpaceMoments` or signed
:class:`~cvlab.conditioning.GaussianMixture` objects. Displacements are
complex amplitudes ``alpha`` with quadrature mean ``sqrt(2) (Re, Im)``.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import optimize, special, stats

from .conditioning import GaussianMixture, onoff_click
from .errors import CVLabError, ConvergenceError, DimensionError
from .states import (
    PhaseSpaceMoments,
    TriT,
    TriV3,
    TWB,
    Vacuum,
    amplitude_to_mean,
    apply_symplectic,
    beam_splitter_matrix,
    build,
    embed,
    gaussian_density,
    tensor,
)

LOCAL_BOUND = 2.0
SERIES_TOL = 1e-10
_BOUND_TOL = 1e-9


def quantum_bound(n_parties: int) -> float:
    """Largest value ``2^((n+1)/2)`` a Bell-Klyshko combination can reach."""
    return 2.0 ** ((n_parties + 1) / 2)


@dataclass(frozen=True)
class BellResult:
    """Value of a Bell combination at one parameter point.

    Attributes:
        test: One of ``DP2``, ``PS2``, ``H2``, ``DP3``, ``PS3``.
        state: Free-form state tag such as ``"twb"`` or ``"ips"``.
        params: Parameter point that produced ``value``.
        value: The Bell combination.
    """

    test: str
    state: str
    params: dict = field(default_factory=dict)
    value: float = 0.0

    def __post_init__(self):
        if self.test not in ("DP2", "PS2", "H2", "DP3", "PS3"):
            raise CVLabError(f"unknown Bell test {self.test!r}")
        n = 3 if self.test.endswith("3") else 2
        if abs(self.value) > quantum_bound(n) + _BOUND_TOL:
            raise CVLabError(f"Bell value {self.value} exceeds the quantum bound")

    @property
    def n_parties(self) -> int:
        return 3 if self.test.endswith("3") else 2

    @property
    def violation(self) -> bool:
        return abs(self.value) > LOCAL_BOUND

    def to_dict(self) -> dict:
        return {"test": self.test, "state": self.state, "params": dict(self.params),
                "value": self.value, "violation": self.violation}


def _as_mixture(state) -> GaussianMixture:
    if isinstance(state, GaussianMixture):
        return state
    if isinstance(state, PhaseSpaceMoments):
        return GaussianMixture.from_state(state)
    raise CVLabError(f"cannot evaluate correlations for {type(state).__name__}")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CVLAB_THREADS", "1")))
    except ValueError:
        return 1


def _parallel_map(fn: Callable, items: Sequence) -> list:
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# Displaced parity

def dp_correlation(state, alphas: Sequence[complex]) -> float:
    """Expectation of the product of displaced parities ``prod_k D(a_k) (-1)^n D(a_k)^dag``.

    Equals ``pi^n W(x)`` with ``W`` normalized over quadrature space and
    ``x`` the quadrature point of the displacements.

    Raises:
        DimensionError: If the number of displacements differs from the mode count.
    """
    mix = _as_mixture(state)
    if len(alphas) != mix.n_modes:
        raise DimensionError(f"need {mix.n_modes} displacements, got {len(alphas)}")
    x = np.concatenate([amplitude_to_mean(a) for a in alphas])
    return float(np.pi ** mix.n_modes * mix.wigner(x))


def twb_dp_correlation(r: float, alpha1: complex, alpha2: complex) -> float:
    """Closed-form displaced-parity correlator of the twin beam."""
    a1, a2 = complex(alpha1), complex(alpha2)
    cross = 2 * (a1 * a2).real
    expo = -2 * np.cosh(2 * r) * (abs(a1) ** 2 + abs(a2) ** 2) + 2 * np.sinh(2 * r) * cross
    return float(np.exp(expo))


def dp_displacements(parameterization: str, J: float) -> tuple[complex, complex, complex, complex]:
    """Displacement quadruplet ``(a1, a2, a1', a2')`` for a named two-mode setting.

    ``BW`` keeps the unprimed settings at the origin and moves the primed
    ones along the squeezed difference quadrature. ``Optimized`` uses
    ``a1 = -a2 = sqrt(J)``, ``a1' = -a2' = -3 sqrt(J)``. ``TWBA`` uses
    ``a1 = a2 / 2 = a1' / 3 = sqrt(J)`` with ``a2' = 0``.
    """
    if J < 0:
        raise CVLabError("J must be nonnegative")
    s = np.sqrt(J)
    key = parameterization.lower()
    if key == "bw":
        return 0j, 0j, complex(s), complex(-s)
    if key == "optimized":
        return complex(s), complex(-s), complex(-3 * s), complex(3 * s)
    if key == "twba":
        return complex(s), complex(2 * s), complex(3 * s), 0j
    raise CVLabError(f"unknown displacement setting {parameterization!r}")


def bell2_from_correlator(corr: Callable, a1, a2, a1p, a2p) -> float:
    """CHSH combination ``E(a1,a2) + E(a1,a2') + E(a1',a2) - E(a1',a2')``."""
    return corr(a1, a2) + corr(a1, a2p) + corr(a1p, a2) - corr(a1p, a2p)


def bell2_dp(state, displacements: Sequence[complex]) -> float:
    """CHSH value of a two-mode state for displacements ``(a1, a2, a1', a2')``."""
    return bell2_from_correlator(lambda x, y: dp_correlation(state, [x, y]), *displacements)


def bell2_dp_twb(r: float, J: float, parameterization: str = "BW") -> float:
    """Twin-beam CHSH value assembled from four Wigner-function evaluations."""
    return bell2_dp(build(TWB(r)), dp_displacements(parameterization, J))


def bell2_dp_twb_closed(r: float, J: float, parameterization: str = "BW") -> float:
    """Closed forms of the twin-beam displaced-parity CHSH value.

    ``BW``: ``1 + 2 exp(-2J cosh 2r) - exp(-4J e^{2r})``.
    ``Optimized``: ``exp(-4J e^{2r}) + 2 exp(-20J cosh 2r + 12J sinh 2r) - exp(-36J e^{2r})``.
    """
    if J < 0:
        raise CVLabError("J must be nonnegative")
    key = parameterization.lower()
    e2r = np.exp(2 * r)
    if key == "bw":
        return float(1 + 2 * np.exp(-2 * J * np.cosh(2 * r)) - np.exp(-4 * J * e2r))
    if key == "optimized":
        mid = np.exp(-20 * J * np.cosh(2 * r) + 12 * J * np.sinh(2 * r))
        return float(np.exp(-4 * J * e2r) + 2 * mid - np.exp(-36 * J * e2r))
    return bell2_from_correlator(lambda x, y: twb_dp_correlation(r, x, y), *dp_displacements(key, J))


def bw_asymptotic_maximum() -> float:
    """Large-squeezing maximum ``1 + 3 * 2^(-4/3)`` of the ``BW`` setting."""
    return 1 + 3 * 2 ** (-4 / 3)


# ----------------------------------------------------------------------------
# Photon-subtracted twin beam

@dataclass(frozen=True)
class IPSComponents:
    """Per-component coefficients of the photon-subtracted twin-beam Wigner function.

    Component ``k`` is ``exp{(f_k - b)|a|^2 + (g_k - b)|b|^2 + c_k (a b + a* b*)}``
    with signed amplitude ``16 C_k / (x_k y_k - 4 B^2 (1 - tau)^2)``.
    """

    A: float
    B: float
    a: float
    b: float
    tau: float
    C: np.ndarray
    x: np.ndarray
    y: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    N: np.ndarray

    @property
    def coupling(self) -> np.ndarray:
        return 2 * self.B * self.tau + self.h

    @property
    def det(self) -> np.ndarray:
        return (self.b - self.f) * (self.b - self.g) - self.coupling ** 2

    @property
    def amplitude(self) -> np.ndarray:
        return 16 * self.C / (self.x * self.y - 4 * self.B ** 2 * (1 - self.tau) ** 2)

    @property
    def p11(self) -> float:
        return float(np.sum(self.amplitude / self.det))


def _check_ips(lam: float, tau_eff: float) -> None:
    if not (0 <= lam < 1):
        raise CVLabError(f"twin-beam parameter must lie in [0, 1), got {lam}")
    if not (0 <= tau_eff <= 1):
        raise CVLabError(f"effective transmissivity must lie in [0, 1], got {tau_eff}")


def ips_components(lam: float, tau_eff: float) -> IPSComponents:
    """Coefficients of the four Gaussian terms of the photon-subtracted twin beam."""
    _check_ips(lam, tau_eff)
    r = np.arctanh(lam)
    A, B, t = np.cosh(2 * r), np.sinh(2 * r), tau_eff
    a = 2 * (A * (1 - t) + t)
    b = 2 * (A * t + (1 - t))
    C = np.array([1.0, -2.0, -2.0, 4.0])
    x = np.array([a, a + 2, a, a + 2])
    y = np.array([a, a, a + 2, a + 2])
    den = x * y - 4 * B ** 2 * (1 - t) ** 2
    N = 4 * t * (1 - t) / den
    f = N * (x * B ** 2 + 4 * B ** 2 * (1 - A) * (1 - t) + y * (1 - A) ** 2)
    g = N * (x * (1 - A) ** 2 + 4 * B ** 2 * (1 - A) * (1 - t) + y * B ** 2)
    h = N * ((x + y) * B * (1 - A) + 2 * B * (B ** 2 + (1 - A) ** 2) * (1 - t))
    return IPSComponents(A, B, a, b, t, C, x, y, f, g, h, N)


def ips_p11(lam: float, tau_eff: float) -> float:
    """Double-click probability of the photon-subtraction stage."""
    return ips_components(lam, tau_eff).p11


def ips_wigner(lam: float, tau_eff: float) -> GaussianMixture:
    """Photon-subtracted twin beam as a four-term signed Gaussian mixture.

    Raises:
        CVLabError: When the double-click probability vanishes (``lam = 0``
            or ``tau_eff = 1``), so the conditional state is undefined.
    """
    comp = ips_components(lam, tau_eff)
    p11 = comp.p11
    if not p11 > 1e-300 or tau_eff >= 1:
        raise CVLabError("double-click probability vanishes; no conditional state")
    z = np.diag([1.0, -1.0])
    covs, weights = [], []
    for k in range(4):
        c = comp.coupling[k]
        prec = np.block([[(comp.b - comp.f[k]) * np.eye(2), -c * z],
                         [-c * z, (comp.b - comp.g[k]) * np.eye(2)]])
        covs.append(np.linalg.inv(prec))
        weights.append(comp.amplitude[k] / (comp.det[k] * p11))
    return GaussianMixture(np.array(weights), np.zeros((4, 4)), np.array(covs))


def ips_from_detection(lam: float, tau_eff: float) -> GaussianMixture:
    """Photon-subtracted twin beam built from beam splitters and ideal on/off clicks.

    Modes ``(a, b)`` carry the twin beam, ``(c, d)`` start in vacuum; each
    pair meets on a beam splitter of transmissivity ``tau_eff`` and both
    reflected modes must click.
    """
    _check_ips(lam, tau_eff)
    twb = build(TWB(np.arctanh(lam)))
    state = tensor(twb, build(Vacuum(2)))
    phi = np.arccos(np.sqrt(tau_eff))
    bs = beam_splitter_matrix(phi)
    state = apply_symplectic(state, embed(bs, [0, 2], 4))
    state = apply_symplectic(state, embed(bs, [1, 3], 4))
    _, mix = onoff_click(state, [2, 3])
    return mix


def teleport_fidelity_from_resource(resource) -> float:
    """Average coherent-state teleportation fidelity with a two-mode resource.

    The output noise is the distribution of ``(q_a - q_b, p_a + p_b)``; each
    Gaussian term contributes ``w / sqrt(det(I + S))`` for centered terms.
    """
    mix = _as_mixture(resource)
    if mix.n_modes != 2:
        raise DimensionError("teleportation resource must have two modes")
    m = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
    total = 0.0
    for w, mu, cov in zip(mix.weights, mix.means, mix.covs):
        s = np.eye(2) + m @ cov @ m.T
        d = m @ mu
        total += w * np.exp(-0.5 * d @ np.linalg.solve(s, d)) / np.sqrt(np.linalg.det(s))
    return float(total)


# ----------------------------------------------------------------------------
# Twin beam with an added photon

def twba_click_probability(N3: float, eta: float) -> float:
    """Probability ``eta N3 / (1 + eta N3)`` of a click on the idler mode."""
    return eta * N3 / (1 + eta * N3)


def twba_wigner(N1: float, N2: float, N3: float, eta: float = 1.0) -> GaussianMixture:
    """Modes 1 and 2 of the ``T`` state after a click on mode 3.

    The result has two terms: the unconditioned marginal with weight
    ``1 / P1`` and the no-click conditional with weight ``-1 / (eta N3)``.

    Raises:
        CVLabError: If ``N1 != N2 + N3`` or the click probability vanishes.
    """
    if not np.isclose(N1, N2 + N3, rtol=1e-12, atol=1e-12):
        raise CVLabError("photon numbers must satisfy N1 = N2 + N3")
    if not (0 < eta <= 1):
        raise CVLabError(f"efficiency must lie in (0, 1], got {eta}")
    if N2 < 0 or N3 < 0:
        raise CVLabError("photon numbers must be nonnegative")
    if eta * N3 <= 0:
        raise CVLabError("click probability vanishes; no conditional state")
    full = build(TriT(N2, N3))
    keep = np.array([0, 1, 2, 3])
    v12 = full.cov[np.ix_(keep, keep)]
    c = full.cov[np.ix_(keep, [4, 5])]
    v33 = full.cov[np.ix_([4, 5], [4, 5])] + (2 - eta) / (2 * eta) * np.eye(2)
    cond = v12 - c @ np.linalg.solve(v33, c.T)
    p1 = twba_click_probability(N3, eta)
    weights = np.array([1 / p1, -1 / (eta * N3)])
    return GaussianMixture(weights, np.zeros((2, 4)), np.array([v12, 0.5 * (cond + cond.T)]))


def twba_from_detection(N2: float, N3: float, eta: float = 1.0) -> GaussianMixture:
    """Same state as :func:`twba_wigner`, built by generic click conditioning."""
    _, mix = onoff_click(build(TriT(N2, N3)), [2], eta)
    return mix


# ----------------------------------------------------------------------------
# Sweeps

def log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` logarithmically spaced points between ``lo`` and ``hi``."""
    if lo <= 0 or hi <= 0 or n < 1:
        raise CVLabError("log grid needs positive bounds and at least one point")
    return np.geomspace(lo, hi, n)


def _refine_log(fn: Callable[[float], float], grid: np.ndarray, best: int) -> tuple[float, float]:
    """One midpoint-refinement pass around the best grid point."""
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    fine = np.geomspace(lo, hi, 21) if lo > 0 else np.linspace(lo, hi, 21)
    vals = [fn(j) for j in fine]
    i = int(np.argmax(vals))
    return float(fine[i]), float(vals[i])


def bell2_dp_sweep(state_fn: Callable[[float], object], parameterization: str,
                   params: Iterable[float], Js: Iterable[float], state_tag: str = "state",
                   refine: bool = True, rows: list | None = None) -> BellResult:
    """Largest ``|B2|`` over a grid of state parameters and displacement scales.

    Args:
        state_fn: Maps a state parameter to a two-mode state or mixture.
        parameterization: Displacement setting understood by :func:`dp_displacements`.
        params: State parameters to scan.
        Js: Displacement scales to scan (refined once around each best point).
        state_tag: Label stored in the result and in ``rows``.
        refine: Whether to run one midpoint refinement in ``J``.
        rows: Optional list that receives one CSV row per grid point.
    """
    Js = np.asarray(list(Js), dtype=float)
    params = list(params)

    def scan(p):
        st = state_fn(p)
        fn = lambda j: abs(bell2_dp(st, dp_displacements(parameterization, j)))  # noqa: E731
        vals = np.array([fn(j) for j in Js])
        best = int(np.argmax(vals))
        j_best, v_best = float(Js[best]), float(vals[best])
        if refine and Js.size > 2:
            j_ref, v_ref = _refine_log(fn, Js, best)
            if v_ref > v_best:
                j_best, v_best = j_ref, v_ref
        return vals, j_best, v_best

    results = _parallel_map(scan, params)
    top = None
    for p, (vals, j_best, v_best) in zip(params, results):
        if rows is not None:
            rows.extend(("DP2", state_tag, p, j, v) for j, v in zip(Js, vals))
        if top is None or v_best > top[2]:
            top = (p, j_best, v_best)
    if top is None:
        raise CVLabError("empty sweep grid")
    return BellResult("DP2", state_tag, {"param": top[0], "J": top[1],
                                         "parameterization": parameterization}, top[2])


SWEEP_HEADER = ("test", "state", "param1", "param2", "bell_value", "violation")


def write_sweep_csv(rows: Iterable[Sequence], handle: io.TextIOBase | None = None) -> str:
    """Serialize sweep rows ``(test, state, param1, param2, value)`` as CSV.

    Returns:
        The CSV text (also written to ``handle`` when given).
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for test, state, p1, p2, value in rows:
        writer.writerow([test, state, f"{p1:.17g}", f"{p2:.17g}", f"{value:.17g}",
                         str(abs(value) > LOCAL_BOUND).lower()])
    text = buf.getvalue()
    if handle is not None:
        handle.write(text)
    return text


# ----------------------------------------------------------------------------
# Pseudospin, two modes

def _series_2d(log_term: Callable[[np.ndarray, np.ndarray], np.ndarray], tol: float,
               start: int = 32, max_size: int = 1 << 13) -> float:
    """Sum a positive double series by doubling the square truncation.

    Stops when the added shell is below ``tol`` times the partial sum.

    Raises:
        ConvergenceError: If the truncation exceeds ``max_size`` per index.
    """
    prev = None
    size = start
    while size <= max_size:
        i = np.arange(size)[:, None]
        j = np.arange(size)[None, :]
        total = float(np.sum(np.exp(log_term(i, j))))
        if prev is not None and abs(total - prev) <= tol * abs(total):
            return total
        prev = total
        size *= 2
    raise ConvergenceError("double series did not converge within the truncation limit")


def _log(x: float) -> float:
    return np.log(x) if x > 0 else -np.inf


def _xlogy(n: np.ndarray, x: float) -> np.ndarray:
    """``n log x`` with the convention ``0 log 0 = 0``."""
    return special.xlogy(n, x) if x > 0 else np.where(n == 0, 0.0, -np.inf)


def f_twb(r: float) -> float:
    """Fock-space pseudospin factor ``tanh 2r`` of the twin beam."""
    return float(np.tanh(2 * r))


def f_twb_prime(r: float) -> float:
    """Phase-space pseudospin factor ``(2/pi) arctan(sinh 2r)`` of the twin beam."""
    return float(2 / np.pi * np.arctan(np.sinh(2 * r)))


def f_twba(N2: float, N3: float, eta: float = 1.0, tol: float = SERIES_TOL) -> float:
    """Double-series factor of the twin beam with an added photon.

    The series adds up the coherences that move one photon in each mode,
    summed over all even photon numbers of mode 2. It is the stated
    closed form, not the parity-block ``xx`` correlator of the state.
    """
    if N2 < 0 or N3 <= 0 or not (0 < eta <= 1):
        raise CVLabError("need N2 >= 0, N3 > 0 and eta in (0, 1]")
    N1 = N2 + N3
    u, v = N3 / (1 + N1), N2 / (1 + N1)
    if N2 == 0:
        return 0.0
    loss = 1 - eta

    def log_term(k, p):
        m = 2 * k + p
        comb = special.gammaln(m + 1) - special.gammaln(2 * k + 1) - special.gammaln(p + 1)
        gain = np.where(p == 0, -np.inf, np.log(np.clip(-np.expm1(_xlogy(p, loss)), 1e-300, None)))
        return comb + 0.5 * np.log((m + 1) / (2 * k + 1)) + gain + _xlogy(p, u) + _xlogy(2 * k, v)

    s = _series_2d(log_term, tol)
    pref = 2 * np.sqrt(N2 / (1 + N1)) * (1 + N3 * eta) / (N3 * (1 + N1) * eta)
    return float(pref * s)


def f_ecs(gamma: float, tol: float = SERIES_TOL, max_terms: int = 10_000) -> float:
    """Fock-space pseudospin factor of the entangled coherent state (real ``gamma``).

    Equals ``S^2 / (cosh g^2 sinh g^2)`` with
    ``S = sum_n g^(4n+1) / sqrt((2n)! (2n+1)!)``.
    """
    if gamma == 0:
        return 1.0
    g2 = gamma * gamma
    n = np.arange(max_terms)
    logs = (4 * n + 1) * np.log(abs(gamma)) - 0.5 * (special.gammaln(2 * n + 1) + special.gammaln(2 * n + 2))
    peak = logs.max()
    terms = np.exp(logs - peak)
    if terms[-1] > tol * terms.sum():
        raise ConvergenceError("entangled coherent series did not converge")
    # log(cosh x sinh x) = log(sinh 2x / 2), evaluated without overflow
    log_cs = 2 * g2 - np.log(4.0) + np.log1p(-np.exp(-4 * g2))
    return float(np.exp(2 * (peak + np.log(terms.sum())) - log_cs))


def ps_correlation_factor(tag: str, **params) -> float:
    """Pseudospin factor ``f`` in ``E = cos t1 cos t2 + f sin t1 sin t2``.

    Tags: ``twb`` (``r``), ``twb_prime`` (``r``), ``twba`` (``N2, N3, eta``),
    ``ecs`` (``gamma``), ``ips`` (``lam, tau_eff``; phase-space representation).
    """
    key = tag.lower()
    if key == "twb":
        return f_twb(params["r"])
    if key == "twb_prime":
        return f_twb_prime(params["r"])
    if key == "twba":
        return f_twba(params["N2"], params["N3"], params.get("eta", 1.0))
    if key == "ecs":
        return f_ecs(params["gamma"])
    if key == "ips":
        return pseudospin_pi_correlation(ips_wigner(params["lam"], params["tau_eff"]), "xx")
    raise CVLabError(f"unknown pseudospin state tag {tag!r}")


def bell2_ps(f: float, zz: float = 1.0) -> float:
    """Maximal CHSH value for ``E = zz cos t1 cos t2 + f sin t1 sin t2``.

    With ``t1 = 0``, ``t1' = pi/2`` and ``t2 = -t2'`` this is
    ``2 sqrt(zz^2 + f^2)``, which reduces to ``2 sqrt(1 + f^2)``.
    """
    return float(2 * np.hypot(zz, f))


def bell2_ps_angles(f: float, theta2: float, zz: float = 1.0) -> float:
    """CHSH value ``2 (zz cos t2 + f sin t2)`` for the symmetric setting."""
    return float(2 * (zz * np.cos(theta2) + f * np.sin(theta2)))


# ----------------------------------------------------------------------------
# Pseudospin, phase-space representation

def _orthant_sign_moment(mean: np.ndarray, cov: np.ndarray) -> float:
    """``E[prod_i sgn x_i]`` for a Gaussian vector."""
    k = mean.size
    if k == 0:
        return 1.0
    sd = np.sqrt(np.diag(cov))
    if np.any(sd <= 0):
        raise CVLabError("singular marginal covariance")
    z = mean / sd
    corr = cov / np.outer(sd, sd)
    if np.allclose(z, 0.0, atol=1e-15):
        if k % 2:
            return 0.0
        if k == 2:
            return float(2 / np.pi * np.arcsin(np.clip(corr[0, 1], -1, 1)))
    # E[prod sgn] = sum over subsets S of (-2)^|S| P(x_S < 0)
    total = 0.0
    for mask in product((0, 1), repeat=k):
        idx = [i for i in range(k) if mask[i]]
        if not idx:
            total += 1.0
            continue
        if len(idx) == 1:
            prob = stats.norm.cdf(-z[idx[0]])
        else:
            sub = corr[np.ix_(idx, idx)]
            prob = stats.multivariate_normal(mean=z[idx], cov=sub).cdf(np.zeros(len(idx)))
        total += (-2.0) ** len(idx) * prob
    return float(total)


def pseudospin_pi_correlation(state, axes: str, angles: Sequence[float] | None = None) -> float:
    """Correlator of phase-space pseudospin operators along ``x`` or ``z`` per mode.

    ``z`` is minus the parity; ``x`` is the sign of the quadrature
    ``q cos(angle) + p sin(angle)``; ``i`` is the identity.

    Args:
        state: Gaussian state or signed mixture.
        axes: One character per mode from ``x``, ``z``, ``i``.
        angles: Quadrature angle per mode for the ``x`` axes (default 0).
    """
    mix = _as_mixture(state)
    n = mix.n_modes
    if len(axes) != n:
        raise DimensionError(f"need one axis per mode, got {axes!r} for {n} modes")
    if angles is None:
        angles = [0.0] * n
    zs = [k for k, a in enumerate(axes) if a == "z"]
    xs = [k for k, a in enumerate(axes) if a == "x"]
    if any(a not in "xzi" for a in axes):
        raise CVLabError(f"axes must be drawn from 'x', 'z', 'i', got {axes!r}")
    iz = np.array([[2 * k, 2 * k + 1] for k in zs], dtype=int).reshape(-1)
    u = np.zeros((len(xs), 2 * n))
    for row, k in enumerate(xs):
        u[row, 2 * k] = np.cos(angles[k])
        u[row, 2 * k + 1] = np.sin(angles[k])
    total = 0.0
    for w, mu, cov in zip(mix.weights, mix.means, mix.covs):
        val = (-np.pi) ** len(zs)
        mx, cx = u @ mu, u @ cov @ u.T
        if zs:
            czz = cov[np.ix_(iz, iz)]
            val *= gaussian_density(np.zeros(iz.size), mu[iz], czz)
            cxz = u @ cov[:, iz]
            gain = np.linalg.solve(czz, cxz.T).T
            mx = mx - gain @ mu[iz]
            cx = cx - gain @ cxz.T
        total += w * val * _orthant_sign_moment(mx, cx)
    return float(total)


def ips_ps_bell(lam: float, tau_eff: float) -> float:
    """Phase-space pseudospin CHSH value of the photon-subtracted twin beam.

    Uses ``t1 = 0``, ``t1' = pi/2`` and ``t2 = -t2' = pi/4``, which gives
    ``sqrt(2) (E_zz + E_xx)``.
    """
    mix = ips_wigner(lam, tau_eff)
    zz = pseudospin_pi_correlation(mix, "zz")
    xx = pseudospin_pi_correlation(mix, "xx")
    return float(np.sqrt(2) * (zz + xx))


# ----------------------------------------------------------------------------
# Homodyne test

def homodyne_correlation(state, theta: float, phi: float, eta: float = 1.0) -> float:
    """Sign correlation of quadratures at angles ``theta`` (mode 0) and ``phi`` (mode 1).

    Detector efficiency ``eta`` adds ``(1 - eta) / (2 eta)`` to each
    measured variance. Centered terms use the arcsine law.
    """
    if not (0 < eta <= 1):
        raise CVLabError(f"efficiency must lie in (0, 1], got {eta}")
    mix = _as_mixture(state)
    if mix.n_modes != 2:
        raise DimensionError("homodyne test needs a two-mode state")
    u = np.array([[np.cos(theta), np.sin(theta), 0, 0], [0, 0, np.cos(phi), np.sin(phi)]])
    noise = (1 - eta) / (2 * eta) * np.eye(2)
    total = 0.0
    for w, mu, cov in zip(mix.weights, mix.means, mix.covs):
        c = u @ cov @ u.T + noise
        if np.linalg.det(c) <= 0:
            raise CVLabError("singular marginal covariance")
        total += w * _orthant_sign_moment(u @ mu, c)
    return float(total)


def homodyne_bell2(state, angles: Sequence[float], eta: float = 1.0) -> float:
    """CHSH value ``E(t1,f1) + E(t1,f2) + E(t2,f1) - E(t2,f2)`` of sign-binned homodyning.

    Args:
        state: Two-mode Gaussian state or mixture.
        angles: ``(theta1, theta2, phi1, phi2)``; thetas act on mode 0.
        eta: Homodyne efficiency.
    """
    t1, t2, f1, f2 = angles
    e = lambda a, b: homodyne_correlation(state, a, b, eta)  # noqa: E731
    return e(t1, f1) + e(t1, f2) + e(t2, f1) - e(t2, f2)


def homodyne_bell2_monte_carlo(state, angles: Sequence[float], eta: float = 1.0,
                               samples: int = 1_000_000, seed: int = 0) -> tuple[float, float]:
    """Sampling estimate of :func:`homodyne_bell2` and its standard error.

    Phase-space points are drawn from a broad Gaussian proposal and
    reweighted by the (possibly negative) Wigner function, so signed
    mixtures are handled without sampling each term. Detector noise is
    sampled directly.
    """
    if not (0 < eta <= 1):
        raise CVLabError(f"efficiency must lie in (0, 1], got {eta}")
    mix = _as_mixture(state)
    if mix.n_modes != 2:
        raise DimensionError("homodyne test needs a two-mode state")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    center = mix.mean()
    spread = sum(c + np.outer(m - center, m - center) for c, m in zip(mix.covs, mix.means))
    prop = 2.0 * spread
    draws = rng.multivariate_normal(center, prop, size=samples, method="cholesky")
    weight = mix.wigner(draws) / gaussian_density(draws, center, prop)
    sd = np.sqrt((1 - eta) / (2 * eta))
    t1, t2, f1, f2 = angles
    signs = {}
    for name, ang, cols in (("t1", t1, (0, 1)), ("t2", t2, (0, 1)), ("f1", f1, (2, 3)), ("f2", f2, (2, 3))):
        x = draws[:, cols[0]] * np.cos(ang) + draws[:, cols[1]] * np.sin(ang)
        if sd > 0:
            x = x + rng.normal(scale=sd, size=samples)
        signs[name] = np.sign(x)
    chsh = weight * (signs["t1"] * signs["f1"] + signs["t1"] * signs["f2"]
                     + signs["t2"] * signs["f1"] - signs["t2"] * signs["f2"])
    return float(chsh.mean()), float(chsh.std(ddof=1) / np.sqrt(samples))


# ----------------------------------------------------------------------------
# Three modes, displaced parity

def bell3_from_correlator(corr: Callable, a: Sequence[complex], ap: Sequence[complex]) -> float:
    """``E(a1,a2,a3') + E(a1,a2',a3) + E(a1',a2,a3) - E(a1',a2',a3')``."""
    return (corr(a[0], a[1], ap[2]) + corr(a[0], ap[1], a[2])
            + corr(ap[0], a[1], a[2]) - corr(ap[0], ap[1], ap[2]))


def dp3_displacements(parameterization: str, J: float) -> tuple[list[complex], list[complex]]:
    """Unprimed and primed displacements for a named three-mode setting.

    ``V3``: ``a_k = sqrt(J)``, ``a_k' = -2 sqrt(J)``.
    ``T``: ``a_k = i sqrt(J)``, ``a_k' = -2i sqrt(J)``.
    ``T-optimized``: ``a1 = (2/3) i sqrt(J)``, ``a2' = -i sqrt(J)``, ``a3' = i sqrt(J)``, others 0.
    """
    if J < 0:
        raise CVLabError("J must be nonnegative")
    s = np.sqrt(J)
    key = parameterization.lower()
    if key == "v3":
        return [complex(s)] * 3, [complex(-2 * s)] * 3
    if key == "t":
        return [1j * s] * 3, [-2j * s] * 3
    if key == "t-optimized":
        return [2j * s / 3, 0j, 0j], [0j, -1j * s, 1j * s]
    raise CVLabError(f"unknown three-mode displacement setting {parameterization!r}")


def bell3_dp_state(state, parameterization: str, J: float) -> float:
    """Three-mode displaced-parity value assembled from Wigner evaluations."""
    a, ap = dp3_displacements(parameterization, J)
    return bell3_from_correlator(lambda x, y, z: dp_correlation(state, [x, y, z]), a, ap)


def _t_state(N: float, optimized: bool) -> PhaseSpaceMoments:
    phi3 = np.pi if optimized else 0.0
    return build(TriT(N / 4, N / 4, 0.0, phi3))


def bell3_dp(tag: str, x: float, J: float, parameterization: str | None = None,
             method: str = "assembled") -> float:
    """Three-mode displaced-parity value for ``V3`` (``x = r``) or ``T`` (``x = N``).

    The ``T`` state uses ``N2 = N3 = N / 4``. ``method="closed"`` selects
    the closed forms, available for the default settings.
    """
    key = tag.lower()
    if key not in ("v3", "t"):
        raise CVLabError(f"unknown three-mode state tag {tag!r}")
    param = (parameterization or key).lower()
    if method == "closed":
        if key == "v3" and param == "v3":
            return bell3_dp_v3_closed(x, J)
        if key == "t" and param == "t":
            return bell3_dp_t_closed(x, J)
        raise CVLabError("no closed form for this state and setting")
    if method != "assembled":
        raise CVLabError(f"unknown method {method!r}")
    state = build(TriV3(x)) if key == "v3" else _t_state(x, param == "t-optimized")
    return bell3_dp_state(state, param, J)


def bell3_dp_v3_closed(r: float, J: float) -> float:
    """``3 exp(-12 J e^{-2r}) - exp(-24 J e^{2r})``."""
    return float(3 * np.exp(-12 * J * np.exp(-2 * r)) - np.exp(-24 * J * np.exp(2 * r)))


def bell3_dp_t_closed(N: float, J: float) -> float:
    """Closed form for the ``T`` state with ``N2 = N3 = N / 4`` and the ``T`` setting."""
    s = 2 * np.sqrt(2) * np.sqrt(N * (2 + N))
    u = 2 * J
    base = -4 * u * (3 + 3 * N + s)
    return float(-np.exp(base) + np.exp(6 * u * (1 + N + s) + base)
                 + 2 * np.exp(1.5 * u * (4 + 7 * N + 3 * s) + base))


def v3_dp_asymptote() -> float:
    return 3.0


# ----------------------------------------------------------------------------
# Three modes, pseudospin

def t_state_ps_coefficients(N2: float, N3: float, tol: float = SERIES_TOL) -> tuple[float, float, float, float]:
    """Fock-space pseudospin correlators ``(zzz, zxx, xzx, xxz)`` of the ``T`` state.

    ``z`` is minus the parity and ``x = s_+ + s_-``; phases are zero.
    """
    if N2 < 0 or N3 < 0:
        raise CVLabError("photon numbers must be nonnegative")
    N1 = N2 + N3
    u, v = N2 / (1 + N1), N3 / (1 + N1)
    pref = 2 / (1 + N1)
    ls, lt = lambda s: _xlogy(2 * s, u), lambda t: _xlogy(2 * t, v)
    lf = special.gammaln

    def t1(s, t):
        return (lf(2 * s + 2 * t + 2) - lf(2 * s + 1) - lf(2 * t + 1)
                - 0.5 * np.log((2 * s + 1) * (2 * t + 1)) + ls(s) + lt(t))

    def t2(s, t):
        return (lf(2 * s + 2 * t + 1) - lf(2 * s + 1) - lf(2 * t + 1)
                + 0.5 * np.log((2 * s + 2 * t + 1) / (2 * t + 1)) + ls(s) + lt(t))

    def t3(s, t):
        return (lf(2 * s + 2 * t + 1) - lf(2 * s + 1) - lf(2 * t + 1)
                + 0.5 * np.log((2 * s + 2 * t + 1) / (2 * s + 1)) + ls(s) + lt(t))

    c1 = pref * np.sqrt(u * v) * _series_2d(t1, tol) if u * v > 0 else 0.0
    c2 = -pref * np.sqrt(v) * _series_2d(t2, tol) if v > 0 else 0.0
    c3 = -pref * np.sqrt(u) * _series_2d(t3, tol) if u > 0 else 0.0
    return -1.0, float(c1), float(c2), float(c3)


def t_state_ps_coefficients_prime(N: float) -> tuple[float, float, float, float]:
    """Phase-space pseudospin correlators of the ``T`` state with ``N2 = N3 = N / 4``."""
    if N < 0:
        raise CVLabError("photon number must be nonnegative")
    c1 = 2 * np.arctan(N / (2 * np.sqrt(1 + N))) / (np.pi * (1 + N))
    c23 = 2 * np.arctan(np.sqrt(N)) / (np.pi * (1 + N / 2))
    return -1.0, float(c1), float(-c23), float(-c23)


def v3_ps_coefficient_prime(r: float) -> float:
    """Phase-space ``zxx`` correlator of ``V3`` with sign quadrature ``p``."""
    num = -6 * np.arctan(4 * np.cosh(r) * np.sinh(r) / np.sqrt(3 * (2 + np.exp(4 * r))))
    return float(num / (np.pi * np.sqrt(5 + 4 * np.cosh(4 * r))))


def _ps3_correlation(c: Sequence[float], th: Sequence[float]) -> float:
    c0, c1, c2, c3 = c
    cs, sn = np.cos(th), np.sin(th)
    return (c0 * cs[0] * cs[1] * cs[2] + c1 * cs[0] * sn[1] * sn[2]
            + c2 * sn[0] * cs[1] * sn[2] + c3 * sn[0] * sn[1] * cs[2])


def bell3_ps_value(coeffs: Sequence[float], angles: Sequence[float]) -> float:
    """Three-party value for polar angles ``(t1, t2, t3, t1', t2', t3')``."""
    t, tp = angles[:3], angles[3:]
    e = lambda a, b, c: _ps3_correlation(coeffs, [a, b, c])  # noqa: E731
    return bell3_from_correlator(e, t, tp)


def bell3_ps_max(coeffs: Sequence[float], starts: int = 4) -> tuple[float, np.ndarray]:
    """Maximize ``|B3|`` over the six polar angles from a fixed grid of starts."""
    grid = np.linspace(-np.pi, np.pi, starts, endpoint=False)
    best, best_x = -np.inf, None
    for x0 in product(grid, repeat=3):
        x0 = np.concatenate([x0, np.asarray(x0) + np.pi / 2])
        for sgn in (1.0, -1.0):
            res = optimize.minimize(lambda x: -sgn * bell3_ps_value(coeffs, x), x0, method="BFGS")
            if -res.fun > best:
                best, best_x = -res.fun, res.x
    return float(best), best_x


def bell3_ps(tag: str, x: float, representation: str = "fock", N3: float | None = None,
             tol: float = SERIES_TOL) -> float:
    """Largest three-party pseudospin value.

    Args:
        tag: ``T`` (``x`` is the total photon number ``N``; ``N2 = N3 = N/4``
            unless ``N3`` is given, then ``x`` is ``N2``) or ``V3`` (``x = r``).
        x: State parameter as described above.
        representation: ``fock`` for parity blocks, ``pi`` for phase-space symbols.
        N3: Optional explicit idler photon number for the ``T`` state.
        tol: Series tolerance for the Fock representation.
    """
    key, rep = tag.lower(), representation.lower()
    if key == "t" and rep == "fock":
        n2, n3 = (x / 4, x / 4) if N3 is None else (x, N3)
        coeffs = t_state_ps_coefficients(n2, n3, tol)
    elif key == "t" and rep == "pi":
        coeffs = t_state_ps_coefficients_prime(x)
    elif key == "v3" and rep == "pi":
        c = abs(v3_ps_coefficient_prime(x))
        coeffs = (-1.0, c, c, c)
    else:
        raise CVLabError(f"no pseudospin evaluator for {tag!r} in the {representation!r} representation")
    return bell3_ps_max(coeffs)[0]


def v3_axis_for_coefficient(r: float, target: float) -> float:
    """Common sign-quadrature angle at which the ``V3`` ``zxx`` correlator equals ``target``.

    The correlator moves continuously from its ``q``-axis value at angle 0
    to its ``p``-axis value at ``pi/2``.
    """
    st = build(TriV3(r))
    fn = lambda a: pseudospin_pi_correlation(st, "zxx", [a, a, a]) - target  # noqa: E731
    return float(optimize.brentq(fn, 0.0, np.pi / 2, xtol=1e-14))
