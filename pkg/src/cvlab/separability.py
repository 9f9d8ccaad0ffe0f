"""Separability criteria for Gaussian states.

Every criterion here is an independent code path so that they can be used
as cross-oracles: the PPT test works on the partially transposed spectrum,
Simon's test on the four local invariants, Duan's test on an explicitly
constructed normal form, and Giedke's map on an iterated nonlinear
contraction of the covariance matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import CVLabError, DimensionError
from .states import (
    VACUUM_VARIANCE,
    GaussianState,
    PhaseSpaceMoments,
    _mode_indices,
    build,
    TriV3,
    TriT,
)
from .symplectic import omega, pseudo_inverse, symplectic_spectrum

SEPARABILITY_TOL = 1e-9
GIEDKE_MAX_ITER = 200


@dataclass(frozen=True)
class LocalInvariants:
    """Determinants of the 2x2 blocks ``[[A, C], [C^T, B]]`` and of the whole CM."""

    I1: float
    I2: float
    I3: float
    I4: float


@dataclass(frozen=True)
class SeparabilityVerdict:
    """Outcome of one criterion.

    ``separable`` is ``None`` when the criterion could not decide.
    ``exact`` records whether the verdict is necessary and sufficient
    for the partition it was computed on.
    """

    criterion: str
    separable: Optional[bool]
    min_pt_symplectic_eig: float
    negativity: float
    iterations: Optional[int] = None
    exact: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "separable": self.separable,
            "min_pt_symplectic_eig": float(self.min_pt_symplectic_eig),
            "negativity": float(self.negativity),
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class TripartiteClass:
    """Entanglement class of a three-mode state from per-mode PT checks.

    Attributes:
        label: ``"FullyInseparable"``, ``"OneModeBiseparable"``,
            ``"TwoModeBiseparable"`` or ``"Class4or5"``.
        separable_modes: 0-based modes that are PPT with respect to the other two.
        pt_eigenvalues: Minimum PT symplectic eigenvalue for each single-mode cut.
    """

    label: str
    separable_modes: tuple
    pt_eigenvalues: tuple


# ----------------------------------------------------------------------------
# Partial transposition

def _two_mode(state: PhaseSpaceMoments) -> None:
    if state.n_modes != 2:
        raise DimensionError(f"criterion needs exactly two modes, got {state.n_modes}")


def local_invariants(state: PhaseSpaceMoments) -> LocalInvariants:
    _two_mode(state)
    c = state.cov
    return LocalInvariants(
        float(np.linalg.det(c[:2, :2])),
        float(np.linalg.det(c[2:, 2:])),
        float(np.linalg.det(c[:2, 2:])),
        float(np.linalg.det(c)),
    )


def _reflection(modes: Iterable[int], n_modes: int) -> np.ndarray:
    modes = list(modes)
    _mode_indices(modes, n_modes)
    diag = np.ones(2 * n_modes)
    for k in modes:
        diag[2 * k + 1] = -1.0
    return diag


def partial_transpose(state: PhaseSpaceMoments, modes: Iterable[int]) -> PhaseSpaceMoments:
    """Mirror the momenta of ``modes`` (0-based); the result may be unphysical."""
    diag = _reflection(modes, state.n_modes)
    return PhaseSpaceMoments(diag * state.mean, diag[:, None] * state.cov * diag[None, :])


def _default_party_b(state: PhaseSpaceMoments, party_b) -> list:
    if party_b is None:
        return [state.n_modes - 1]
    party_b = sorted(set(int(k) for k in party_b))
    if len(party_b) == state.n_modes:
        raise DimensionError("partition must leave at least one mode on each side")
    return party_b


def pt_symplectic_eigenvalues(state: PhaseSpaceMoments, party_b=None) -> np.ndarray:
    """Symplectic spectrum of the state partially transposed on ``party_b``."""
    return symplectic_spectrum(partial_transpose(state, _default_party_b(state, party_b)).cov)


def log_negativity(state: PhaseSpaceMoments, party_b=None) -> float:
    """``sum_k max(0, -ln(2 d~_k))`` over the PT spectrum; for two modes only ``d~_-`` counts."""
    d = pt_symplectic_eigenvalues(state, party_b)
    return float(np.sum(np.maximum(0.0, -np.log(2.0 * d))))


def ppt_check(state: PhaseSpaceMoments, party_b=None, tol: float = SEPARABILITY_TOL) -> SeparabilityVerdict:
    """PPT test: separable iff the minimum PT symplectic eigenvalue is at least 1/2.

    The verdict is necessary and sufficient when one side holds one mode.
    """
    party_b = _default_party_b(state, party_b)
    d = symplectic_spectrum(partial_transpose(state, party_b).cov)
    exact = len(party_b) == 1 or len(party_b) == state.n_modes - 1
    return SeparabilityVerdict(
        criterion="PPT",
        separable=bool(d[0] >= VACUUM_VARIANCE - tol),
        min_pt_symplectic_eig=float(d[0]),
        negativity=float(np.sum(np.maximum(0.0, -np.log(2.0 * d)))),
        exact=exact,
    )


def simon_invariant_check(state: PhaseSpaceMoments, tol: float = SEPARABILITY_TOL) -> bool:
    """Simon's inequality ``I1 + I2 + 2|I3| <= 4 I4 + 1/4`` (True means separable)."""
    inv = local_invariants(state)
    lhs = inv.I1 + inv.I2 + 2.0 * abs(inv.I3)
    rhs = 4.0 * inv.I4 + 0.25
    return bool(lhs <= rhs + tol * max(1.0, rhs))


# ----------------------------------------------------------------------------
# Duan normal form

@dataclass(frozen=True)
class DuanReport:
    """Normal-form data behind a Duan verdict.

    ``lhs`` is ``Var(u0) + Var(v0)`` and ``rhs`` is ``a0^2 + a0^-2``.
    ``fallback`` is True when the correlations were degenerate and the PPT
    verdict was used instead.
    """

    separable: bool
    lhs: float
    rhs: float
    a0: float
    normal_form: np.ndarray
    fallback: bool


def simon_standard_form(state: PhaseSpaceMoments) -> tuple[float, float, float, float]:
    """Return ``(a, b, c1, c2)`` of the local-symplectic standard form.

    The form is ``[[a I, diag(c1, c2)], [diag(c1, c2), b I]]`` with
    ``c1 >= |c2|`` and ``c1 c2 = I3``.
    """
    inv = local_invariants(state)
    a, b = np.sqrt(inv.I1), np.sqrt(inv.I2)
    s = ((a * b) ** 2 + inv.I3 ** 2 - inv.I4) / (a * b)
    disc = max(s * s - 4.0 * inv.I3 ** 2, 0.0)
    z1 = 0.5 * (s + np.sqrt(disc))
    z2 = max(0.5 * (s - np.sqrt(disc)), 0.0)
    c1 = np.sqrt(max(z1, 0.0))
    c2 = np.sign(inv.I3) * np.sqrt(z2)
    return float(a), float(b), float(c1), float(c2)


def _duan_y(a: float, b: float, x: float) -> float:
    # positive root of b(x/2 - a) y^2 + (a/2)(1 - x^2) y + b x (a x - 1/2) = 0
    qa = b * (x / 2.0 - a)
    qb = 0.5 * a * (1.0 - x * x)
    qc = b * x * (a * x - 0.5)
    disc = qb * qb - 4.0 * qa * qc
    return (-qb - np.sqrt(disc)) / (2.0 * qa)


def duan_report(state: PhaseSpaceMoments, tol: float = SEPARABILITY_TOL,
                grid: int = 400) -> DuanReport:
    """Construct the Duan normal form and evaluate the sum-variance inequality.

    Local squeezings ``x = r1^2`` and ``y = r2^2`` are applied to the standard
    form. The first side condition fixes ``y`` as a function of ``x``; the
    second is solved for ``x`` by a grid scan followed by Brent's method.
    """
    _two_mode(state)
    a, b, c1, c2 = simon_standard_form(state)
    scale = max(1.0, a * b)
    degenerate = (abs(c1 * c2) <= 1e-12 * scale or a - VACUUM_VARIANCE <= 1e-12
                  or b - VACUUM_VARIANCE <= 1e-12)
    if degenerate:
        v = ppt_check(state, tol=tol)
        return DuanReport(bool(v.separable), float("nan"), float("nan"), float("nan"),
                          np.array(state.cov), True)

    k1, k2 = abs(c1), abs(c2)

    def residual(t):
        x = np.exp(t)
        y = _duan_y(a, b, x)
        xy = np.sqrt(x * y)
        return (k1 * xy - k2 / xy - np.sqrt(np.maximum((a * x - 0.5) * (b * y - 0.5), 0.0))
                + np.sqrt(np.maximum((a / x - 0.5) * (b / y - 0.5), 0.0)))

    half_width = np.log(2.0 * a)
    ts = np.linspace(-half_width, half_width, grid + 2)[1:-1]
    with np.errstate(invalid="ignore"):
        hs = residual(ts)
    root = None
    zero_hits = np.nonzero(hs == 0.0)[0]
    if zero_hits.size:
        root = ts[zero_hits[0]]
    else:
        flips = np.nonzero(np.sign(hs[:-1]) != np.sign(hs[1:]))[0]
        if flips.size:
            i = flips[0]
            root = brentq(residual, ts[i], ts[i + 1], xtol=1e-14, rtol=1e-15, maxiter=200)
    if root is None:
        # the side conditions have no interior solution only at the PPT boundary
        v = ppt_check(state, tol=tol)
        return DuanReport(bool(v.separable), float("nan"), float("nan"), float("nan"),
                          np.array(state.cov), True)

    x = float(np.exp(root))
    y = float(_duan_y(a, b, x))
    a1, a2 = a * x, a / x
    b1, b2 = b * y, b / y
    d1 = c1 * np.sqrt(x * y)
    d2 = c2 / np.sqrt(x * y)
    nf = np.array([[a1, 0, d1, 0], [0, a2, 0, d2], [d1, 0, b1, 0], [0, d2, 0, b2]])
    a0sq = np.sqrt((b1 - 0.5) / (a1 - 0.5))
    lhs = a0sq * (a1 + a2) + (b1 + b2) / a0sq - 2.0 * (abs(d1) + abs(d2))
    rhs = a0sq + 1.0 / a0sq
    separable = bool(lhs >= rhs - tol * max(1.0, rhs))
    return DuanReport(separable, float(lhs), float(rhs), float(np.sqrt(a0sq)), nf, False)


def duan_check(state: PhaseSpaceMoments, tol: float = SEPARABILITY_TOL) -> bool:
    """Duan's sum-variance criterion on the normal form (True means separable)."""
    return duan_report(state, tol).separable


# ----------------------------------------------------------------------------
# Giedke iterative map

def _is_valid_cm(m: np.ndarray, tol: float) -> bool:
    n = m.shape[0] // 2
    h = m + 0.5j * omega(n)
    return bool(np.linalg.eigvalsh(h)[0] >= -tol * max(1.0, float(np.max(np.abs(m)))))


def giedke_iterate(state: PhaseSpaceMoments, party_a: Sequence[int] | None = None,
                   max_iter: int = GIEDKE_MAX_ITER, tol: float = SEPARABILITY_TOL) -> SeparabilityVerdict:
    """Decide separability of an arbitrary bipartition by the nonlinear map.

    Args:
        state: Gaussian state.
        party_a: 0-based modes of the first party (default: all but the last).
        max_iter: Maximum number of map applications.
        tol: Slack used in every covariance-validity test.

    Returns:
        A verdict with ``separable=None`` when ``max_iter`` is exhausted.
    """
    n = state.n_modes
    if party_a is None:
        party_a = list(range(n - 1))
    party_a = sorted(set(int(k) for k in party_a))
    party_b = [k for k in range(n) if k not in party_a]
    if not party_a or not party_b:
        raise DimensionError("partition must leave at least one mode on each side")
    ia, ib = _mode_indices(party_a, n), _mode_indices(party_b, n)
    cov = state.cov
    a_k, b_k, c_k = cov[np.ix_(ia, ia)], cov[np.ix_(ib, ib)], cov[np.ix_(ia, ib)]

    pt_d = symplectic_spectrum(partial_transpose(state, party_b).cov)
    neg = float(np.sum(np.maximum(0.0, -np.log(2.0 * pt_d))))

    def verdict(sep, k):
        return SeparabilityVerdict("Giedke", sep, float(pt_d[0]), neg, k)

    if not _is_valid_cm(cov, tol):
        return verdict(False, 0)
    for k in range(max_iter + 1):
        if not (_is_valid_cm(a_k, tol) and _is_valid_cm(b_k, tol)):
            return verdict(False, k)
        # sigma >= (A - |C| I) + (B - |C| I), so both blocks must pass
        norm_c = np.linalg.norm(c_k, 2) if c_k.size else 0.0
        if (_is_valid_cm(a_k - norm_c * np.eye(a_k.shape[0]), tol)
                and _is_valid_cm(b_k - norm_c * np.eye(b_k.shape[0]), tol)):
            return verdict(True, k)
        if k == max_iter:
            break
        nb = b_k.shape[0] // 2
        d_k = c_k @ pseudo_inverse(b_k + 0.5j * omega(nb)) @ c_k.T
        a_next = a_k - d_k.real
        a_next = 0.5 * (a_next + a_next.T)
        c_k = -d_k.imag
        a_k = b_k = a_next
    return verdict(None, max_iter)


# ----------------------------------------------------------------------------
# Three modes

def tripartite_classify(state: PhaseSpaceMoments, tol: float = SEPARABILITY_TOL) -> TripartiteClass:
    """Classify a three-mode state from the three single-mode PT tests."""
    if state.n_modes != 3:
        raise DimensionError("tripartite classification needs exactly three modes")
    eigs = tuple(float(symplectic_spectrum(partial_transpose(state, [k]).cov)[0]) for k in range(3))
    sep = tuple(k for k in range(3) if eigs[k] >= VACUUM_VARIANCE - tol)
    label = {0: "FullyInseparable", 1: "OneModeBiseparable",
             2: "TwoModeBiseparable", 3: "Class4or5"}[len(sep)]
    return TripartiteClass(label, sep, eigs)


def v3_min_pt_eigenvalue(r: float) -> float:
    """Closed-form smallest eigenvalue of ``V3~ + (i/2) Omega`` for one transposed mode."""
    return 0.5 * float(np.cosh(2 * r) - np.sqrt((3 + 3 * np.cosh(4 * r) + 8 * np.sqrt(2) * np.sinh(2 * r)) / 6))


def v3_min_pt_eigenvalue_numeric(r: float, mode: int = 0) -> float:
    """Same quantity from a direct Hermitian eigensolve."""
    pt = partial_transpose(build(TriV3(r)), [mode]).cov
    return float(np.linalg.eigvalsh(pt + 0.5j * omega(3))[0])


def t_state_mode_threshold(N_k: float, N_thermal: float) -> bool:
    """True when mode ``k`` of the thermal ``T`` state is separable from the rest."""
    if N_k < 0 or N_thermal < 0:
        raise CVLabError("photon numbers must be nonnegative")
    return bool(N_thermal > N_k + np.sqrt(N_k * (N_k + 1)))
