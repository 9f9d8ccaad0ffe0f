"""Conditional Gaussian states after homodyne or on/off detection.

On/off outcomes are handled through the vacuum projector: a click is
``I - Pi_0``, so conditioning on clicks yields a signed mixture of Gaussians.
Finite detector efficiency is modelled by a pure-loss channel in front of
an ideal detector.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import CVLabError, DimensionError
from .states import VACUUM_VARIANCE, GaussianState, PhaseSpaceMoments, gaussian_density


@dataclass(frozen=True)
class GaussianMixture:
    """Signed mixture ``sum_k w_k N(mean_k, cov_k)`` of quadrature-space Gaussians.

    Weights sum to one. Individual covariance matrices need not satisfy the
    uncertainty relation; only the mixture has to describe a state.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        m = np.asarray(self.means, dtype=float)
        c = np.asarray(self.covs, dtype=float)
        if w.ndim != 1 or m.shape[0] != w.size or c.shape[0] != w.size:
            raise DimensionError("weights, means and covariances must have matching lengths")
        if c.shape[1:] != (m.shape[1], m.shape[1]):
            raise DimensionError("covariance blocks do not match the mean dimension")
        for name, arr in (("weights", w), ("means", m), ("covs", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_modes(self) -> int:
        return self.means.shape[1] // 2

    def wigner(self, points) -> np.ndarray | float:
        """Wigner function normalized over quadrature space."""
        pts = np.asarray(points, dtype=float)
        out = sum(w * gaussian_density(pts, m, c) for w, m, c in zip(self.weights, self.means, self.covs))
        return out

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def second_moment(self) -> np.ndarray:
        """Symmetrized second moments ``<R R^T>`` of the mixture."""
        return sum(w * (c + np.outer(m, m)) for w, m, c in zip(self.weights, self.means, self.covs))

    def covariance(self) -> np.ndarray:
        mu = self.mean()
        return self.second_moment() - np.outer(mu, mu)

    def marginal(self, keep: Sequence[int]) -> "GaussianMixture":
        idx = np.array([[2 * k, 2 * k + 1] for k in keep]).ravel()
        return GaussianMixture(self.weights, self.means[:, idx], self.covs[:, idx][:, :, idx])

    @classmethod
    def from_state(cls, state: PhaseSpaceMoments) -> "GaussianMixture":
        return cls(np.ones(1), state.mean[None, :], state.cov[None, :, :])


def _split(state: PhaseSpaceMoments, measured: Sequence[int]):
    n = state.n_modes
    measured = sorted(set(int(k) for k in measured))
    if not measured or measured[0] < 0 or measured[-1] >= n:
        raise DimensionError(f"invalid measured modes {measured} for {n} modes")
    rest = [k for k in range(n) if k not in measured]
    im = np.array([[2 * k, 2 * k + 1] for k in measured]).ravel()
    ir = np.array([[2 * k, 2 * k + 1] for k in rest], dtype=int).reshape(-1)
    return rest, ir, im


def lossy(state: PhaseSpaceMoments, modes: Sequence[int], eta: float) -> PhaseSpaceMoments:
    """Pure-loss channel of transmissivity ``eta`` on the listed modes."""
    if not (0 < eta <= 1):
        raise CVLabError(f"efficiency must lie in (0, 1], got {eta}")
    g = np.ones(2 * state.n_modes)
    for k in modes:
        g[2 * k:2 * k + 2] = eta
    s = np.sqrt(g)
    cov = s[:, None] * state.cov * s[None, :] + np.diag((1 - g) * VACUUM_VARIANCE)
    return PhaseSpaceMoments(s * state.mean, cov)


def vacuum_projection(state: PhaseSpaceMoments, measured: Sequence[int]) -> tuple[float, PhaseSpaceMoments]:
    """Project ``measured`` onto the vacuum.

    Returns:
        ``(probability, conditional state of the remaining modes)``. The
        conditional state is ``None`` when every mode is measured.
    """
    rest, ir, im = _split(state, measured)
    b = state.cov[np.ix_(im, im)] + VACUUM_VARIANCE * np.eye(im.size)
    binv = np.linalg.inv(b)
    d = state.mean[im]
    prob = float(np.exp(-0.5 * d @ binv @ d) / np.sqrt(np.linalg.det(b)))
    if not rest:
        return prob, None
    c = state.cov[np.ix_(ir, im)]
    cov = state.cov[np.ix_(ir, ir)] - c @ binv @ c.T
    mean = state.mean[ir] - c @ binv @ d
    return prob, PhaseSpaceMoments(mean, 0.5 * (cov + cov.T))


def onoff_click(state: PhaseSpaceMoments, clicked: Sequence[int], eta: float = 1.0) -> tuple[float, GaussianMixture]:
    """Condition on a click at every listed mode.

    Uses ``prod_k (I - Pi_0,k) = sum_T (-1)^|T| Pi_0,T`` over subsets ``T``.

    Returns:
        ``(probability, signed mixture on the unmeasured modes)``.
    """
    clicked = sorted(set(int(k) for k in clicked))
    src = lossy(state, clicked, eta) if eta < 1 else state
    rest, ir, _ = _split(src, clicked)
    if not rest:
        raise DimensionError("at least one mode must remain unmeasured")
    weights, means, covs = [1.0], [src.mean[ir]], [src.cov[np.ix_(ir, ir)]]
    for size in range(1, len(clicked) + 1):
        for subset in combinations(clicked, size):
            p, cond = vacuum_projection(src, subset)
            # clicked modes outside the subset are traced out
            survivors = [k for k in range(src.n_modes) if k not in subset]
            idx = np.array([[2 * survivors.index(k), 2 * survivors.index(k) + 1] for k in rest]).ravel()
            weights.append((-1) ** size * p)
            means.append(cond.mean[idx])
            covs.append(cond.cov[np.ix_(idx, idx)])
    w = np.array(weights)
    total = float(w.sum())
    if total <= 0:
        raise CVLabError("click probability vanishes")
    return total, GaussianMixture(w / total, np.array(means), np.array(covs))


def onoff_no_click(state: PhaseSpaceMoments, measured: Sequence[int], eta: float = 1.0) -> tuple[float, PhaseSpaceMoments]:
    """Condition on no click at every listed mode."""
    src = lossy(state, measured, eta) if eta < 1 else state
    return vacuum_projection(src, measured)


def homodyne_condition(state: PhaseSpaceMoments, mode: int, outcome: float,
                       eta: float = 1.0, angle: float = 0.0) -> tuple[float, GaussianState]:
    """Measure ``q cos(angle) + p sin(angle)`` of one mode with efficiency ``eta``.

    The efficiency adds ``(1 - eta) / (2 eta)`` to the measured variance.

    Returns:
        ``(probability density of the outcome, conditional state of the other modes)``.
    """
    if not (0 < eta <= 1):
        raise CVLabError(f"efficiency must lie in (0, 1], got {eta}")
    rest, ir, im = _split(state, [mode])
    u = np.array([np.cos(angle), np.sin(angle)])
    var = float(u @ state.cov[np.ix_(im, im)] @ u) + (1 - eta) / (2 * eta)
    mu = float(u @ state.mean[im])
    density = float(np.exp(-0.5 * (outcome - mu) ** 2 / var) / np.sqrt(2 * np.pi * var))
    c = state.cov[np.ix_(ir, im)] @ u
    cov = state.cov[np.ix_(ir, ir)] - np.outer(c, c) / var
    mean = state.mean[ir] + c * (outcome - mu) / var
    return density, GaussianState(mean, 0.5 * (cov + cov.T))
