"""Truncated Fock-space reference computations used as independent oracles."""

from math import comb, factorial

import numpy as np


def t_state_amplitudes(N2: float, N3: float, cut: int) -> np.ndarray:
    """Amplitudes ``psi[n1, n2, n3]`` of the ``T`` state with zero phases."""
    N1 = N2 + N3
    x2, x3 = N2 / (1 + N1), N3 / (1 + N1)
    psi = np.zeros((cut, cut, cut))
    for p in range(cut):
        for q in range(cut - p):
            psi[p + q, p, q] = np.sqrt(x2 ** p * x3 ** q * comb(p + q, p) / (1 + N1))
    return psi


def pseudospin_ops(cut: int) -> dict:
    """Parity-block pseudospin matrices ``z`` and ``x`` on a truncated space."""
    sz = np.diag([-1.0 if n % 2 == 0 else 1.0 for n in range(cut)])
    sm = np.zeros((cut, cut))
    for n in range(0, cut - 1, 2):
        sm[n, n + 1] = 1.0
    return {"z": sz, "x": sm + sm.T, "i": np.eye(cut)}


def three_mode_correlation(psi: np.ndarray, axes: str) -> float:
    ops = pseudospin_ops(psi.shape[0])
    t = np.einsum("ia,abc->ibc", ops[axes[0]], psi)
    t = np.einsum("jb,ibc->ijc", ops[axes[1]], t)
    t = np.einsum("kc,ijc->ijk", ops[axes[2]], t)
    return float(np.sum(psi * t))


def twba_density(N2: float, N3: float, eta: float, cut: int) -> np.ndarray:
    """Two-mode density matrix ``rho[n1, n2, m1, m2]`` after a click on mode 3."""
    psi = t_state_amplitudes(N2, N3, cut)
    click = 1 - (1 - eta) ** np.arange(cut)
    rho = np.einsum("abn,cdn,n->abcd", psi, psi, click)
    return rho / np.einsum("abab->", rho)


def two_mode_correlation(rho: np.ndarray, axes: str) -> float:
    ops = pseudospin_ops(rho.shape[0])
    return float(np.einsum("ia,jb,abij->", ops[axes[0]], ops[axes[1]], rho))


def ecs_amplitudes(gamma: float, cut: int) -> np.ndarray:
    """Normalized ``|g, -g> - |-g, g>`` for real ``g``."""
    n = np.arange(cut)
    coh = np.array([np.exp(-gamma ** 2 / 2) * gamma ** k / np.sqrt(float(factorial(k))) for k in n])
    flip = coh * (-1.0) ** n
    psi = np.outer(coh, flip) - np.outer(flip, coh)
    return psi / np.linalg.norm(psi)


def pure_two_mode_correlation(psi: np.ndarray, axes: str) -> float:
    ops = pseudospin_ops(psi.shape[0])
    return float(np.einsum("ab,ia,jb,ij->", psi, ops[axes[0]], ops[axes[1]], psi))
