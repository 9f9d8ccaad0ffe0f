"""Random generators shared by the test modules."""

from __future__ import annotations

import numpy as np

from cvlab.states import (
    beam_splitter_matrix,
    embed,
    phase_rotation_matrix,
    squeezer_matrix,
)


def random_symplectic(rng: np.random.Generator, n: int, layers: int = 3, r_max: float = 1.0) -> np.ndarray:
    """Product of random local squeezers, rotations and beam splitters."""
    f = np.eye(2 * n)
    for _ in range(layers):
        for k in range(n):
            f = embed(squeezer_matrix(rng.uniform(-r_max, r_max), rng.uniform(0, 2 * np.pi)), [k], n).matrix @ f
            f = embed(phase_rotation_matrix(rng.uniform(0, 2 * np.pi)), [k], n).matrix @ f
        for j in range(n):
            for k in range(j + 1, n):
                bs = beam_splitter_matrix(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
                f = embed(bs, [j, k], n).matrix @ f
    return f


def random_cov(rng: np.random.Generator, n: int, nu_max: float = 3.0, r_max: float = 1.0) -> np.ndarray:
    """Physical covariance ``S diag(nu) S^T`` with random thermal spectrum ``nu >= 1/2``."""
    nu = 0.5 + rng.exponential(0.5, n) * (nu_max - 0.5) / 1.5
    nu = np.minimum(nu, nu_max)
    s = random_symplectic(rng, n, r_max=r_max)
    cov = s @ np.diag(np.repeat(nu, 2)) @ s.T
    return 0.5 * (cov + cov.T)


def random_local_symplectic(rng: np.random.Generator, r_max: float = 0.8) -> np.ndarray:
    """Random ``S_A (+) S_B`` for two modes."""
    blocks = []
    for _ in range(2):
        b = squeezer_matrix(rng.uniform(-r_max, r_max), rng.uniform(0, 2 * np.pi)).matrix
        blocks.append(phase_rotation_matrix(rng.uniform(0, 2 * np.pi)).matrix @ b)
    out = np.zeros((4, 4))
    out[:2, :2], out[2:, 2:] = blocks
    return out


def fast_two_mode_cov(rng: np.random.Generator, r_max: float = 0.7, nu_max: float = 3.0) -> np.ndarray:
    """Random physical two-mode covariance built from raw symplectic factors.

    Same construction as :func:`random_cov` without per-factor validation,
    for suites that need many thousands of instances.
    """
    def local(r, psi, theta):
        c, s = np.cos(psi), np.sin(psi)
        sq = np.cosh(r) * np.eye(2) + np.sinh(r) * np.array([[c, s], [s, -c]])
        ct, st = np.cos(theta), np.sin(theta)
        return np.array([[ct, st], [-st, ct]]) @ sq

    def lift(a, b):
        out = np.zeros((4, 4))
        out[:2, :2], out[2:, 2:] = a, b
        return out

    def mixer(phi, theta):
        return np.asarray(beam_splitter_matrix(phi, theta))

    s = np.eye(4)
    for _ in range(2):
        u = rng.uniform(size=(2, 3)) * [2 * r_max, 2 * np.pi, 2 * np.pi] - [r_max, 0, 0]
        s = lift(local(*u[0]), local(*u[1])) @ s
        s = mixer(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)) @ s
    nu = np.minimum(0.5 + rng.exponential(0.5, 2), nu_max)
    cov = s @ np.diag(np.repeat(nu, 2)) @ s.T
    return 0.5 * (cov + cov.T)


def phase_space_integral(mix, order: int = 30, inflate: float = 1.0) -> float:
    """Gauss-Hermite quadrature of a signed Gaussian mixture over phase space.

    The grid is mapped through the Cholesky factor of the average component
    covariance, so the integrand only varies on the unit scale.
    """
    dim = mix.means.shape[1]
    chol = np.linalg.cholesky(inflate * np.mean(mix.covs, axis=0))
    x, w = np.polynomial.hermite_e.hermegauss(order)
    grid = np.stack(np.meshgrid(*[x] * dim, indexing="ij"), -1).reshape(-1, dim)
    wts = np.prod(np.stack(np.meshgrid(*[w] * dim, indexing="ij"), -1).reshape(-1, dim), axis=1)
    vals = mix.wigner(grid @ chol.T) * np.exp(0.5 * np.sum(grid ** 2, axis=1))
    return float(np.sum(wts * vals) * np.linalg.det(chol))
