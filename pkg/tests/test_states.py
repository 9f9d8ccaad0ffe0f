import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cvlab.errors import CVLabError, DimensionError, PhysicalityError
from cvlab.states import (
    ECS,
    Coherent,
    DisplacedSqueezedThermal,
    GaussianState,
    SqueezedVacuum,
    Thermal,
    TriT,
    TriV3,
    TWB,
    TwoModeSqueezedThermal,
    Vacuum,
    apply_symplectic,
    beam_splitter_matrix,
    build,
    characteristic_at,
    embed,
    mean_photon_number,
    nonclassical_depth,
    partial_trace,
    purity,
    squeezer_matrix,
    state_from_dict,
    state_to_dict,
    state_to_json,
    tensor,
    two_mode_squeezer_matrix,
    von_neumann_entropy,
    wigner_at,
)
from helpers import random_cov, random_symplectic


def test_family_examples():
    vac = build(Vacuum(1))
    assert np.array_equal(vac.mean, [0, 0]) and np.array_equal(vac.cov, 0.5 * np.eye(2))
    assert np.allclose(build(Thermal([1.0])).cov, 1.5 * np.eye(2))
    cov = build(TWB(0.5)).cov
    assert np.allclose(cov[:2, :2], np.cosh(1) / 2 * np.eye(2))
    assert np.allclose(cov[:2, 2:], np.sinh(1) / 2 * np.diag([1, -1]))


def test_single_mode_covariance_matches_entrywise_form():
    # explicit entries of a squeezed thermal state, canonical units
    r, phi, n = 0.4, 0.9, 0.7
    cov = build(DisplacedSqueezedThermal(0.3 - 0.2j, r, phi, n)).cov
    k = (n + 0.5)
    expected = k * np.array([[np.cosh(2 * r) + np.sinh(2 * r) * np.cos(phi), np.sinh(2 * r) * np.sin(phi)],
                             [np.sinh(2 * r) * np.sin(phi), np.cosh(2 * r) - np.sinh(2 * r) * np.cos(phi)]])
    assert np.allclose(cov, expected, atol=1e-12)


def test_coherent_mean_convention():
    s = build(Coherent([1 + 2j]))
    assert np.allclose(s.mean, np.sqrt(2) * np.array([1, 2]))
    assert np.isclose(mean_photon_number(build(Coherent([np.sqrt(2)]))), 2.0)


def test_invalid_parameters():
    with pytest.raises(CVLabError):
        build(Thermal([-1.0]))
    with pytest.raises(CVLabError):
        build(ECS(1.0))
    with pytest.raises(PhysicalityError):
        GaussianState(None, 0.1 * np.eye(2))


def test_apply_symplectic_examples():
    s = build(TWB(0.3))
    same = apply_symplectic(s, np.eye(4))
    assert np.array_equal(same.cov, s.cov)
    sq = apply_symplectic(build(Vacuum(1)), squeezer_matrix(0.3))
    assert np.allclose(sq.cov, np.diag([np.exp(0.6), np.exp(-0.6)]) / 2)
    with pytest.raises(DimensionError):
        apply_symplectic(s, np.eye(2))


def test_two_mode_squeezer_builds_twin_beam():
    out = apply_symplectic(build(Vacuum(2)), two_mode_squeezer_matrix(0.5))
    assert np.allclose(out.cov, build(TWB(0.5)).cov, atol=1e-12)


def test_identity_building_blocks():
    assert np.allclose(beam_splitter_matrix(0.0).matrix, np.eye(4))
    assert np.allclose(squeezer_matrix(0.0, 1.3).matrix, np.eye(2))


def test_partial_trace_examples():
    r = 0.8
    red = partial_trace(build(TWB(r)), [1])
    assert np.allclose(red.cov, (np.sinh(r) ** 2 + 0.5) * np.eye(2))
    prod = tensor(build(Vacuum(1)), build(Thermal([2.0])))
    assert np.allclose(partial_trace(prod, [1]).cov, 2.5 * np.eye(2))
    t = build(TriT(0.7, 0.4, 0.0, 0.0, 0.0))
    assert np.allclose(partial_trace(t, [0]).cov, (1.1 + 0.5) * np.eye(2))
    with pytest.raises(DimensionError):
        partial_trace(t, [])
    with pytest.raises(DimensionError):
        partial_trace(t, [3])


def test_purity_examples():
    assert np.isclose(purity(build(Vacuum(1))), 1.0)
    assert np.isclose(purity(build(Thermal([1.0]))), 1 / 3)
    r = 0.6
    assert np.isclose(purity(partial_trace(build(TWB(r)), [0])), 1 / (2 * np.sinh(r) ** 2 + 1))


def test_entropy_examples():
    assert abs(von_neumann_entropy(build(TWB(1.2)))) < 1e-10
    assert np.isclose(von_neumann_entropy(build(Thermal([1.0]))), 2 * np.log(2))
    n = np.sinh(1.0) ** 2
    expected = (n + 1) * np.log(n + 1) - n * np.log(n)
    assert np.isclose(von_neumann_entropy(partial_trace(build(TWB(1.0)), [0])), expected)


def test_photon_number_examples():
    assert mean_photon_number(build(Vacuum(2))) == 0
    assert np.isclose(mean_photon_number(build(TWB(1.0))), 2 * np.sinh(1) ** 2)


def test_nonclassical_depth_examples():
    assert nonclassical_depth(build(Coherent([1 + 1j]))) == 0
    r = 0.7
    assert np.isclose(nonclassical_depth(build(SqueezedVacuum(r, 0.3))), (1 - np.exp(-2 * r)) / 2)
    assert nonclassical_depth(build(Thermal([0.3]))) == 0


def test_wigner_and_characteristic_examples():
    assert np.isclose(wigner_at(build(Vacuum(1)), [0, 0]), 1 / np.pi)
    assert characteristic_at(build(TWB(0.4)), np.zeros(4)) == 1
    # quadrature-normalized TWB Wigner at the origin is 1/pi^2
    assert np.isclose(wigner_at(build(TWB(0.9)), np.zeros(4)), 1 / np.pi ** 2)


def test_wigner_normalization_single_mode():
    s = build(DisplacedSqueezedThermal(0.5 + 0.2j, 0.5, 0.4, 0.3))
    box = 6 * np.sqrt(np.max(np.linalg.eigvalsh(s.cov)))
    val, _ = integrate.dblquad(lambda p, q: wigner_at(s, [q, p]), s.mean[0] - box, s.mean[0] + box,
                               s.mean[1] - box, s.mean[1] + box, epsabs=1e-10)
    assert abs(val - 1) < 1e-6


def test_wigner_normalization_two_modes():
    s = build(TwoModeSqueezedThermal(0.3, 0.2, 0.1))
    # Gauss-Hermite tensor grid, exact for a Gaussian integrand up to rounding
    x, w = np.polynomial.hermite_e.hermegauss(24)
    cov = s.cov
    chol = np.linalg.cholesky(2 * cov)
    pts = np.stack(np.meshgrid(x, x, x, x, indexing="ij"), -1).reshape(-1, 4)
    wts = np.prod(np.stack(np.meshgrid(w, w, w, w, indexing="ij"), -1).reshape(-1, 4), axis=1)
    y = pts @ chol.T / np.sqrt(2)
    dens = wigner_at(s, y) / np.exp(-0.5 * np.sum(pts ** 2, axis=1))
    val = np.sum(wts * dens) * np.linalg.det(chol) / np.sqrt(2) ** 4
    assert abs(val - 1) < 1e-6


def test_json_round_trip_is_exact():
    s = build(TriV3(0.37))
    back = state_from_dict(json.loads(state_to_json(s)))
    assert np.array_equal(back.cov, s.cov) and np.array_equal(back.mean, s.mean)
    d = state_to_dict(s)
    assert d["ordering"] == "qp-interleaved"
    assert d["convention"] == {"hbar": 1, "vacuum_variance": 0.5}


def test_json_rejects_malformed_documents():
    with pytest.raises(CVLabError):
        state_from_dict({"n_modes": 1, "mean": [0, 0]})
    with pytest.raises(PhysicalityError):
        state_from_dict({"n_modes": 1, "mean": [0, 0], "cov": [[0.1, 0], [0, 0.1]]})


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 3))
def test_physicality_preserved(seed, n):
    rng = np.random.default_rng(seed)
    s = GaussianState(rng.normal(size=2 * n), random_cov(rng, n))
    out = apply_symplectic(s, random_symplectic(rng, n))
    assert out.is_physical()
    assert partial_trace(out, [0]).is_physical()


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pure_iff_all_symplectic_eigenvalues_half(seed):
    rng = np.random.default_rng(seed)
    f = random_symplectic(rng, 2)
    pure = GaussianState(None, 0.5 * f @ f.T)
    assert np.isclose(purity(pure), 1.0, atol=1e-8)
    assert np.allclose(pure.symplectic_eigenvalues(), 0.5, atol=1e-8)
    mixed = GaussianState(None, random_cov(rng, 2) + 0.1 * np.eye(4))
    assert purity(mixed) < 1


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_beam_splitter_conserves_photons(seed):
    rng = np.random.default_rng(seed)
    s = GaussianState(rng.normal(size=4), random_cov(rng, 2))
    bs = beam_splitter_matrix(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
    assert np.isclose(mean_photon_number(apply_symplectic(s, bs)), mean_photon_number(s), rtol=1e-10)


@settings(max_examples=100, deadline=None)
@given(r=st.floats(0, 2), n1=st.floats(0, 2), n2=st.floats(0, 2))
def test_two_mode_squeezer_conserves_photon_difference(r, n1, n2):
    s = tensor(build(Thermal([n1])), build(Thermal([n2])))
    out = apply_symplectic(s, two_mode_squeezer_matrix(r, 0.4))
    diff = lambda st_: mean_photon_number(partial_trace(st_, [0])) - mean_photon_number(partial_trace(st_, [1]))  # noqa: E731
    assert np.isclose(diff(out), diff(s), atol=1e-9)


def test_twin_beam_duality():
    for r in np.linspace(0.1, 3.0, 30):
        out = apply_symplectic(build(TWB(r)), beam_splitter_matrix(np.pi / 4))
        assert np.max(np.abs(out.cov[:2, 2:])) < 1e-10
        # the two outputs are squeezed along opposite quadratures
        a, b = np.diag(out.cov[:2, :2]), np.diag(out.cov[2:, 2:])
        assert np.allclose(sorted(a), sorted(b)) and np.isclose(a[0], b[1])


def test_embed_rejects_bad_targets():
    with pytest.raises(DimensionError):
        embed(np.eye(2), [2], 2)
