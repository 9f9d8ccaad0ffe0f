import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvlab.channels import (
    BathMode,
    BathPhysicalParams,
    ChannelSpec,
    NeverSeparable,
    asymptotic_covariance,
    bath_purity_parameters,
    evolve,
    gaussian_noise_map,
    min_pt_eigenvalue,
    nonclassical_depth_evolution,
    optimal_purity_evolution,
    purity_evolution,
    purity_has_interior_minimum,
    separability_time_numeric,
    t_state_mode_one_time,
    twb_evolved_covariance,
    twb_separability_time,
    twb_separability_time_unsqueezed,
)
from cvlab.errors import CVLabError
from cvlab.states import (
    Coherent,
    DisplacedSqueezedThermal,
    GaussianState,
    SqueezedVacuum,
    TriT,
    TWB,
    build,
    mean_photon_number,
    nonclassical_depth,
    purity,
)
from helpers import random_cov


def test_asymptotic_covariance_examples():
    assert np.allclose(asymptotic_covariance(ChannelSpec.uniform(1, 1.0)), 0.5 * np.eye(2))
    assert np.allclose(asymptotic_covariance(ChannelSpec.uniform(1, 1.0, 1.0)), 1.5 * np.eye(2))
    bath = BathPhysicalParams(0.5, 0.1)
    assert np.isclose(bath.M, 2 * np.sqrt(0.11))
    block = asymptotic_covariance(ChannelSpec((bath.bath_mode(1.0),)))
    assert np.isclose(0.5 * (block[0, 0] - block[1, 1]), 0.6633249580710799)


def test_bath_constraint_enforced():
    with pytest.raises(CVLabError):
        BathMode(1.0, 0.5, 2.0)
    with pytest.raises(CVLabError):
        BathMode(-1.0)
    with pytest.raises(CVLabError):
        BathPhysicalParams(-0.1)


def test_channel_json_round_trip():
    spec = ChannelSpec((BathMode(1.0, 0.5, 0.2 + 0.1j), BathMode(2.0, 0.0, 0.0)))
    assert ChannelSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(CVLabError):
        ChannelSpec.from_dict({"modes": [{"n_th": 1}]})


def test_evolve_endpoints():
    s = build(TWB(0.7))
    spec = ChannelSpec.uniform(2, 1.3, 0.4, 0.2 - 0.3j)
    assert np.allclose(evolve(s, spec, 0.0).cov, s.cov)
    assert np.allclose(evolve(s, spec, 50 / 1.3).cov, asymptotic_covariance(spec), atol=1e-10)
    with pytest.raises(CVLabError):
        evolve(s, spec, -1.0)


def test_twin_beam_entries_match_evolution():
    r, gamma, bath = 0.8, 0.7, BathPhysicalParams(0.3, 0.2)
    spec = ChannelSpec.uniform(2, gamma, bath.N, bath.M)
    for t in (0.0, 0.3, 1.7):
        assert np.allclose(evolve(build(TWB(r)), spec, t).cov,
                           twb_evolved_covariance(r, gamma, bath.N, bath.M, t), atol=1e-12)


def test_gaussian_noise_map_examples():
    s = build(Coherent([1 + 1j]))
    assert np.array_equal(gaussian_noise_map(s, np.zeros((2, 2))).cov, s.cov)
    delta = np.diag([0.4, 0.9])
    out = gaussian_noise_map(s, delta)
    assert np.isclose(mean_photon_number(out) - mean_photon_number(s), np.trace(delta) / 4)
    iso = gaussian_noise_map(s, 0.8 * np.eye(2))
    assert np.isclose(mean_photon_number(iso) - mean_photon_number(s), np.sqrt(np.linalg.det(0.8 * np.eye(2))) / 2)
    with pytest.raises(CVLabError):
        gaussian_noise_map(s, np.diag([1.0, -1.0]))


def test_noise_map_short_time_limit():
    gamma, t, n = 1.0, 1e-3, 1e3
    spec = ChannelSpec.uniform(1, gamma, n)
    s = build(SqueezedVacuum(0.3, 0.0))
    a = evolve(s, spec, t).cov
    b = gaussian_noise_map(s, 2 * gamma * t * asymptotic_covariance(spec)).cov
    assert np.allclose(a, b, rtol=1e-3)


def test_purity_evolution_examples():
    spec = ChannelSpec.uniform(1, 1.0, 0.6)
    assert np.isclose(purity_evolution(0.5, 0.4, 0.1, spec, 0.0), 0.5)
    mu_inf = 1 / (2 * 0.6 + 1)
    for t in (0.1, 0.5, 2.0):
        assert np.isclose(purity_evolution(0.7, 0.0, 0.0, spec, t),
                          optimal_purity_evolution(0.7, mu_inf, 1.0, t), rtol=1e-13)


def test_optimal_squeezed_bath_matches_unsqueezed_evolution():
    mode = BathPhysicalParams(0.4, 0.3).bath_mode(1.2)
    spec = ChannelSpec((mode,))
    mu_inf, r_inf, phase = bath_purity_parameters(mode)
    for t in np.linspace(0, 3, 13):
        assert np.isclose(purity_evolution(0.6, r_inf, phase, spec, t),
                          optimal_purity_evolution(0.6, mu_inf, 1.2, t), rtol=1e-12)


def test_interior_minimum_condition():
    gamma, mu_inf = 1.0, 1 / 1.4
    spec = ChannelSpec.uniform(1, gamma, 0.2)
    ts = np.linspace(0, 10, 4001)
    for mu0, r0 in [(0.9, 0.1), (0.9, 1.0), (0.5, 0.3), (0.5, 1.2), (0.71, 0.4)]:
        mus = np.array([purity_evolution(mu0, r0, 0.0, spec, t) for t in ts])
        dips = mus.min() < min(mus[0], mus[-1]) - 1e-12
        assert dips == purity_has_interior_minimum(mu0, r0, mu_inf)


def test_nonclassical_depth_evolution_examples():
    spec = ChannelSpec.uniform(1, 1.0)
    assert nonclassical_depth_evolution(1.0, 0.0, spec, 0.7) == 0
    s = build(SqueezedVacuum(1.0, 0.0))
    assert np.isclose(nonclassical_depth_evolution(1.0, 1.0, spec, 0.1),
                      nonclassical_depth(evolve(s, spec, 0.1)), atol=1e-9)
    hot = ChannelSpec.uniform(1, 1.0, 0.5)
    assert nonclassical_depth_evolution(1.0, 1.0, hot, 60.0) == 0


def test_twb_threshold_examples():
    t0 = twb_separability_time(0.5, 1.0, 0.5)
    assert np.isclose(t0, np.log(1 + (1 - np.exp(-1))), rtol=1e-12)
    assert np.isclose(t0, 0.4898801261, atol=1e-9)
    assert np.isclose(t0, twb_separability_time_unsqueezed(0.5, 1.0, 0.5), rtol=1e-12)
    assert twb_separability_time(0.5, 1.0, 0.5, 0.2) < t0
    assert twb_separability_time(1e-9, 1.0, 0.5) < 1e-8
    assert isinstance(twb_separability_time(0.5, 1.0, 0.0), NeverSeparable)
    assert float(twb_separability_time_unsqueezed(0.5, 1.0, 0.0)) == np.inf


def test_zero_temperature_squeezed_bath_can_separate():
    r, ns = 0.2, 1.0
    assert np.exp(-2 * r) * (1 + 2 * ns) > 1
    ts = twb_separability_time(r, 1.0, 0.0, ns)
    bath = BathPhysicalParams(0.0, ns)
    spec = ChannelSpec.uniform(2, 1.0, bath.N, bath.M)
    assert np.isclose(separability_time_numeric(build(TWB(r)), spec, [1], 20.0), ts, rtol=1e-6)


def test_numeric_threshold_examples():
    spec = ChannelSpec.uniform(2, 1.0, 0.5)
    assert np.isclose(separability_time_numeric(build(TWB(0.5)), spec, [1], 10.0),
                      twb_separability_time(0.5, 1.0, 0.5), rtol=1e-6)
    n2, n3, nth = 0.6, 0.3, 0.4
    t3 = ChannelSpec.uniform(3, 1.0, nth)
    num = separability_time_numeric(build(TriT(n2, n3, 0, 0, 0)), t3, [0], 20.0)
    assert np.isclose(num, t_state_mode_one_time(n2 + n3, 1.0, nth), rtol=1e-6)
    cold = ChannelSpec.uniform(3, 1.0, 0.0)
    assert separability_time_numeric(build(TriT(n2, n3, 0, 0, 0)), cold, [0], 20.0) is None
    assert isinstance(t_state_mode_one_time(0.9, 1.0, 0.0), NeverSeparable)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_semigroup_and_physicality(seed):
    rng = np.random.default_rng(seed)
    s = GaussianState(rng.normal(size=4), random_cov(rng, 2))
    modes = []
    for _ in range(2):
        n = rng.uniform(0, 2)
        m = np.sqrt(n * (n + 1)) * rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        modes.append(BathMode(rng.uniform(0.1, 2), n, m))
    spec = ChannelSpec(tuple(modes))
    t1, t2 = rng.uniform(0, 2, 2)
    a = evolve(evolve(s, spec, t1), spec, t2)
    b = evolve(s, spec, t1 + t2)
    assert np.allclose(a.cov, b.cov, atol=1e-10) and np.allclose(a.mean, b.mean, atol=1e-10)
    assert b.is_physical()


@settings(max_examples=200, deadline=None)
@given(mu0=st.floats(0.05, 1.0), r0=st.floats(0, 1.5), phi0=st.floats(0, 2 * np.pi),
       n=st.floats(0, 2), frac=st.floats(0, 1), arg=st.floats(0, 2 * np.pi),
       gamma=st.floats(0.1, 3), t=st.floats(0, 3))
def test_purity_closed_form_matches_pipeline(mu0, r0, phi0, n, frac, arg, gamma, t):
    m = frac * np.sqrt(n * (n + 1)) * np.exp(1j * arg)
    spec = ChannelSpec((BathMode(gamma, n, m),))
    s = build(DisplacedSqueezedThermal(0.0, r0, phi0, 0.5 * (1 / mu0 - 1)))
    assert abs(purity_evolution(mu0, r0, phi0, spec, t) - purity(evolve(s, spec, t))) < 1e-10


def test_min_pt_eigenvalue_at_threshold():
    spec = ChannelSpec.uniform(2, 1.0, 0.5)
    t = twb_separability_time(0.9, 1.0, 0.5)
    assert np.isclose(min_pt_eigenvalue(evolve(build(TWB(0.9)), spec, t), [1]), 0.5, atol=1e-12)
