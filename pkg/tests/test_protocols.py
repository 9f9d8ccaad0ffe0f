import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cvlab.channels import BathPhysicalParams, twb_separability_time, twb_sigma_entries
from cvlab.conditioning import homodyne_condition, onoff_click
from cvlab.errors import CVLabError
from cvlab.protocols import (
    TeleportationSetup,
    classical_fidelity_limit,
    homodyne_conditional,
    homodyne_outcome_density,
    homodyne_photons,
    ips_effective_transmissivity,
    ips_improvement_threshold,
    ips_teleport_fidelity,
    onoff_conditional,
    onoff_conditional_ws_origin,
    overlap_fidelity_numeric,
    r_from_lambda,
    teleclone_asymmetric_fidelities,
    teleclone_optimal_family,
    teleclone_report,
    teleclone_symmetric_fidelity,
    teleclone_tradeoff,
    teleport_fidelity_ideal,
    teleport_fidelity_noisy,
    teleport_fidelity_squeezed,
    teleport_output,
    teleportation_cp_map_sigma,
    twb_photons,
)
from cvlab.states import Coherent, TWB, build, wigner_at

LAMBDAS = np.linspace(0.0, 0.95, 20)


def test_ideal_fidelity_examples():
    assert teleport_fidelity_ideal(0.0) == 0.5
    assert teleport_fidelity_ideal(0.5) == 0.75
    assert teleport_fidelity_ideal(0.999999) > 0.9999
    with pytest.raises(CVLabError):
        teleport_fidelity_ideal(1.0)


def test_ideal_fidelity_matches_wigner_overlap():
    lam = 0.5
    sigma = teleportation_cp_map_sigma(TeleportationSetup(r_from_lambda(lam)))
    coh = build(Coherent([0.7 - 0.4j]))
    f = overlap_fidelity_numeric(coh, teleport_output(coh, sigma))
    assert abs(f - 0.75) < 1e-6


def test_classical_limit_examples():
    assert classical_fidelity_limit(0.0) == 0.5
    assert classical_fidelity_limit(2.0) == 0.75
    assert classical_fidelity_limit(np.inf) == 1.0
    assert classical_fidelity_limit(1e12) == pytest.approx(1.0)


def test_cp_map_sigma_examples():
    r = 0.8
    assert np.allclose(teleportation_cp_map_sigma(TeleportationSetup(r)), np.exp(-2 * r) * np.eye(2))
    assert np.allclose(teleportation_cp_map_sigma(TeleportationSetup(0.0)), np.eye(2))
    setup = TeleportationSetup(r, 1.0, 0.3, 0.2)
    bath = BathPhysicalParams(0.3, 0.2)
    _, s2, s3, _ = twb_sigma_entries(r, 1.0, bath.N, bath.M, 0.4)
    assert np.allclose(np.diag(teleportation_cp_map_sigma(setup, 0.4)), [4 * s3, 4 * s2])


def test_noisy_fidelity_examples():
    f, xi = teleport_fidelity_noisy(TeleportationSetup(0.7, 1.0, 0.4, 0.0), 0.5)
    assert xi == pytest.approx(0.0, abs=1e-14)
    for lam in LAMBDAS:
        f0, _ = teleport_fidelity_noisy(TeleportationSetup(r_from_lambda(lam)), 0.0)
        assert abs(f0 - teleport_fidelity_ideal(lam)) < 1e-12


@pytest.mark.parametrize("r,nth,ns", [(0.5, 0.5, 0.0), (1.0, 0.2, 0.3), (0.3, 1.0, 0.1)])
def test_noisy_fidelity_is_half_at_separability_time(r, nth, ns):
    ts = twb_separability_time(r, 1.0, nth, ns)
    f, _ = teleport_fidelity_noisy(TeleportationSetup(r, 1.0, nth, ns), ts)
    assert abs(f - 0.5) < 1e-9


def test_optimal_squeezing_is_the_maximum():
    setup = TeleportationSetup(0.6, 1.0, 0.3, 0.4, 0.9)
    f, xi = teleport_fidelity_noisy(setup, 0.3)
    assert np.isclose(teleport_fidelity_squeezed(setup, 0.3, xi), f)
    for x in np.linspace(-2, 2, 81):
        assert teleport_fidelity_squeezed(setup, 0.3, x) <= f + 1e-12


@settings(max_examples=200, deadline=None)
@given(r=st.floats(0.05, 2), nth=st.floats(0, 2), ns=st.floats(0, 1), t=st.floats(0, 3))
def test_fidelity_above_half_iff_entangled(r, nth, ns, t):
    bath = BathPhysicalParams(nth, ns)
    _, s2, s3, _ = twb_sigma_entries(r, 1.0, bath.N, bath.M, t)
    f, _ = teleport_fidelity_noisy(TeleportationSetup(r, 1.0, nth, ns), t)
    gap = 4 * s2 * s3 - 0.25
    if abs(gap) > 1e-9:
        assert (f > 0.5) == (gap < 0)


def test_efficiency_rejected_outside_range():
    with pytest.raises(CVLabError):
        TeleportationSetup(0.5, eta=0.0)


def test_ips_fidelity_examples():
    assert ips_effective_transmissivity(0.9, 0.5) == pytest.approx(0.95)
    for tau in (0.2, 0.7, 1.0):
        assert ips_teleport_fidelity(0.0, tau) == pytest.approx(0.5)
    grid = np.linspace(0.01, 0.99, 99)
    for tau in (0.1, 0.3, 0.49):
        assert all(ips_teleport_fidelity(l, tau) < teleport_fidelity_ideal(l) for l in grid)
    for l in grid:
        assert ips_teleport_fidelity(l, 1.0) > teleport_fidelity_ideal(l)
    th = ips_improvement_threshold(0.9)
    assert th is not None and 0 < th < 1
    assert ips_teleport_fidelity(0.5 * th, 0.9) > teleport_fidelity_ideal(0.5 * th)
    assert ips_teleport_fidelity(min(0.5 * (1 + th), 0.99), 0.9) < teleport_fidelity_ideal(min(0.5 * (1 + th), 0.99))
    assert ips_improvement_threshold(0.3) is None


def test_telecloning_examples():
    assert teleclone_symmetric_fidelity(0.5) == pytest.approx(2 / 3, abs=1e-12)
    assert teleclone_symmetric_fidelity(0.0) == pytest.approx(0.5)
    f2, f3 = teleclone_asymmetric_fidelities(1.0, 0.25)
    assert f2 == pytest.approx(0.8) and f3 == pytest.approx(0.5)
    rep = teleclone_report(0.5, 0.5)
    assert rep.symmetric and np.allclose(rep.fidelities, 2 / 3)
    with pytest.raises(CVLabError):
        teleclone_symmetric_fidelity(-1.0)


def test_telecloning_symmetric_maximum():
    ns = np.linspace(0, 5, 50001)
    vals = np.array([teleclone_symmetric_fidelity(n) for n in ns])
    assert ns[np.argmax(vals)] == pytest.approx(0.5, abs=1e-4)
    assert vals.max() <= 2 / 3 + 1e-12


def test_telecloning_tradeoff_family():
    for f3 in np.linspace(0.5, 0.95, 19):
        n2, n3 = teleclone_optimal_family(f3)
        f2, g3 = teleclone_asymmetric_fidelities(n2, n3)
        assert abs(g3 - f3) < 1e-10
        assert abs(f2 - teleclone_tradeoff(f3)) < 1e-10
        assert abs(f2 + f3 - (1 + 0.75 * f2 * f3)) < 1e-10


def test_onoff_examples():
    assert onoff_conditional(0.0, 0.7).p_click == 0
    assert onoff_conditional(1e-4, 0.8).fano == pytest.approx(0.0, abs=1e-6)
    for lam in np.linspace(0.05, 0.95, 10):
        for eta in np.linspace(0.05, 1.0, 10):
            assert onoff_conditional(lam, eta).wigner_origin < 0


def test_onoff_subpoissonian_domain():
    # unit efficiency: sub-Poissonian for N < 2; uniformly in eta only for N < sqrt(2)
    for lam in np.linspace(0.01, 0.99, 200):
        n = twb_photons(lam)
        if n < 2:
            assert onoff_conditional(lam, 1.0).fano < 1
        if n < np.sqrt(2):
            for eta in (1e-6, 0.1, 0.5, 0.9):
                assert onoff_conditional(lam, eta).fano < 1


def test_onoff_fano_matches_photon_statistics():
    for lam, eta in [(0.67, 0.1), (0.3, 1.0), (0.8, 0.9)]:
        n = np.arange(3000)
        p = (1 - lam ** 2) * lam ** (2 * n) * (1 - (1 - eta) ** n)
        p /= p.sum()
        m = p @ n
        assert np.isclose(onoff_conditional(lam, eta).fano, (p @ n ** 2 - m * m) / m, rtol=1e-10)


@pytest.mark.parametrize("lam,eta", [(0.3, 1.0), (0.6, 0.4), (0.8, 0.9)])
def test_onoff_matches_conditioning_pipeline(lam, eta):
    rep = onoff_conditional(lam, eta)
    p, mix = onoff_click(build(TWB(r_from_lambda(lam))), [1], eta)
    assert np.isclose(p, rep.p_click, rtol=1e-12)
    assert np.isclose(mix.wigner(np.zeros(2)), rep.wigner_origin, rtol=1e-10)


def test_ws_origin_examples():
    assert onoff_conditional_ws_origin(0.5, 0.8, 0.0) == pytest.approx(onoff_conditional(0.5, 0.8).wigner_origin)
    assert onoff_conditional_ws_origin(0.5, 0.8, -0.5) < 0
    assert abs(onoff_conditional_ws_origin(0.5, 0.8, -1 + 1e-9)) < 1e-8
    with pytest.raises(CVLabError):
        onoff_conditional_ws_origin(0.5, 0.8, -1.0)


def test_homodyne_examples():
    lam = 0.6
    n = twb_photons(lam)
    rep = homodyne_conditional(lam, 1.0, 0.3)
    assert rep.var_q == pytest.approx(1 / (2 * (1 + n)))
    assert rep.var_q * rep.var_p == pytest.approx(0.25)
    half = homodyne_conditional(lam, 0.5, 0.3)
    assert half.var_q == pytest.approx(0.5) and not half.squeezed
    assert half.var_p == pytest.approx(rep.var_p)


@pytest.mark.parametrize("lam,eta,x", [(0.5, 1.0, 0.4), (0.7, 0.6, -1.1)])
def test_homodyne_matches_conditioning_pipeline(lam, eta, x):
    rep = homodyne_conditional(lam, eta, x)
    dens, cond = homodyne_condition(build(TWB(r_from_lambda(lam))), 1, x, eta)
    assert np.isclose(dens, rep.p_density)
    assert np.allclose(np.diag(cond.cov), [rep.var_q, rep.var_p])
    # the q-correlated twin-beam partner mirrors the outcome
    assert np.isclose(cond.mean[0], rep.alpha.real * np.sqrt(2))


def test_homodyne_energy_bookkeeping():
    lam = 0.7
    n = twb_photons(lam)
    val, _ = integrate.quad(lambda x: homodyne_outcome_density(lam, 1.0, x) * homodyne_photons(lam, x),
                            -np.inf, np.inf, epsabs=1e-12)
    assert val == pytest.approx(n / 2, rel=1e-9)


def test_binned_homodyne_window():
    lam, eta = 0.6, 0.9
    rep = homodyne_conditional(lam, eta, 0.0)
    inside = homodyne_conditional(lam, eta, 0.0, 0.9 * rep.max_bin_width)
    outside = homodyne_conditional(lam, eta, 0.0, 1.5 * rep.max_bin_width)
    assert inside.squeezed and not outside.squeezed
    assert homodyne_conditional(lam, 0.4, 0.0).max_bin_width == 0.0


def test_overlap_fidelity_requires_single_mode():
    with pytest.raises(CVLabError):
        s = build(TWB(0.1))
        overlap_fidelity_numeric(s, s)
    assert wigner_at(build(Coherent([0])), [0, 0]) == pytest.approx(1 / np.pi)
