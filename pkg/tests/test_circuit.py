import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jrmamp.circuit import (
    JrmParams,
    PhaseConfiguration,
    internal_phases,
    jrm_energy,
    jrm_gradient,
    jrm_hessian,
    segment_derivatives,
    segment_energy,
    solve_segment_phase,
)
from jrmamp.errors import BranchInstabilityError, SolverError

from oracles import richardson_derivative, scan_segment


# --- segment solve -----------------------------------------------------------


def test_segment_phase_trivial_points():
    assert solve_segment_phase(0.0, 0.3) == 0.0
    assert solve_segment_phase(1.0, 1e-12) == pytest.approx(1.0, abs=1e-11)
    assert solve_segment_phase(1.0, 0.0) == 1.0


@pytest.mark.parametrize("phi, alpha", [(1.0, 0.3), (2.5, 0.6), (-3.0, 0.9), (2.8, 1.5), (4.0, 2.5)])
def test_segment_phase_matches_scan(phi, alpha):
    chi_scan, e_scan = scan_segment(phi, alpha)
    chi = solve_segment_phase(phi, alpha)
    assert chi == pytest.approx(chi_scan, abs=2e-6)
    assert segment_energy(phi, alpha) == pytest.approx(e_scan, abs=1e-10)


def test_segment_phase_tie_goes_to_smaller_chi():
    # at phi = pi with alpha > 1 the two minima are mirror images about chi = pi
    chi = solve_segment_phase(np.pi, 1.5)
    assert chi < np.pi
    assert chi + 1.5 * np.sin(chi) == pytest.approx(np.pi, abs=1e-12)
    assert segment_energy(np.pi, 1.5) == pytest.approx(scan_segment(np.pi, 1.5)[1], abs=1e-10)


def test_segment_phase_residual_vectorized():
    phi = np.linspace(-20, 20, 2001)
    chi = solve_segment_phase(phi, 0.45)
    assert np.max(np.abs(chi + 0.45 * np.sin(chi) - phi)) < 1e-12


def test_segment_phase_guard():
    with pytest.raises(SolverError) as info:
        solve_segment_phase(150.0, 0.2)
    assert info.value.alpha == 0.2
    with pytest.raises(ValueError):
        solve_segment_phase(1.0, -0.1)


def test_segment_energy_values():
    for alpha in (0.0, 0.2, 0.8, 1.7):
        assert segment_energy(0.0, alpha) == pytest.approx(-1.0, abs=1e-15)
    assert segment_energy(np.pi, 0.0) == pytest.approx(1.0)
    _, e_scan = scan_segment(np.pi / 2, 0.1)
    assert segment_energy(np.pi / 2, 0.1) == pytest.approx(e_scan, abs=1e-8)


def test_small_alpha_limit():
    phi = np.linspace(-6, 6, 101)
    assert np.max(np.abs(segment_energy(phi, 1e-8) + np.cos(phi))) < 1e-6


# --- derivatives -------------------------------------------------------------


def test_segment_derivatives_trivial():
    assert segment_derivatives(0.0, 0.0)[4] == pytest.approx(-1.0)
    assert segment_derivatives(np.pi / 2, 0.0)[4] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("phi, alpha", [(0.7, 0.25), (1.9, 0.5), (-2.2, 0.1)])
def test_segment_derivatives_richardson(phi, alpha):
    d = segment_derivatives(phi, alpha, 4)

    def f(x):
        return segment_energy(x, alpha)

    for k in range(1, 5):
        fd = richardson_derivative(f, phi, k)
        assert d[k] == pytest.approx(fd, rel=1e-6, abs=1e-7), k


def test_branch_instability():
    # chi near pi with alpha > 1 makes 1 + alpha cos(chi) negative on the unstable branch
    from jrmamp.circuit import _derivatives_from_chi

    with pytest.raises(BranchInstabilityError):
        _derivatives_from_chi(np.array(np.pi), 1.5, 2)


def test_max_order_bounds():
    with pytest.raises(ValueError):
        segment_derivatives(0.1, 0.1, 5)


# --- ring --------------------------------------------------------------------


def test_ring_energy_trivial():
    p = JrmParams(beta=4.5)
    assert jrm_energy(np.zeros(4), p, 0.0) == pytest.approx(-4.0)
    assert jrm_energy(np.zeros(4), p, 4 * np.pi) == pytest.approx(4.0)
    assert np.allclose(jrm_gradient(np.zeros(4), p, 1.234), 0.0, atol=1e-14)


def test_ring_energy_composition():
    rng = np.random.default_rng(7)
    p = JrmParams(beta=4.5, alpha=0.2)
    phi = rng.uniform(-2, 2, 4)
    flux = 2 * np.pi
    x = np.roll(phi, -1) - phi - flux / 4
    arms = sum(scan_segment(xi, 0.2)[1] for xi in x)
    shunt = 0.5 * 4.5 * np.sum((phi - phi.mean()) ** 2)
    assert jrm_energy(phi, p, flux) == pytest.approx(arms + shunt, abs=1e-8)


def test_gradient_and_hessian_finite_differences():
    rng = np.random.default_rng(3)
    p = JrmParams(beta=2.0, alpha=0.3, junction_asymmetry=(1.0, 1.1, 0.9, 1.05),
                  loop_flux_asymmetry=(0.0, 0.02, -0.01, 0.0))
    for _ in range(5):
        phi = rng.uniform(-2, 2, 4)
        flux = rng.uniform(0, 4 * np.pi)
        g = jrm_gradient(phi, p, flux)
        h = jrm_hessian(phi, p, flux)
        for i in range(4):
            e = np.eye(4)[i]
            fd = richardson_derivative(lambda t: jrm_energy(phi + t * e, p, flux), 0.0, 1)
            assert g[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)
            fdg = richardson_derivative(lambda t: jrm_gradient(phi + t * e, p, flux), 0.0, 1)
            assert np.allclose(h[:, i], fdg, rtol=1e-6, atol=1e-8)


def test_batched_landscape_matches_loop():
    rng = np.random.default_rng(11)
    p = JrmParams(beta=1.5, alpha=0.4)
    phis = rng.uniform(-3, 3, (6, 4))
    batch = jrm_energy(phis, p, 3.0)
    assert np.allclose(batch, [jrm_energy(x, p, 3.0) for x in phis], rtol=0, atol=1e-14)


def test_internal_phases_relation():
    p = JrmParams(beta=4.5, alpha=0.3)
    cfg = internal_phases(np.zeros(4), p, 2 * np.pi)
    expected = np.pi / 2 + solve_segment_phase(-np.pi / 2, 0.3)
    assert np.allclose(cfg.delta, expected)


def test_params_validation_and_inductances():
    with pytest.raises(ValueError):
        JrmParams(beta=-1)
    with pytest.raises(ValueError):
        JrmParams(beta=1, alpha=-0.1)
    with pytest.raises(ValueError):
        JrmParams(beta=1, l_shunt=2.0)
    p = JrmParams.from_inductances(l_shunt=0.5, l_out=0.1, e_j=2.0)
    assert p.beta == pytest.approx(1.0) and p.alpha == pytest.approx(0.2)
    assert p.replace(beta=3.0).l_shunt is None


def test_phase_configuration():
    cfg = PhaseConfiguration([1.0, 2.0, 3.0, 4.0])
    assert cfg.phi_e == 2.5
    assert cfg.phase(5) == cfg.phase(1)


# --- properties --------------------------------------------------------------

phases = st.lists(st.floats(-6, 6), min_size=4, max_size=4).map(np.array)


@settings(max_examples=60, deadline=None)
@given(phases, st.floats(-10, 10), st.floats(0, 4 * np.pi), st.floats(0, 0.9))
def test_gauge_invariance(phi, shift, flux, alpha):
    p = JrmParams(beta=3.0, alpha=alpha)
    e0 = jrm_energy(phi, p, flux)
    assert jrm_energy(phi + shift, p, flux) == pytest.approx(e0, abs=1e-10 * max(1, abs(e0)))


@settings(max_examples=60, deadline=None)
@given(phases, st.floats(0, 4 * np.pi), st.floats(0, 0.9))
def test_flux_reversal(phi, flux, alpha):
    p = JrmParams(beta=3.0, alpha=alpha)
    assert jrm_energy(-phi, p, -flux) == pytest.approx(jrm_energy(phi, p, flux), abs=1e-12)
