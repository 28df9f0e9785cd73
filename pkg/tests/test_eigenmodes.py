import numpy as np
import pytest

from jrmamp.circuit import JrmParams, jrm_energy
from jrmamp.eigenmodes import (
    CapacitanceSet,
    closed_form_frequencies,
    delta_equilibrium,
    dynamical_matrix,
    eigenmodes,
    linear_coupling,
    mode_frequencies_vs_flux,
)
from jrmamp.errors import InstabilityError

from oracles import bisect_root, richardson_derivative


def random_case(rng):
    c1, c3 = rng.uniform(0.3, 3.0, 2)
    params = JrmParams(beta=rng.uniform(4.1, 8.0), alpha=rng.uniform(0.0, 0.4))
    flux = rng.uniform(0, 2 * np.pi)
    return params, CapacitanceSet(c1, c1, c3, c3), flux


def test_delta_equilibrium():
    assert delta_equilibrium(0.0, 3.0) == pytest.approx(0.75)
    assert delta_equilibrium(0.4, 0.0) == 0.0
    root = bisect_root(lambda d: d + 0.3 * np.sin(d) - np.pi / 2, 0.0, np.pi)
    d = delta_equilibrium(0.3, 2 * np.pi)
    assert d == pytest.approx(root, abs=1e-12)
    assert abs(d + 0.3 * np.sin(d) - np.pi / 2) < 1e-12
    # continuous in flux
    grid = np.linspace(0, 4 * np.pi, 2001)
    assert np.max(np.abs(np.diff(delta_equilibrium(0.3, grid)))) < 0.01


def test_dynamical_matrix_structure():
    p = JrmParams(beta=4.5)
    caps = CapacitanceSet(1.0, 1.0, 1.0, 1.0)
    m = dynamical_matrix(p, caps, 1.3)
    shunt = p.beta * (np.eye(4) - 0.25) / 2.0
    josephson = m - shunt
    assert np.allclose(josephson.sum(axis=1), 0.0, atol=1e-14)
    # shunt pattern (3, -1, -1, -1)/(8 C L_shunt) with 1/L_shunt = beta
    assert np.allclose(shunt[0], np.array([3, -1, -1, -1]) * p.beta / 8)
    assert np.allclose(josephson[0], np.cos(1.3 / 4) / 2 * np.array([2, -1, 0, -1]))


def test_dynamical_matrix_alpha_limit():
    caps = CapacitanceSet(1.0, 1.0, 2.0, 2.0)
    m0 = dynamical_matrix(JrmParams(beta=4.5, alpha=0.0), caps, 2.0)
    m1 = dynamical_matrix(JrmParams(beta=4.5, alpha=1e-12), caps, 2.0)
    assert np.allclose(m0, m1, atol=1e-11)


def test_dynamical_matrix_hessian_oracle():
    rng = np.random.default_rng(2)
    for _ in range(3):
        p, caps, flux = random_case(rng)
        m = dynamical_matrix(p, caps, flux)
        row_caps = np.array([caps.c1, caps.c4, caps.c2, caps.c3])
        v = rng.standard_normal(4)
        # directional second derivative along v and mixed with each axis
        for i in range(4):
            e = np.eye(4)[i]

            def mixed(t):
                return richardson_derivative(lambda s: jrm_energy(s * e + t * v, p, flux), 0.0, 1)

            hv_i = richardson_derivative(mixed, 0.0, 1)
            assert (m @ v)[i] == pytest.approx(hv_i / (2 * row_caps[i]), rel=1e-6, abs=1e-8)


def test_closed_forms_random():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p, caps, flux = random_case(rng)
        res = eigenmodes(p, caps, flux)
        cf = closed_form_frequencies(p, caps, flux)
        assert res.omega("0") == 0.0
        for lab in "abc":
            assert res.omega(lab) == pytest.approx(cf[lab], rel=1e-9)
        assert np.all(np.diff(res.frequencies) >= 0)


def test_eigenvectors_and_participation():
    caps = CapacitanceSet(1.0, 1.0, 2.5, 2.5)
    res = eigenmodes(JrmParams(beta=4.5, alpha=0.2), caps, 1.0)
    norm = np.sqrt(1 + 2.5 ** 2)
    expected = {
        "0": np.ones(4) / 2,
        "a": np.array([1, 0, -1, 0]) / np.sqrt(2),
        "b": np.array([0, 1, 0, -1]) / np.sqrt(2),
        "c": np.array([2.5, -1.0, 2.5, -1.0]) / (np.sqrt(2) * norm),
    }
    for lab, vec in expected.items():
        assert np.allclose(res.vector(lab), vec, atol=1e-9), lab
    assert res.lambda1 == pytest.approx(2.5 / norm, abs=1e-9)
    assert res.lambda2 == pytest.approx(1.0 / norm, abs=1e-9)
    assert res.lambda1 ** 2 + res.lambda2 ** 2 == pytest.approx(1.0)
    metric = np.diag(2 * caps.row_order())
    gram = res.vectors @ metric @ res.vectors.T
    assert np.allclose(gram - np.diag(np.diag(gram)), 0.0, atol=1e-12)


def test_degenerate_symmetric_case_is_labelled():
    # equal capacitances make a and b degenerate; the templates must still be recovered
    res = eigenmodes(JrmParams(beta=4.5), CapacitanceSet.symmetric(), 0.5)
    assert sorted(res.labels) == ["0", "a", "b", "c"]
    assert np.allclose(res.vector("a"), np.array([1, 0, -1, 0]) / np.sqrt(2), atol=1e-9)
    assert np.allclose(res.vector("b"), np.array([0, 1, 0, -1]) / np.sqrt(2), atol=1e-9)


def test_mode_substitution_diagonalizes():
    rng = np.random.default_rng(5)
    for _ in range(10):
        p, caps, flux = random_case(rng)
        res = eigenmodes(p, caps, flux)
        l1, l2 = res.lambda1, res.lambda2
        t = np.column_stack([
            [1, 1, 1, 1],
            [1, 0, -1, 0],
            [0, 1, 0, -1],
            [l1, -l2, l1, -l2],
        ]).astype(float)
        from jrmamp.circuit import jrm_hessian

        pot = t.T @ jrm_hessian(np.zeros(4), p, flux) @ t
        kin = t.T @ np.diag(caps.row_order()) @ t
        for mat in (pot, kin):
            off = mat - np.diag(np.diag(mat))
            assert np.max(np.abs(off)) <= 1e-9


def test_stray_renormalization():
    rng = np.random.default_rng(9)
    for _ in range(20):
        p, caps, flux = random_case(rng)
        d = delta_equilibrium(p.alpha, flux)
        scale = 1.0 / (1.0 + p.alpha * np.cos(d))
        bare = JrmParams(beta=p.beta, alpha=0.0, junction_asymmetry=(scale,) * 4)
        a = eigenmodes(p, caps, flux).frequencies
        b = eigenmodes(bare, caps, 4 * d).frequencies
        assert np.allclose(a, b, rtol=1e-9, atol=1e-12)
        assert linear_coupling(p, flux) == pytest.approx(np.cos(d) * scale)


def test_instability_error():
    with pytest.raises(InstabilityError) as info:
        eigenmodes(JrmParams(beta=0.5), CapacitanceSet.symmetric(), 4 * np.pi)
    assert info.value.flux == pytest.approx(4 * np.pi)


def test_frequency_curves():
    p = JrmParams(beta=4.5)
    caps = CapacitanceSet.symmetric()
    grid = np.linspace(0, 2 * np.pi, 41)
    curves = mode_frequencies_vs_flux(p, caps, grid)
    assert not curves.unstable.any()
    assert np.all(np.diff(curves.omega_a) < 0)
    assert curves.omega_a[0] == pytest.approx(curves.omega_b[0])
    # equal caps: omega_c^2 = 2 omega_a^2 - beta/(2C) (the shunt term enters once)
    assert curves.omega_c[0] ** 2 == pytest.approx(2 * curves.omega_a[0] ** 2 - p.beta / 2)
    assert len(list(curves.rows())) == grid.size


def test_frequency_curves_alpha_shift_and_nan():
    caps = CapacitanceSet(1.0, 1.0, 2.0, 2.0)
    grid = np.linspace(0.5, 3 * np.pi, 9)
    shifted = mode_frequencies_vs_flux(JrmParams(beta=4.5, alpha=0.2), caps, grid)
    for f, wa in zip(grid, shifted.omega_a):
        d = delta_equilibrium(0.2, f)
        k = np.cos(d) / (1 + 0.2 * np.cos(d))
        assert wa == pytest.approx(np.sqrt(k / 1.0 + 4.5 / 2.0), rel=1e-12)
    weak = mode_frequencies_vs_flux(JrmParams(beta=0.5), CapacitanceSet.symmetric(), [0.0, 4 * np.pi])
    assert weak.unstable.tolist() == [False, True]
    assert np.isnan(weak.omega_a[1])


def test_capacitance_validation():
    with pytest.raises(ValueError):
        CapacitanceSet(1.0, -1.0, 1.0, 1.0)
