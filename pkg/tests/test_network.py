import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jrmamp.errors import BandwidthError, DivergenceError, UnreachableGainError
from jrmamp.network import (
    ModeSpec,
    PumpedNetwork,
    PumpSpec,
    balance_gc,
    bandwidth,
    calibrate_single_pump,
    db,
    gain_curves,
    phase_sensitive_gain,
    scattering,
    two_tone_spectrum,
)

from oracles import quadrature_scattering

KAPPA = 10.0
BARE = PumpedNetwork(ModeSpec(7466.8, KAPPA), ModeSpec(4871.5, KAPPA))
WIDTH_FACTOR = np.sqrt(np.sqrt(2) - 1)


def gc_network(gain_db, base=BARE, theta_g=0.0, theta_c=0.0):
    g_g, g_c, t_g, t_c = balance_gc(gain_db, base, theta_g, theta_c)
    return base.with_pumps(PumpSpec("G", g_g, t_g), PumpSpec("C", g_c, t_c))


def to_quadratures(s):
    # doubled basis (a, b, a*, b*) -> (x_a, p_a, x_b, p_b)
    t = np.zeros((4, 4), dtype=complex)
    for k, (i, j) in enumerate(((0, 2), (1, 3))):
        t[2 * k, i], t[2 * k, j] = 1 / np.sqrt(2), 1 / np.sqrt(2)
        t[2 * k + 1, i], t[2 * k + 1, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
    return t @ s @ np.linalg.inv(t)


# --- bare resonators ---------------------------------------------------------


def test_bare_resonator_limits():
    s0 = scattering(BARE, 0.0)
    assert s0.reflection("a") == pytest.approx(1.0)
    assert abs(s0.transmission("a", "b")) == 0.0
    far = scattering(BARE, 1e8)
    assert far.reflection("b") == pytest.approx(-1.0, abs=1e-6)


def test_mode_validation():
    with pytest.raises(ValueError):
        ModeSpec(0.0, -1.0)
    with pytest.raises(ValueError):
        ModeSpec(0.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        PumpSpec("X", 1.0)
    with pytest.raises(ValueError):
        PumpedNetwork(BARE.mode_a, BARE.mode_b, (PumpSpec("G", 1.0), PumpSpec("G", 2.0)))


# --- GC ----------------------------------------------------------------------


@pytest.mark.parametrize("omega", [-12.0, -3.0, 0.0, 1.7, 9.0])
def test_gc_matches_quadrature_oracle(omega):
    net = gc_network(15.0, theta_g=0.3, theta_c=-0.8)
    g = net.pump("G").g
    s = scattering(net, omega).matrix
    q = quadrature_scattering(KAPPA, KAPPA, g, -0.8, g, 0.3, omega)
    assert np.allclose(to_quadratures(s), q, atol=1e-10)
    # unity reflection: the a->a quadrature block is orthogonal
    assert np.allclose(np.linalg.svd(q[:2, :2], compute_uv=False), 1.0, atol=1e-9)


def test_gc_unity_reflection_and_bidirectional():
    net = gc_network(12.0)
    for w in np.linspace(-20, 20, 41):
        r = scattering(net, w)
        assert abs(abs(r.reflection("a")) - 1) < 1e-9
        assert abs(abs(r.reflection("b")) - 1) < 1e-9
        assert abs(abs(r.transmission("a", "b")) - abs(r.transmission("b", "a"))) < 1e-9
        assert r.symplectic_residual() < 1e-9


def test_gc_reflection_degrades_smoothly_with_loss():
    devs = []
    for loss in (0.0, 0.1, 0.2, 0.4):
        base = PumpedNetwork(ModeSpec(0, KAPPA, KAPPA - loss), ModeSpec(0, KAPPA, KAPPA - loss))
        net = gc_network(12.0, base)
        dev = max(abs(abs(scattering(net, w).reflection("a")) - 1) for w in np.linspace(-10, 10, 21))
        devs.append(dev)
        assert scattering(net, 2.0).symplectic_residual() < 1e-9
    assert devs[0] < 1e-9
    assert all(b > a for a, b in zip(devs, devs[1:]))


def test_gc_bandwidth_gain_independent():
    w = np.linspace(-20, 20, 40001)
    widths = []
    for gain in (8, 10, 12, 15):
        gc = gain_curves(gc_network(gain), w)
        assert gc.transmission_ba[20000] == pytest.approx(gain, abs=1e-9)
        assert np.max(np.abs(gc.reflection_a)) < 1e-9
        widths.append(bandwidth(w, gc.transmission_ba))
    assert np.allclose(widths, WIDTH_FACTOR * KAPPA, rtol=1e-4)


def test_gc_no_pole():
    net = BARE.gc(1e4)
    assert np.isfinite(abs(scattering(net, 0.0).transmission("b", "a")))


def test_balance_linear_in_g():
    g1 = balance_gc(10.0, BARE)[0]
    t1 = abs(scattering(BARE.gc(g1), 0.0).transmission("b", "a")) ** 2
    t2 = abs(scattering(BARE.gc(2 * g1), 0.0).transmission("b", "a")) ** 2
    assert db(t2) - db(t1) == pytest.approx(20 * np.log10(2), abs=1e-9)
    g0 = balance_gc(0.0, BARE)[0]
    assert abs(scattering(BARE.gc(g0), 0.0).transmission("b", "a")) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        balance_gc(-1.0, BARE)


def test_balance_with_unequal_and_lossy_modes():
    base = PumpedNetwork(ModeSpec(0, 8.0, 7.0), ModeSpec(0, 14.0, 12.5))
    net = gc_network(13.0, base)
    assert db(abs(scattering(net, 0.0).transmission("b", "a")) ** 2) == pytest.approx(13.0, abs=1e-9)


def test_unbalanced_breaks_unity_reflection():
    g = balance_gc(12.0, BARE)[0]
    net = BARE.with_pumps(PumpSpec("G", g), PumpSpec("C", 1.1 * g))
    assert not net.balanced
    assert abs(abs(scattering(net, 0.0).reflection("a")) - 1) > 1e-3


# --- phase sensitivity -------------------------------------------------------


def test_phase_sensitive_no_pump():
    ps = phase_sensitive_gain(BARE)
    assert ps.max_db == pytest.approx(0.0, abs=1e-12)
    assert ps.min_db == pytest.approx(0.0, abs=1e-12)


def test_phase_sensitive_peak_and_grid():
    ps = phase_sensitive_gain(gc_network(15.5))
    assert ps.max_db == pytest.approx(21.55, abs=0.01)
    assert np.max(ps.gain_db) <= ps.max_db + 1e-9
    assert np.max(ps.gain_db) == pytest.approx(ps.max_db, abs=1e-3)


@pytest.mark.parametrize("delta", [0.4, 1.0, 2.5])
def test_phase_covariance(delta):
    base = phase_sensitive_gain(gc_network(12.0, theta_g=0.2, theta_c=0.6))
    assert base.angle == pytest.approx(0.4, abs=1e-9)
    g_only = phase_sensitive_gain(gc_network(12.0, theta_g=0.2 + delta, theta_c=0.6))
    both = phase_sensitive_gain(gc_network(12.0, theta_g=0.2 + delta, theta_c=0.6 + delta))
    assert np.mod(g_only.angle - base.angle, np.pi) == pytest.approx(np.mod(delta / 2, np.pi), abs=1e-9)
    assert np.mod(both.angle - base.angle, np.pi) == pytest.approx(np.mod(delta, np.pi), abs=1e-9)
    assert g_only.max_db == pytest.approx(base.max_db, abs=1e-9)
    assert both.max_db == pytest.approx(base.max_db, abs=1e-9)


# --- two-tone ----------------------------------------------------------------


def test_two_tone_offsets_and_ratio():
    tones = two_tone_spectrum(gc_network(15.0), 5.0)
    assert [t.offset for t in tones] == [-5.0, 5.0]
    assert [t.label for t in tones] == ["idler", "probe"]
    assert tones[0].power / tones[1].power == pytest.approx(1.0, abs=1e-9)
    single = two_tone_spectrum(gc_network(15.0), 0.0)
    assert len(single) == 1 and single[0].offset == 0.0


def test_single_g_idler_approaches_probe():
    ratios = []
    for gain in (6.0, 12.0, 20.0, 30.0):
        g = calibrate_single_pump(gain, BARE, kind="G")
        net = BARE.with_pumps(PumpSpec("G", g))
        s = scattering(net, 0.01)
        probe = abs(s.reflection("a")) ** 2
        idler = abs(s.matrix[1, 2]) ** 2
        assert probe - idler == pytest.approx(1.0, abs=1e-9)
        ratios.append(idler / probe)
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 0.998


# --- single pumps ------------------------------------------------------------


def test_single_g_pump_20db():
    g = calibrate_single_pump(20.0, BARE.with_pumps(PumpSpec("G", 0.0)))
    assert 4 * g ** 2 / KAPPA ** 2 == pytest.approx(9 / 11)
    net = BARE.with_pumps(PumpSpec("G", g))
    r = scattering(net, 0.0).reflection("a")
    assert db(abs(r) ** 2) == pytest.approx(20.0, abs=1e-9)
    assert r.real == pytest.approx((1 + 9 / 11) / (1 - 9 / 11))
    assert scattering(net, 3.0).symplectic_residual() < 1e-9


def test_single_g_pump_pole():
    g = KAPPA / 2
    with pytest.raises(DivergenceError):
        scattering(BARE.with_pumps(PumpSpec("G", g)), 0.0)
    with pytest.raises(UnreachableGainError):
        calibrate_single_pump(np.inf, BARE, kind="G")
    assert calibrate_single_pump(0.0, BARE, kind="G") == 0.0


def test_single_g_gain_diverges_towards_pole():
    gains = [db(abs(scattering(BARE.with_pumps(PumpSpec("G", KAPPA / 2 * np.sqrt(c))), 0.0).reflection()) ** 2)
             for c in (0.5, 0.9, 0.99, 0.999)]
    assert all(b > a + 5 for a, b in zip(gains[1:], gains[2:]))


def test_single_c_pump_conversion():
    net = BARE.with_pumps(PumpSpec("C", KAPPA / 2))
    s = scattering(net, 0.0)
    assert db(abs(s.reflection("a")) ** 2) < -40
    assert db(abs(s.transmission("b", "a")) ** 2) == pytest.approx(0.0, abs=1e-9)
    g = calibrate_single_pump(-10.0, BARE, kind="C")
    r = scattering(BARE.with_pumps(PumpSpec("C", g)), 0.0).reflection("a")
    assert db(abs(r) ** 2) == pytest.approx(-10.0, abs=0.01)
    with pytest.raises(UnreachableGainError):
        calibrate_single_pump(3.0, BARE, kind="C")


def test_calibration_with_loss():
    base = PumpedNetwork(ModeSpec(0, 10.0, 9.0), ModeSpec(0, 12.0, 11.0))
    for target in (5.0, 15.0, 25.0):
        g = calibrate_single_pump(target, base, kind="G")
        r = scattering(base.with_pumps(PumpSpec("G", g)), 0.0).reflection("a")
        assert db(abs(r) ** 2) == pytest.approx(target, abs=0.01)


def test_single_pump_width():
    g = calibrate_single_pump(20.0, BARE, kind="G")
    w = np.linspace(-5, 5, 20001)
    width = bandwidth(w, gain_curves(BARE.with_pumps(PumpSpec("G", g)), w).reflection_a)
    assert width == pytest.approx(KAPPA / 10, rel=0.05)


def test_bandwidth_errors():
    w = np.linspace(-1, 1, 11)
    with pytest.raises(BandwidthError):
        bandwidth(w, -w ** 2 * 0.1)
    with pytest.raises(BandwidthError):
        bandwidth(w, w)


@settings(max_examples=80, deadline=None)
@given(
    st.floats(0.0, 4.0), st.floats(0.0, 20.0), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi),
    st.floats(-30.0, 30.0), st.floats(5.0, 15.0), st.floats(-3.0, 3.0),
)
def test_symplectic_property(g_g, g_c, th_g, th_c, omega, kappa_b, det):
    net = PumpedNetwork(
        ModeSpec(0.0, 10.0, static_detuning=det), ModeSpec(0.0, kappa_b),
        (PumpSpec("G", g_g, th_g), PumpSpec("C", g_c, th_c)),
    )
    assert scattering(net, omega).symplectic_residual() < 1e-9
