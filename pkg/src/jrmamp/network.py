"""Linear input-output model of the pumped two-mode amplifier.

The pumps are stiff: each enters only as a coupling rate ``g`` and a phase
``theta`` between modes a and b. In the frame rotating at the mode
frequencies, and in the doubled basis ``(a, b, a^dag, b^dag)``,

    da/dt = -(i delta_a + kappa_a/2) a - i g_C e^{-i th_C} b - i g_G e^{-i th_G} b^dag
            + sqrt(kappa_a,ext) a_in + sqrt(kappa_a,int) a_loss
    db/dt = -(i delta_b + kappa_b/2) b - i g_C e^{+i th_C} a - i g_G e^{-i th_G} a^dag + ...

with outputs ``a_out = sqrt(kappa_a,ext) a - a_in``. A probe at detuning
``omega`` (time dependence ``exp(-i omega t)``) then gives

    S(omega) = -K_ext (A + i omega)^-1 K_ext - 1.

All rates and detunings share one unit (MHz in the examples).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .errors import BandwidthError, DivergenceError, UnreachableGainError

__all__ = [
    "ModeSpec",
    "PumpSpec",
    "PumpedNetwork",
    "ScatteringResult",
    "GainCurves",
    "PhaseSensitiveGain",
    "Tone",
    "scattering",
    "gain_curves",
    "bandwidth",
    "half_power_db",
    "phase_sensitive_gain",
    "two_tone_spectrum",
    "calibrate_single_pump",
    "balance_gc",
    "db",
]

PORTS = ("a", "b", "a*", "b*")
_COND_LIMIT = 1e13
HALF_POWER_DB = 10.0 * np.log10(2.0)


def db(power):
    """Power ratio in dB (``-inf`` for exact zeros)."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(power)


def half_power_db():
    return HALF_POWER_DB


@dataclass(frozen=True)
class ModeSpec:
    """One resonator mode.

    ``kappa_ext`` defaults to ``kappa`` (lossless, all decay into the port).
    """

    center_frequency: float
    kappa: float
    kappa_ext: Optional[float] = None
    static_detuning: float = 0.0

    def __post_init__(self):
        if self.kappa_ext is None:
            object.__setattr__(self, "kappa_ext", self.kappa)
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.kappa_ext <= self.kappa * (1 + 1e-12):
            raise ValueError("need 0 < kappa_ext <= kappa")

    @property
    def kappa_int(self) -> float:
        return max(self.kappa - self.kappa_ext, 0.0)

    @property
    def lossless(self) -> bool:
        return self.kappa_int == 0.0


@dataclass(frozen=True)
class PumpSpec:
    kind: str
    g: float
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("G", "C"):
            raise ValueError("pump kind must be 'G' or 'C'")
        if self.g < 0:
            raise ValueError("pump strength g must be non-negative")


@dataclass(frozen=True)
class PumpedNetwork:
    mode_a: ModeSpec
    mode_b: ModeSpec
    pumps: tuple = ()

    def __post_init__(self):
        pumps = tuple(self.pumps)
        kinds = [p.kind for p in pumps]
        if len(pumps) > 2 or len(set(kinds)) != len(kinds):
            raise ValueError("at most one G and one C pump")
        object.__setattr__(self, "pumps", pumps)

    def pump(self, kind: str) -> Optional[PumpSpec]:
        for p in self.pumps:
            if p.kind == kind:
                return p
        return None

    @property
    def balanced(self) -> bool:
        g, c = self.pump("G"), self.pump("C")
        return g is not None and c is not None and g.g == c.g

    @property
    def lossless(self) -> bool:
        return self.mode_a.lossless and self.mode_b.lossless

    def with_pumps(self, *pumps: PumpSpec) -> "PumpedNetwork":
        return replace(self, pumps=tuple(pumps))

    def gc(self, g: float, theta_g: float = 0.0, theta_c: float = 0.0) -> "PumpedNetwork":
        """Copy with balanced G and C pumps of strength ``g``."""
        return self.with_pumps(PumpSpec("G", g, theta_g), PumpSpec("C", g, theta_c))

    def drift_matrix(self) -> np.ndarray:
        a, b = self.mode_a, self.mode_b
        da = a.static_detuning
        dbb = b.static_detuning
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = -(1j * da + a.kappa / 2)
        m[1, 1] = -(1j * dbb + b.kappa / 2)
        m[2, 2] = -(-1j * da + a.kappa / 2)
        m[3, 3] = -(-1j * dbb + b.kappa / 2)
        c = self.pump("C")
        if c is not None:
            m[0, 1] = -1j * c.g * np.exp(-1j * c.phase)
            m[1, 0] = -1j * c.g * np.exp(1j * c.phase)
            m[2, 3] = np.conj(m[0, 1])
            m[3, 2] = np.conj(m[1, 0])
        g = self.pump("G")
        if g is not None:
            m[0, 3] = -1j * g.g * np.exp(-1j * g.phase)
            m[1, 2] = -1j * g.g * np.exp(-1j * g.phase)
            m[2, 1] = np.conj(m[0, 3])
            m[3, 0] = np.conj(m[1, 2])
        return m

    def port_rates(self):
        ext = np.sqrt([self.mode_a.kappa_ext, self.mode_b.kappa_ext] * 2)
        internal = np.sqrt([self.mode_a.kappa_int, self.mode_b.kappa_int] * 2)
        return ext, internal


@dataclass
class ScatteringResult:
    """Scattering at one probe detuning.

    ``matrix[i, j]`` maps input ``PORTS[j]`` to output ``PORTS[i]``;
    ``loss`` maps the internal-loss inputs to the outputs.
    """

    omega: float
    matrix: np.ndarray
    loss: np.ndarray
    ports: tuple = PORTS

    def entry(self, out: str, inp: str) -> complex:
        return complex(self.matrix[self.ports.index(out), self.ports.index(inp)])

    def reflection(self, port: str = "a") -> complex:
        return self.entry(port, port)

    def transmission(self, out: str = "a", inp: str = "b") -> complex:
        return self.entry(out, inp)

    def symplectic_residual(self) -> float:
        """Largest violation of the Bogoliubov rows (lossless networks give ~0).

        Internal-loss channels are included, so the identity holds for lossy
        networks too once the loss ports are counted.
        """
        j = np.diag([1.0, 1.0, -1.0, -1.0])
        full = np.hstack([self.matrix, self.loss])
        jj = np.diag([1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0])
        rows = np.real(np.einsum("ij,j,ij->i", full, np.diag(jj), full.conj()))
        return float(np.max(np.abs(rows - np.diag(j))))


def _solve(network: PumpedNetwork, omegas: np.ndarray):
    # stacked (n, 4, 4) scattering and loss matrices for a detuning array
    a = network.drift_matrix()[None, :, :] + 1j * omegas[:, None, None] * np.eye(4)
    cond = np.linalg.cond(a)
    bad = ~np.isfinite(cond) | (cond > _COND_LIMIT)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise DivergenceError(float(omegas[k]), f"system singular (condition number {cond[k]:.3g})")
    ext, internal = network.port_rates()
    inv = np.linalg.inv(a)
    s = -ext[None, :, None] * inv * ext[None, None, :] - np.eye(4)
    loss = -ext[None, :, None] * inv * internal[None, None, :]
    return s, loss


def scattering(network: PumpedNetwork, omega: float) -> ScatteringResult:
    """Solve the linear response at probe detuning ``omega``.

    Raises
    ------
    DivergenceError
        If ``A + i omega`` is numerically singular (the network sits on a pole).
    """
    s, loss = _solve(network, np.array([float(omega)]))
    return ScatteringResult(float(omega), s[0], loss[0])


@dataclass
class GainCurves:
    """Power gains in dB along a detuning grid.

    ``transmission_ab`` is the single-frequency response of output a to a
    probe into b; ``idler_ab`` is the conjugate path (b^dag -> a) that
    appears at the mirrored frequency.
    """

    omega: np.ndarray
    reflection_a: np.ndarray
    reflection_b: np.ndarray
    transmission_ab: np.ndarray
    transmission_ba: np.ndarray
    idler_ab: np.ndarray
    idler_ba: np.ndarray

    COLUMNS = (
        "omega",
        "reflection_a_db",
        "reflection_b_db",
        "transmission_ab_db",
        "transmission_ba_db",
        "idler_ab_db",
        "idler_ba_db",
    )

    def rows(self):
        cols = (
            self.omega, self.reflection_a, self.reflection_b, self.transmission_ab,
            self.transmission_ba, self.idler_ab, self.idler_ba,
        )
        for row in zip(*cols):
            yield tuple(float(v) for v in row)


def gain_curves(network: PumpedNetwork, omegas: Sequence[float]) -> GainCurves:
    omegas = np.asarray(omegas, dtype=float)
    s, _ = _solve(network, np.atleast_1d(omegas))
    p = np.abs(s) ** 2
    return GainCurves(
        omega=omegas,
        reflection_a=db(p[:, 0, 0]),
        reflection_b=db(p[:, 1, 1]),
        transmission_ab=db(p[:, 0, 1]),
        transmission_ba=db(p[:, 1, 0]),
        idler_ab=db(p[:, 0, 3]),
        idler_ba=db(p[:, 1, 2]),
    )


def bandwidth(omegas: Sequence[float], gain_db: Sequence[float], drop_db: float = HALF_POWER_DB) -> float:
    """Full width of a gain peak at ``drop_db`` below its maximum.

    The crossings are found by linear interpolation in dB between grid points.

    Raises
    ------
    BandwidthError
        If the peak sits on the grid edge or the curve never falls by
        ``drop_db`` on one side.
    """
    w = np.asarray(omegas, dtype=float)
    g = np.asarray(gain_db, dtype=float)
    k = int(np.argmax(g))
    if k == 0 or k == g.size - 1:
        raise BandwidthError("gain maximum on the grid edge")
    level = g[k] - drop_db
    left = np.flatnonzero(g[:k] < level)
    right = np.flatnonzero(g[k + 1:] < level)
    if not left.size or not right.size:
        raise BandwidthError(f"grid does not span the -{drop_db:.3f} dB points")
    i = left[-1]
    j = k + 1 + right[0]
    wl = np.interp(level, [g[i], g[i + 1]], [w[i], w[i + 1]])
    wr = np.interp(level, [g[j], g[j - 1]], [w[j], w[j - 1]])
    return float(wr - wl)


@dataclass
class PhaseSensitiveGain:
    """Output power against probe phase for a coherent tone at omega = 0."""

    max_db: float
    min_db: float
    angle: float
    phases: np.ndarray
    gain_db: np.ndarray


def _phase_response(network, phases):
    s = scattering(network, 0.0).matrix
    # a_in = exp(-i phi), a^dag_in = exp(+i phi); power summed over both output ports
    amp = s[:2, 0][None, :] * np.exp(-1j * phases)[:, None] + s[:2, 2][None, :] * np.exp(1j * phases)[:, None]
    return np.sum(np.abs(amp) ** 2, axis=1)


def phase_sensitive_gain(network: PumpedNetwork, phases: Optional[Sequence[float]] = None) -> PhaseSensitiveGain:
    """Phase-sensitive gain of a probe into port a.

    Total output power has the exact form ``A + B cos 2phi + C sin 2phi``,
    so the extremes and the amplified-quadrature angle (in ``[0, pi)``)
    come from the fitted harmonics rather than the sampled grid.
    """
    if phases is None:
        phases = np.linspace(0.0, np.pi, 181)
    phases = np.asarray(phases, dtype=float)
    probe = np.array([0.0, np.pi / 4, np.pi / 2])
    p = _phase_response(network, probe)
    mean = 0.5 * (p[0] + p[2])
    cos_amp = 0.5 * (p[0] - p[2])
    sin_amp = p[1] - mean
    amp = np.hypot(cos_amp, sin_amp)
    angle = float(np.mod(0.5 * np.arctan2(sin_amp, cos_amp), np.pi))
    if np.pi - angle < 1e-12:
        angle = 0.0
    return PhaseSensitiveGain(
        max_db=float(db(mean + amp)),
        min_db=float(db(max(mean - amp, 0.0))),
        angle=angle,
        phases=phases,
        gain_db=db(_phase_response(network, phases)),
    )


@dataclass(frozen=True)
class Tone:
    offset: float
    power: float
    label: str


def two_tone_spectrum(network: PumpedNetwork, probe_detuning: float, out_port: str = "b") -> List[Tone]:
    """Tones leaving ``out_port`` for a unit probe into the other port.

    A probe at ``+delta`` produces the direct tone at ``+delta`` and an
    idler at ``-delta`` carried by the conjugate entry. At ``delta = 0``
    the two coincide and add coherently (probe phase zero).
    """
    if out_port not in ("a", "b"):
        raise ValueError("out_port must be 'a' or 'b'")
    o = PORTS.index(out_port)
    i = 1 - o
    d = float(probe_detuning)
    if d == 0.0:
        s = scattering(network, 0.0).matrix
        return [Tone(0.0, float(abs(s[o, i] + s[o, i + 2]) ** 2), "probe")]
    probe = abs(scattering(network, d).matrix[o, i]) ** 2
    idler = abs(scattering(network, -d).matrix[o, i + 2]) ** 2
    return sorted([Tone(d, float(probe), "probe"), Tone(-d, float(idler), "idler")], key=lambda t: t.offset)


def _single_kind(network, kind):
    if kind is not None:
        return kind
    if len(network.pumps) == 1:
        return network.pumps[0].kind
    return "G"


def calibrate_single_pump(target_db: float, network: PumpedNetwork, kind: Optional[str] = None) -> float:
    """Pump strength giving ``target_db`` reflection gain at port a, omega = 0.

    Inverts the resonant closed forms (static detunings are ignored):

    * G pump: ``sqrt(Gain) = 2 kappa_ext/(kappa (1 - C)) - 1``
    * C pump: ``sqrt(Gain) = |2 kappa_ext/(kappa (1 + C)) - 1|`` (branch
      with the reflected amplitude non-negative)

    with cooperativity ``C = 4 g**2/(kappa_a kappa_b)``.

    Raises
    ------
    UnreachableGainError
        If the target needs ``C >= 1`` for the G pump or is outside the
        range the C pump can reach.
    """
    kind = _single_kind(network, kind)
    a, b = network.mode_a, network.mode_b
    ratio = 2.0 * a.kappa_ext / a.kappa
    if not np.isfinite(target_db):
        raise UnreachableGainError(f"{target_db} dB needs C = 1 (pole)")
    amp = 10.0 ** (target_db / 20.0)
    if kind == "G":
        coop = 1.0 - ratio / (1.0 + amp)
        if coop >= 1.0:
            raise UnreachableGainError(f"{target_db} dB needs C >= 1")
    else:
        coop = ratio / (1.0 + amp) - 1.0
    if coop < -1e-12:
        raise UnreachableGainError(f"{target_db} dB is below the unpumped reflection of a {kind} pump")
    coop = max(coop, 0.0)
    return float(np.sqrt(coop * a.kappa * b.kappa) / 2.0)


def balance_gc(target_db: float, network: PumpedNetwork, theta_g: float = 0.0, theta_c: float = 0.0):
    """Balanced pump strengths for a resonant transmission gain ``target_db``.

    On resonance the balanced network transmits with amplitude
    ``|t| = 4 g sqrt(kappa_a,ext kappa_b,ext)/(kappa_a kappa_b)``, linear in
    ``g``, so the inversion is exact and has no pole.

    Returns
    -------
    (g_G, g_C, theta_G, theta_C)
    """
    if target_db < 0:
        raise ValueError("target gain must be >= 0 dB")
    a, b = network.mode_a, network.mode_b
    amp = 10.0 ** (target_db / 20.0)
    g = amp * a.kappa * b.kappa / (4.0 * np.sqrt(a.kappa_ext * b.kappa_ext))
    return float(g), float(g), float(theta_g), float(theta_c)
