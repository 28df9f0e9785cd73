"""Fourth-order (Kerr) coefficients of the ring and their flux null.

For a symmetric ring about the origin every Kerr coefficient is set by the
fourth derivative of the arm energy at phi_ext/4:

    K_aa = K_bb = K_cc = H4 / 6,    K_ab = K_ac = K_bc = H4.

Asymmetric rings are handled by expanding about the shifted equilibrium and
summing the per-arm fourth derivatives along the mode directions, which
reduces to the expressions above when the asymmetry vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .circuit import JrmParams, _arm_arguments, _arm_derivatives, segment_derivatives
from .errors import InstabilityError, JrmError, NoRootError
from .ground_state import DEFAULT_SEEDS, degeneracy_class, local_minimize
from .sweeps import parallel_map

__all__ = [
    "KerrTensor",
    "NullPoint",
    "NullTrajectory",
    "DuffingMap",
    "kerr_tensor",
    "null_flux",
    "null_trajectory",
    "duffing_map",
    "mode_directions",
]

MODES = ("a", "b", "c")
_NULL_SCAN = 4001


@dataclass(frozen=True)
class KerrTensor:
    """Self- and cross-Kerr coefficients in units of E_J."""

    k_aa: float
    k_bb: float
    k_cc: float
    k_ab: float
    k_ac: float
    k_bc: float
    flux: float
    degenerate: Optional[bool] = None

    def self_kerr(self, mode: str) -> float:
        return getattr(self, f"k_{mode}{mode}")

    def cross_kerr(self, m: str, n: str) -> float:
        if m == n:
            raise ValueError("cross-Kerr needs two different modes")
        m, n = sorted((m, n))
        return getattr(self, f"k_{m}{n}")

    def as_array(self) -> np.ndarray:
        return np.array([self.k_aa, self.k_bb, self.k_cc, self.k_ab, self.k_ac, self.k_bc])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.as_array())))


def mode_directions(caps=None):
    """Node-phase directions of the a, b and c modes.

    The c direction ``(l1, -l2, l1, -l2)`` is scaled by ``1/(l1 + l2)`` so that
    each arm sees a unit phase difference, matching the a and b modes.
    """
    if caps is None:
        l1 = l2 = 1.0
    else:
        l1, l2 = caps.c3, caps.c1
    c = np.array([l1, -l2, l1, -l2]) / (l1 + l2)
    return {
        "a": np.array([1.0, 0.0, -1.0, 0.0]),
        "b": np.array([0.0, 1.0, 0.0, -1.0]),
        "c": c,
    }


def _symmetric_h4(params, flux):
    return params.e_j * float(segment_derivatives(float(flux) / 4.0, params.alpha, 4)[4])


def _asymmetric_kerr(params, flux, caps):
    config, _ = local_minimize(np.zeros(4), params, flux)
    x = _arm_arguments(config.phi, params, flux)
    h4 = params.e_j * _arm_derivatives(x, params, 4)[4]
    # arm i spans nodes i -> i+1
    dirs = mode_directions(caps)
    proj = {m: np.roll(u, -1) - u for m, u in dirs.items()}
    k = {}
    for m in MODES:
        k[m + m] = float(np.sum(h4 * proj[m] ** 4)) / 24.0
    for m, n in (("a", "b"), ("a", "c"), ("b", "c")):
        k[m + n] = float(np.sum(h4 * proj[m] ** 2 * proj[n] ** 2)) / 4.0
    return k


def kerr_tensor(
    params: JrmParams,
    flux,
    caps=None,
    check_degeneracy: bool = False,
    n_seeds: int = DEFAULT_SEEDS,
) -> KerrTensor:
    """Six Kerr coefficients at ``flux``.

    ``caps`` only matters for asymmetric rings, where it sets the c-mode
    direction. With ``check_degeneracy`` the ``degenerate`` flag reports
    whether the ground state at this bias is degenerate (the expansion is
    then about one of several minima).
    """
    flux = float(flux)
    if params.is_symmetric:
        h4 = _symmetric_h4(params, flux)
        k = dict(aa=h4 / 6.0, bb=h4 / 6.0, cc=h4 / 6.0, ab=h4, ac=h4, bc=h4)
    else:
        k = _asymmetric_kerr(params, flux, caps)
    degenerate = None
    if check_degeneracy:
        degenerate = degeneracy_class(params, flux, n_seeds=n_seeds) != 1
    return KerrTensor(
        k_aa=k["aa"], k_bb=k["bb"], k_cc=k["cc"],
        k_ab=k["ab"], k_ac=k["ac"], k_bc=k["bc"],
        flux=flux, degenerate=degenerate,
    )


class NullPoint(NamedTuple):
    phi_star: float
    stable: Optional[bool]


def _h4_of_flux(flux, alpha):
    return float(segment_derivatives(flux / 4.0, alpha, 4)[4])


def null_flux(
    params: JrmParams,
    check_stability: bool = True,
    n_seeds: int = DEFAULT_SEEDS,
    rng_seed: int = 0,
) -> NullPoint:
    """Flux in [2 pi, 4 pi] at which the fourth arm derivative vanishes.

    The sign change nearest 2 pi from above is bracketed on a fine scan and
    polished with Brent's method. ``stable`` is True when the ground state
    there is non-degenerate (None when the check is skipped).

    Raises
    ------
    NoRootError
        If no sign change exists in [0, 4 pi].
    """
    alpha = params.alpha
    fluxes = np.linspace(0.0, 4 * np.pi, _NULL_SCAN)
    try:
        h4 = segment_derivatives(fluxes / 4.0, alpha, 4)[4]
    except JrmError as exc:
        raise NoRootError(f"fourth derivative undefined on [0, 4 pi] for alpha={alpha}") from exc
    crossings = np.flatnonzero(np.sign(h4[:-1]) * np.sign(h4[1:]) <= 0)
    roots = []
    for i in crossings:
        a, b = fluxes[i], fluxes[i + 1]
        if h4[i] == 0:
            roots.append(a)
        elif h4[i + 1] != 0:
            roots.append(brentq(_h4_of_flux, a, b, args=(alpha,), xtol=1e-13, maxiter=200))
    roots = sorted(set(roots))
    above = [r for r in roots if r >= 2 * np.pi - 1e-9]
    if not above:
        raise NoRootError(f"no Kerr null in [2 pi, 4 pi] for alpha={alpha}")
    phi_star = float(above[0])
    stable = None
    if check_stability:
        stable = degeneracy_class(params, phi_star, n_seeds=n_seeds, rng_seed=rng_seed) == 1
    return NullPoint(phi_star, stable)


@dataclass
class NullTrajectory:
    """Null flux and ground-state stability along an alpha grid."""

    beta: float
    alpha: np.ndarray
    phi_star: np.ndarray
    stable: np.ndarray

    @property
    def critical_alpha(self) -> float:
        """First sampled alpha at which the null sits on a degenerate ground state."""
        bad = np.flatnonzero(~self.stable)
        return float(self.alpha[bad[0]]) if bad.size else float("nan")

    @property
    def critical_flux(self) -> float:
        bad = np.flatnonzero(~self.stable)
        return float(self.phi_star[bad[0]]) if bad.size else float("nan")

    def rows(self):
        for a, p, s in zip(self.alpha, self.phi_star, self.stable):
            yield float(a), float(p), bool(s)


def _trajectory_point(task, beta, n_seeds, rng_seed):
    index, alpha = task
    params = JrmParams(beta=beta, alpha=alpha)
    phi_star, _ = null_flux(params, check_stability=False)
    deg = degeneracy_class(params, phi_star, n_seeds=n_seeds, rng_seed=(rng_seed, index))
    return phi_star, deg == 1


def null_trajectory(
    beta: float,
    alphas: Sequence[float],
    n_seeds: int = DEFAULT_SEEDS,
    rng_seed: int = 0,
    workers: int = 1,
) -> NullTrajectory:
    """Trace the Kerr null against the stray ratio alpha at fixed beta."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.min() < 0 or alphas.max() > 0.6:
        raise ValueError("alpha grid must lie within [0, 0.6]")
    func = partial(_trajectory_point, beta=beta, n_seeds=n_seeds, rng_seed=rng_seed)
    out = parallel_map(func, list(enumerate(alphas)), workers=workers)
    return NullTrajectory(
        beta=beta,
        alpha=alphas,
        phi_star=np.array([o[0] for o in out]),
        stable=np.array([o[1] for o in out], dtype=bool),
    )


@dataclass
class DuffingMap:
    """Probe-mode frequency shift on a (flux, pump photon number) grid."""

    flux: np.ndarray
    photons: np.ndarray
    shift: np.ndarray
    flagged: np.ndarray
    probe_mode: str
    pump_mode: str

    def colors(self, rtol: float = 1e-9):
        """'blue' / 'white' / 'red' for positive / zero / negative shifts.

        Shifts within ``rtol`` of the largest magnitude on the map count as zero.
        """
        tol = rtol * float(np.max(np.abs(self.shift), initial=0.0))
        out = np.full(self.shift.shape, "white", dtype=object)
        out[self.shift > tol] = "blue"
        out[self.shift < -tol] = "red"
        return out

    def rows(self):
        for i, f in enumerate(self.flux):
            for j, n in enumerate(self.photons):
                yield float(f), float(n), float(self.shift[i, j]), bool(self.flagged[i])


def duffing_map(
    params: JrmParams,
    caps,
    probe_mode: str,
    pump_mode: str,
    flux_values: Sequence[float],
    photon_numbers: Sequence[float],
    energy_scale: float = 1.0,
    check_degeneracy: bool = False,
    n_seeds: int = DEFAULT_SEEDS,
) -> DuffingMap:
    """Simulated Kerr (duffing) map of a probe mode under a detuned pump.

    The probe shifts by ``2*K_self*n`` when it is also the pumped mode and
    by ``K_cross*n`` otherwise, with ``n`` the effective pump photon number
    and ``energy_scale`` converting E_J to the caller's frequency unit.
    Cells whose flux point has no stable eigenmodes (or, with
    ``check_degeneracy``, a degenerate ground state) are flagged.
    """
    from .eigenmodes import eigenmodes

    if probe_mode not in MODES or pump_mode not in MODES:
        raise ValueError("modes must be 'a', 'b' or 'c'")
    flux_values = np.asarray(flux_values, dtype=float)
    photons = np.asarray(photon_numbers, dtype=float)
    coeff = np.empty(flux_values.size)
    flagged = np.zeros(flux_values.size, dtype=bool)
    for i, f in enumerate(flux_values):
        kt = kerr_tensor(params, f, caps=caps, check_degeneracy=check_degeneracy, n_seeds=n_seeds)
        if probe_mode == pump_mode:
            coeff[i] = 2.0 * kt.self_kerr(probe_mode)
        else:
            coeff[i] = kt.cross_kerr(probe_mode, pump_mode)
        try:
            eigenmodes(params, caps, f)
        except InstabilityError:
            flagged[i] = True
        if kt.degenerate:
            flagged[i] = True
    shift = (energy_scale * coeff)[:, None] * photons[None, :]
    return DuffingMap(flux_values, photons, shift, flagged, probe_mode, pump_mode)
