"""Energy landscape of the linearly shunted Josephson ring modulator.

Energies are in units of the junction energy E_J and phases in radians.
The ring Hamiltonian is

    H = (beta/2) * sum_i (phi_i - phi_E)**2 + sum_i H_seg(phi_{i+1} - phi_i - phi_ext/4)

with phi_E the mean of the four node phases and H_seg the energy of one
outer arm (junction in series with a stray inductor of ratio alpha), minimized
over the internal junction phase chi.

Every function here accepts phase configurations either as a
:class:`PhaseConfiguration` or as an array whose last axis has length 4, so
landscapes can be evaluated for a whole batch of configurations at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .errors import BranchInstabilityError, SolverError

__all__ = [
    "JrmParams",
    "FluxBias",
    "PhaseConfiguration",
    "solve_segment_phase",
    "segment_energy",
    "segment_derivatives",
    "jrm_energy",
    "jrm_gradient",
    "jrm_hessian",
    "jrm_landscape",
    "internal_phases",
    "gauge_fix",
]

CHI_TOL = 1e-12
_MAX_NEWTON = 100
_PHI_GUARD = 100.0
_ROOT_SCAN_STEP = 0.02


@dataclass(frozen=True)
class JrmParams:
    """Circuit constants of a shunted JRM.

    Parameters
    ----------
    beta : float
        Shunt ratio L_J / L_shunt.
    alpha : float
        Stray-inductance ratio L_out / L_J.
    e_j : float
        Junction energy. Sets the overall energy scale; all other
        quantities are defined relative to it.
    l_shunt, l_out : float, optional
        Inductances in units of phi_0**2 / (energy unit). When given they
        must agree with ``beta = 1/(e_j*l_shunt)`` and ``alpha = e_j*l_out``.
    junction_asymmetry : sequence of 4 floats
        Multiplicative factors on the junction energy of arms 1..4.
    loop_flux_asymmetry : sequence of 4 floats
        Additive offsets (radians) on phi_ext/4 for arms 1..4.
    """

    beta: float
    alpha: float = 0.0
    e_j: float = 1.0
    l_shunt: Optional[float] = None
    l_out: Optional[float] = None
    junction_asymmetry: tuple = (1.0, 1.0, 1.0, 1.0)
    loop_flux_asymmetry: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(
            self, "junction_asymmetry", tuple(float(a) for a in self.junction_asymmetry)
        )
        object.__setattr__(
            self, "loop_flux_asymmetry", tuple(float(o) for o in self.loop_flux_asymmetry)
        )
        if not self.e_j > 0:
            raise ValueError(f"e_j must be positive, got {self.e_j}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if len(self.junction_asymmetry) != 4 or len(self.loop_flux_asymmetry) != 4:
            raise ValueError("asymmetry vectors must have four entries")
        if min(self.junction_asymmetry) <= 0:
            raise ValueError("junction asymmetry factors must be positive")
        if self.l_shunt is not None and not np.isclose(
            self.beta, 1.0 / (self.e_j * self.l_shunt), rtol=1e-9, atol=0
        ):
            raise ValueError("beta is inconsistent with l_shunt and e_j")
        if self.l_out is not None and not np.isclose(
            self.alpha, self.e_j * self.l_out, rtol=1e-9, atol=1e-15
        ):
            raise ValueError("alpha is inconsistent with l_out and e_j")

    @classmethod
    def from_inductances(cls, l_shunt, l_out=0.0, e_j=1.0, **kwargs):
        """Build parameters from inductances (units of phi_0**2 per energy unit)."""
        return cls(
            beta=1.0 / (e_j * l_shunt),
            alpha=e_j * l_out,
            e_j=e_j,
            l_shunt=l_shunt,
            l_out=l_out,
            **kwargs,
        )

    @property
    def is_symmetric(self) -> bool:
        return all(a == 1.0 for a in self.junction_asymmetry) and all(
            o == 0.0 for o in self.loop_flux_asymmetry
        )

    def replace(self, **changes) -> "JrmParams":
        """Copy with some fields changed; stale inductances are dropped."""
        data = dict(
            beta=self.beta,
            alpha=self.alpha,
            e_j=self.e_j,
            junction_asymmetry=self.junction_asymmetry,
            loop_flux_asymmetry=self.loop_flux_asymmetry,
        )
        data.update(changes)
        return JrmParams(**data)


@dataclass(frozen=True)
class FluxBias:
    """External reduced flux phi_ext in radians.

    No periodic wrap is applied: the shunt term is not 2*pi periodic.
    """

    phi_ext: float

    def __post_init__(self):
        if not np.isfinite(self.phi_ext):
            raise ValueError("phi_ext must be finite")

    def __float__(self):
        return float(self.phi_ext)


@dataclass
class PhaseConfiguration:
    """Node phases of the ring.

    ``delta`` holds the internal stray-node phases when they are tracked.
    The centre phase is always derived, never stored.
    """

    phi: np.ndarray
    delta: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float).reshape(4)
        if self.delta is not None:
            self.delta = np.asarray(self.delta, dtype=float).reshape(4)

    @property
    def phi_e(self) -> float:
        return float(np.mean(self.phi))

    def phase(self, i: int) -> float:
        """Phase of node ``i`` (1-based, with node 5 aliased to node 1)."""
        return float(self.phi[(i - 1) % 4])


PhaseLike = Union[PhaseConfiguration, Sequence[float], np.ndarray]


def _as_phases(config: PhaseLike) -> np.ndarray:
    if isinstance(config, PhaseConfiguration):
        return config.phi
    phi = np.asarray(config, dtype=float)
    if phi.shape[-1:] != (4,):
        raise ValueError(f"phase configuration must end in an axis of length 4, got {phi.shape}")
    return phi


def gauge_fix(phi):
    """Remove the uniform (zero-mode) component so that the phases sum to zero."""
    phi = np.asarray(phi, dtype=float)
    return phi - phi.mean(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# single outer arm


def _check_segment_args(phi, alpha):
    if not alpha >= 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if np.any(~np.isfinite(phi)) or np.any(np.abs(phi) >= _PHI_GUARD):
        bad = phi[~(np.abs(phi) < _PHI_GUARD)] if np.ndim(phi) else phi
        raise SolverError(np.ravel(bad)[0] if np.ndim(bad) else float(bad), alpha,
                          "phase outside solver guard |phi| < 100")


def _solve_monotone(phi, alpha):
    """Safeguarded Newton for chi + alpha*sin(chi) = phi with alpha < 1."""
    lo = phi - alpha
    hi = phi + alpha
    chi = phi - alpha * np.sin(phi) / (1.0 + alpha * np.cos(phi))
    chi = np.clip(chi, lo, hi)
    for _ in range(_MAX_NEWTON):
        f = chi + alpha * np.sin(chi) - phi
        lo = np.where(f < 0, chi, lo)
        hi = np.where(f > 0, chi, hi)
        new = chi - f / (1.0 + alpha * np.cos(chi))
        outside = (new < lo) | (new > hi)
        new = np.where(outside, 0.5 * (lo + hi), new)
        step = np.abs(new - chi)
        chi = new
        if np.all((step <= CHI_TOL) | (f == 0)):
            return chi
    bad = np.ravel(phi)[np.argmax(np.ravel(step))]
    raise SolverError(float(bad), alpha)


def _solve_multibranch(phi, alpha):
    """Global minimizer of the arm energy when several stationary points exist."""
    lo, hi = phi - alpha, phi + alpha
    n = int(np.ceil((hi - lo) / _ROOT_SCAN_STEP)) + 1
    grid = np.linspace(lo, hi, n)
    g = grid + alpha * np.sin(grid) - phi

    def func(c):
        return c + alpha * np.sin(c) - phi

    roots = [grid[i] for i in np.flatnonzero(g == 0)]
    for i in np.flatnonzero(g[:-1] * g[1:] < 0):
        roots.append(brentq(func, grid[i], grid[i + 1], xtol=1e-15, maxiter=200))
    roots = np.array(roots)
    if roots.size == 0:
        raise SolverError(phi, alpha, "no stationary point bracketed")
    minima = roots[1.0 + alpha * np.cos(roots) > 0]
    if minima.size:
        roots = minima
    energy = 0.5 * alpha * np.sin(roots) ** 2 - np.cos(roots)
    best = energy.min()
    tied = roots[energy <= best + 1e-12]
    return tied[np.argmin(np.abs(tied))]


def solve_segment_phase(phi, alpha):
    """Junction phase chi minimizing (phi - chi)**2/(2 alpha) - cos(chi).

    Stationarity reads ``chi + alpha*sin(chi) = phi``. For ``alpha < 1`` the
    root is unique and found by bracketed Newton iteration; otherwise all
    roots in ``[phi - alpha, phi + alpha]`` are enumerated and the global
    energy minimum is returned (ties go to the smallest ``|chi|``).

    Works elementwise on arrays.

    Raises
    ------
    SolverError
        On non-convergence or ``|phi| >= 100``.
    """
    phi_arr = np.asarray(phi, dtype=float)
    _check_segment_args(phi_arr, alpha)
    if alpha == 0:
        chi = phi_arr.copy()
    elif alpha < 1:
        chi = _solve_monotone(phi_arr, alpha)
    else:
        chi = np.vectorize(_solve_multibranch, otypes=[float])(phi_arr, alpha)
    return float(chi) if chi.ndim == 0 else chi


def segment_energy(phi, alpha):
    """Arm energy H_seg(phi) in units of E_J; equals -1 at phi = 0."""
    chi = np.asarray(solve_segment_phase(phi, alpha))
    energy = 0.5 * alpha * np.sin(chi) ** 2 - np.cos(chi)
    return float(energy) if energy.ndim == 0 else energy


def _derivatives_from_chi(chi, alpha, max_order):
    s = np.sin(chi)
    c = np.cos(chi)
    d = 1.0 + alpha * c
    if np.any(d <= 0):
        raise BranchInstabilityError(
            f"1 + alpha*cos(chi) <= 0 (alpha={alpha}); implicit derivative is singular"
        )
    out = [0.5 * alpha * s**2 - c, s]
    if max_order >= 2:
        out.append(c / d)
    if max_order >= 3:
        out.append(-s / d**3)
    if max_order >= 4:
        out.append(-c / d**4 - 3.0 * alpha * s**2 / d**5)
    return np.array(out[: max_order + 1])


def segment_derivatives(phi, alpha, max_order=4):
    """Value and derivatives of H_seg up to ``max_order`` (at most 4).

    The derivatives follow from implicit differentiation of the
    stationarity condition: ``H' = sin(chi)`` and ``chi' = 1/(1 + alpha cos chi)``.

    Returns
    -------
    ndarray
        Shape ``(max_order + 1,) + shape(phi)``; entry ``k`` is the k-th
        derivative (entry 0 is the energy itself).
    """
    if not 1 <= max_order <= 4:
        raise ValueError("max_order must be between 1 and 4")
    chi = np.asarray(solve_segment_phase(phi, alpha))
    return _derivatives_from_chi(chi, alpha, max_order)


# ---------------------------------------------------------------------------
# whole ring


def _arm_biases(params, flux):
    return float(flux) / 4.0 + np.asarray(params.loop_flux_asymmetry)


def _arm_arguments(phi, params, flux):
    return np.roll(phi, -1, axis=-1) - phi - _arm_biases(params, flux)


def _arm_derivatives(x, params, max_order):
    """Derivatives of the four arm energies, shape (max_order+1, ..., 4)."""
    scales = np.asarray(params.junction_asymmetry)
    if np.all(scales == scales[0]):
        a = scales[0]
        chi = np.asarray(solve_segment_phase(x, params.alpha * a))
        return a * _derivatives_from_chi(chi, params.alpha * a, max_order)
    out = np.empty((max_order + 1,) + x.shape)
    for i, a in enumerate(scales):
        chi = np.asarray(solve_segment_phase(x[..., i], params.alpha * a))
        out[..., i] = a * _derivatives_from_chi(chi, params.alpha * a, max_order)
    return out


def jrm_landscape(config: PhaseLike, params: JrmParams, flux, order: int = 2):
    """Energy, gradient and (for ``order=2``) Hessian of the ring.

    Broadcasts over leading axes of ``config``. Returns ``(energy, grad)``
    or ``(energy, grad, hess)``.
    """
    phi = _as_phases(config)
    x = _arm_arguments(phi, params, flux)
    arms = _arm_derivatives(x, params, max_order=max(order, 1))
    dev = phi - phi.mean(axis=-1, keepdims=True)
    e_j = params.e_j
    energy = e_j * (0.5 * params.beta * np.sum(dev**2, axis=-1) + np.sum(arms[0], axis=-1))
    slope = arms[1]
    grad = e_j * (params.beta * dev + np.roll(slope, 1, axis=-1) - slope)
    if order < 2:
        return energy, grad
    k = arms[2]
    kprev = np.roll(k, 1, axis=-1)
    hess = np.zeros(phi.shape + (4,))
    idx = np.arange(4)
    hess[..., idx, idx] = k + kprev
    hess[..., idx, (idx + 1) % 4] -= k
    hess[..., (idx + 1) % 4, idx] -= k
    hess += params.beta * (np.eye(4) - 0.25)
    return energy, grad, e_j * hess


def jrm_energy(config: PhaseLike, params: JrmParams, flux):
    """Ring energy H_shunt + H_out in units of E_J."""
    energy = jrm_landscape(config, params, flux, order=1)[0]
    return float(energy) if np.ndim(energy) == 0 else energy


def jrm_gradient(config: PhaseLike, params: JrmParams, flux) -> np.ndarray:
    """Analytic gradient with respect to the four node phases."""
    return jrm_landscape(config, params, flux, order=1)[1]


def jrm_hessian(config: PhaseLike, params: JrmParams, flux) -> np.ndarray:
    """Analytic 4x4 Hessian with respect to the node phases."""
    return jrm_landscape(config, params, flux, order=2)[2]


def internal_phases(config: PhaseLike, params: JrmParams, flux) -> PhaseConfiguration:
    """Configuration with the stray-node phases delta_j filled in.

    ``delta_j`` sits between the junction and the stray inductor of arm j;
    with junction phase ``-chi_j`` it equals ``phi_j + phi_ext/4 + chi_j``.
    """
    phi = np.array(_as_phases(config), dtype=float).reshape(4)
    x = _arm_arguments(phi, params, flux)
    chi = np.array(
        [
            solve_segment_phase(x[i], params.alpha * a)
            for i, a in enumerate(params.junction_asymmetry)
        ]
    )
    return PhaseConfiguration(phi, delta=phi + _arm_biases(params, flux) + chi)
