"""Linearized normal modes of the JPC built around the shunted ring.

Equations of motion for small node-phase deviations read

    2 C_row * phi_ddot = - Hess(H_JRM) @ phi,

with the capacitance of each row ordered (C1, C4, C2, C3) as in the
circuit's node labelling. Stray inductance enters only through the arm
curvature cos(D)/(1 + alpha cos(D)), D being the equilibrium junction phase,
so it renormalizes the Josephson energy without changing the mode shapes.

Units: phi_0 = 1, energies in E_J, so omega**2 is in E_J/(C phi_0**2) for
the capacitance unit used in :class:`CapacitanceSet`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment

from .circuit import JrmParams, jrm_hessian, solve_segment_phase
from .errors import InstabilityError

__all__ = [
    "CapacitanceSet",
    "EigenResult",
    "ModeCurves",
    "delta_equilibrium",
    "linear_coupling",
    "dynamical_matrix",
    "eigenmodes",
    "mode_frequencies_vs_flux",
    "closed_form_frequencies",
]

LABELS = ("0", "a", "b", "c")
_DEGENERATE_RTOL = 1e-9


@dataclass(frozen=True)
class CapacitanceSet:
    c1: float
    c2: float
    c3: float
    c4: float

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3, self.c4) <= 0:
            raise ValueError("capacitances must be positive")

    @classmethod
    def symmetric(cls, c=1.0):
        return cls(c, c, c, c)

    def row_order(self) -> np.ndarray:
        """Capacitance attached to node phases 1..4."""
        return np.array([self.c1, self.c4, self.c2, self.c3])


@dataclass
class EigenResult:
    """Normal modes sorted by frequency.

    ``vectors[k]`` belongs to ``frequencies[k]`` and carries label
    ``labels[k]`` (one of '0', 'a', 'b', 'c'). Vectors have unit Euclidean
    norm with their first non-zero component positive.
    """

    frequencies: np.ndarray
    vectors: np.ndarray
    labels: List[str]
    lambda1: float
    lambda2: float
    flux: float

    def omega(self, label: str) -> float:
        return float(self.frequencies[self.labels.index(label)])

    def vector(self, label: str) -> np.ndarray:
        return self.vectors[self.labels.index(label)]

    @property
    def omega_a(self):
        return self.omega("a")

    @property
    def omega_b(self):
        return self.omega("b")

    @property
    def omega_c(self):
        return self.omega("c")


def delta_equilibrium(alpha, flux):
    """Equilibrium junction phase D solving ``D + alpha*sin(D) = phi_ext/4``."""
    return solve_segment_phase(np.asarray(flux, dtype=float) / 4.0, alpha)


def linear_coupling(params: JrmParams, flux) -> float:
    """Effective arm stiffness ``E_J cos(D)/(1 + alpha cos D)`` at the origin."""
    d = delta_equilibrium(params.alpha, float(flux))
    return params.e_j * np.cos(d) / (1.0 + params.alpha * np.cos(d))


def dynamical_matrix(params: JrmParams, caps: CapacitanceSet, flux, config=None) -> np.ndarray:
    """Matrix M of ``phi_ddot = -M phi`` about ``config`` (origin by default)."""
    config = np.zeros(4) if config is None else config
    hess = jrm_hessian(config, params, flux)
    return hess / (2.0 * caps.row_order())[:, None]


def _normalize(v):
    v = v / np.linalg.norm(v)
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


def _templates(caps):
    c1, c3 = caps.c1, caps.c3
    t = np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [1.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, -1.0],
            [c3, -c1, c3, -c1],
        ]
    )
    return t / np.linalg.norm(t, axis=1, keepdims=True)


def _align_degenerate(w2, vecs, metric, templates):
    """Rotate each degenerate eigenspace onto the template modes it contains."""
    vecs = vecs.copy()
    scale = max(np.max(np.abs(w2)), 1e-300)
    i = 0
    while i < len(w2):
        j = i + 1
        while j < len(w2) and abs(w2[j] - w2[i]) <= _DEGENERATE_RTOL * scale:
            j += 1
        if j - i > 1:
            block = vecs[:, i:j]
            overlap = block.T @ metric @ templates.T
            order = np.argsort(-np.linalg.norm(overlap, axis=0))[: j - i]
            q, _ = np.linalg.qr(overlap[:, order])
            vecs[:, i:j] = block @ q
        i = j
    return vecs


def eigenmodes(params: JrmParams, caps: CapacitanceSet, flux, config=None) -> EigenResult:
    """Eigenfrequencies and mode shapes of the linearized circuit.

    Solved as the symmetric generalized problem ``Hess v = w**2 (2C) v``, so
    the mode vectors are orthogonal in the capacitance-weighted product.

    Raises
    ------
    InstabilityError
        If any squared frequency is negative beyond rounding.
    """
    flux = float(flux)
    config = np.zeros(4) if config is None else config
    hess = jrm_hessian(config, params, flux)
    metric = np.diag(2.0 * caps.row_order())
    w2, vecs = eigh(hess, metric)
    scale = max(np.max(np.abs(w2)), 1e-300)
    tol = 1e-10 * scale
    if np.any(w2 < -tol):
        raise InstabilityError(flux, float(w2.min()))
    w2 = np.where(np.abs(w2) <= tol, 0.0, w2)
    templates = _templates(caps)
    vecs = _align_degenerate(w2, vecs, metric, templates)
    unit = np.array([_normalize(vecs[:, k]) for k in range(4)])
    score = np.abs(unit @ templates.T)
    rows, cols = linear_sum_assignment(-score)
    labels = [LABELS[c] for _, c in sorted(zip(rows, cols))]
    vc = unit[labels.index("c")]
    norm12 = np.hypot(vc[0], vc[1])
    lam1, lam2 = abs(vc[0]) / norm12, abs(vc[1]) / norm12
    return EigenResult(
        frequencies=np.sqrt(w2),
        vectors=unit,
        labels=labels,
        lambda1=float(lam1),
        lambda2=float(lam2),
        flux=flux,
    )


def closed_form_frequencies(params: JrmParams, caps: CapacitanceSet, flux) -> dict:
    """Closed-form omega_0, omega_a, omega_b, omega_c for c1 = c2, c3 = c4."""
    k = linear_coupling(params, flux)
    s = params.e_j * params.beta
    c1, c3 = caps.c1, caps.c3
    w2 = {
        "0": 0.0,
        "a": k / c1 + s / (2.0 * c1),
        "b": k / c3 + s / (2.0 * c3),
        "c": (1.0 / c1 + 1.0 / c3) * (k + s / 4.0),
    }
    return {lab: float(np.sqrt(v)) if v >= 0 else float("nan") for lab, v in w2.items()}


@dataclass
class ModeCurves:
    flux: np.ndarray
    omega_a: np.ndarray
    omega_b: np.ndarray
    omega_c: np.ndarray
    unstable: np.ndarray

    def rows(self):
        for row in zip(self.flux, self.omega_a, self.omega_b, self.omega_c):
            yield tuple(float(v) for v in row)


def mode_frequencies_vs_flux(params: JrmParams, caps: CapacitanceSet, flux_values) -> ModeCurves:
    """omega_a, omega_b, omega_c along a flux grid; unstable points give NaN."""
    flux_values = np.asarray(flux_values, dtype=float)
    out = np.full((flux_values.size, 3), np.nan)
    unstable = np.zeros(flux_values.size, dtype=bool)
    for i, f in enumerate(flux_values):
        try:
            res = eigenmodes(params, caps, f)
        except InstabilityError:
            unstable[i] = True
            continue
        out[i] = [res.omega_a, res.omega_b, res.omega_c]
    return ModeCurves(flux_values, out[:, 0], out[:, 1], out[:, 2], unstable)
