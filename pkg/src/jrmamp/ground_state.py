"""Global minima of the ring energy and ground-state degeneracy maps.

Minima are found by multistart local minimization. All seeds of one
(params, flux) point are minimized together as a batch with a damped,
saddle-free Newton iteration on the analytic Hessian, then gauge fixed
(phases summing to zero), filtered by energy and deduplicated by distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import List, Sequence, Tuple

import numpy as np

from .circuit import JrmParams, PhaseConfiguration, _as_phases, gauge_fix, jrm_landscape
from .errors import IterationLimitError, JrmError
from .sweeps import parallel_map

__all__ = [
    "MinimaSet",
    "PhaseDiagram",
    "local_minimize",
    "minimize_batch",
    "global_minima",
    "degeneracy_class",
    "phase_diagram",
]

GRAD_TOL = 1e-8
ENERGY_TOL = 1e-6
DISTANCE_TOL = 1e-3
DEFAULT_SEEDS = 256
SEED_BOX = 2 * np.pi
_EIG_FLOOR = 1e-6
_MAX_STEP = 1.0
_ZERO_MODE = np.full((4, 4), 0.25)


@dataclass
class MinimaSet:
    """Distinct global minima of the ring energy at one bias point."""

    minima: List[Tuple[PhaseConfiguration, float]]
    energy_tolerance: float = ENERGY_TOL
    distance_tolerance: float = DISTANCE_TOL
    failed_seeds: int = 0
    n_seeds: int = 0

    @property
    def degeneracy(self) -> int:
        return len(self.minima)

    @property
    def ground_energy(self) -> float:
        return min(e for _, e in self.minima)

    def phases(self) -> np.ndarray:
        return np.array([c.phi for c, _ in self.minima])


def minimize_batch(seeds, params: JrmParams, flux, grad_tol=GRAD_TOL, max_iter=200):
    """Minimize the ring energy from many seeds at once.

    Returns
    -------
    phases : ndarray, shape (n, 4)
        Gauge-fixed end points.
    energies : ndarray, shape (n,)
    converged : ndarray of bool
        True where the gradient norm reached ``grad_tol`` at a point whose
        Hessian, projected off the zero mode, is positive semidefinite.
    """
    x = gauge_fix(np.atleast_2d(np.asarray(seeds, dtype=float)))
    n = x.shape[0]
    energy = np.empty(n)
    grad = np.empty((n, 4))
    hess = np.empty((n, 4, 4))
    active = np.ones(n, dtype=bool)
    converged = np.zeros(n, dtype=bool)
    energy[:], grad[:], hess[:] = jrm_landscape(x, params, flux, order=2)

    for _ in range(max_iter):
        gnorm = np.linalg.norm(grad, axis=1)
        done = active & (gnorm <= grad_tol)
        converged |= done
        active &= ~done
        if not active.any():
            break
        idx = np.flatnonzero(active)
        w, v = np.linalg.eigh(hess[idx] + _ZERO_MODE)
        w = np.maximum(np.abs(w), _EIG_FLOOR)
        g = grad[idx]
        coeff = np.einsum("nij,ni->nj", v, g) / w
        step = -np.einsum("nij,nj->ni", v, coeff)
        norm = np.linalg.norm(step, axis=1, keepdims=True)
        step *= np.minimum(1.0, _MAX_STEP / np.maximum(norm, 1e-300))
        slope = np.einsum("ni,ni->n", g, step)

        t = np.ones(idx.size)
        e0 = energy[idx]
        pending = np.ones(idx.size, dtype=bool)
        new_x = x[idx].copy()
        new_e = e0.copy()
        for _ in range(40):
            p = np.flatnonzero(pending)
            trial = x[idx[p]] + t[p, None] * step[p]
            e_trial = jrm_landscape(trial, params, flux, order=1)[0]
            ok = e_trial <= e0[p] + 1e-4 * t[p] * slope[p] + 1e-13 * (1.0 + np.abs(e0[p]))
            new_x[p[ok]] = trial[ok]
            new_e[p[ok]] = e_trial[ok]
            pending[p[ok]] = False
            t[p[~ok]] *= 0.5
            if not pending.any():
                break
        stalled = pending
        moved = idx[~stalled]
        x[moved] = gauge_fix(new_x[~stalled])
        if moved.size:
            energy[moved], grad[moved], hess[moved] = jrm_landscape(x[moved], params, flux, order=2)
        # a failed line search means we are at rounding level; one more gradient check decides
        active[idx[stalled]] = False
        converged[idx[stalled]] = np.linalg.norm(grad[idx[stalled]], axis=1) <= grad_tol

    converged &= _projected_psd(hess)
    return x, energy, converged


def _projected_psd(hess, tol=1e-8):
    w = np.linalg.eigvalsh(hess + _ZERO_MODE)
    return w.min(axis=-1) >= -tol


def local_minimize(seed, params: JrmParams, flux, grad_tol=GRAD_TOL, max_iter=200):
    """Minimize from one seed; returns a gauge-fixed ``(PhaseConfiguration, energy)``.

    Raises
    ------
    IterationLimitError
        If the gradient tolerance is not met; carries the best point found.
    """
    phi = _as_phases(seed)
    x, e, ok = minimize_batch(phi.reshape(1, 4), params, flux, grad_tol, max_iter)
    if not ok[0]:
        raise IterationLimitError(
            f"local minimization did not reach |grad| <= {grad_tol}",
            best=PhaseConfiguration(x[0]),
            energy=float(e[0]),
        )
    return PhaseConfiguration(x[0]), float(e[0])


def _dedup(phases, energies, energy_tol, distance_tol):
    low = energies.min()
    keep = np.flatnonzero(energies <= low + energy_tol)
    keep = keep[np.argsort(energies[keep], kind="stable")]
    reps = []
    for i in keep:
        if all(np.linalg.norm(phases[i] - phases[j]) >= distance_tol for j in reps):
            reps.append(i)
    # deterministic order: lexicographic in the phases
    reps.sort(key=lambda j: tuple(np.round(phases[j], 9)))
    return reps


def global_minima(
    params: JrmParams,
    flux,
    n_seeds: int = DEFAULT_SEEDS,
    rng_seed=0,
    energy_tol: float = ENERGY_TOL,
    distance_tol: float = DISTANCE_TOL,
) -> MinimaSet:
    """All distinct global minima from ``n_seeds`` random starts.

    Seeds are uniform in ``[-2 pi, 2 pi]**4`` (then gauge fixed) and drawn
    from ``numpy.random.default_rng(rng_seed)``; ``rng_seed`` may be an int
    or a sequence of ints. Seeds that fail to converge are dropped and
    counted in ``failed_seeds``.
    """
    if n_seeds < 64:
        raise ValueError("n_seeds must be at least 64")
    rng = np.random.default_rng(rng_seed)
    seeds = rng.uniform(-SEED_BOX, SEED_BOX, size=(n_seeds, 4))
    try:
        x, e, ok = minimize_batch(seeds, params, flux)
    except JrmError:
        # fall back to seed-by-seed so that one bad seed does not sink the point
        x, e, ok = _minimize_each(seeds, params, flux)
    failed = int(np.count_nonzero(~ok))
    if not ok.any():
        raise IterationLimitError(f"all {n_seeds} seeds failed at phi_ext={float(flux)}")
    x, e = x[ok], e[ok]
    reps = _dedup(x, e, energy_tol, distance_tol)
    return MinimaSet(
        minima=[(PhaseConfiguration(x[j]), float(e[j])) for j in reps],
        energy_tolerance=energy_tol,
        distance_tolerance=distance_tol,
        failed_seeds=failed,
        n_seeds=n_seeds,
    )


def _minimize_each(seeds, params, flux):
    xs, es, oks = [], [], []
    for s in seeds:
        try:
            x, e, ok = minimize_batch(s[None, :], params, flux)
        except JrmError:
            x, e, ok = gauge_fix(s[None, :]), np.array([np.inf]), np.array([False])
        xs.append(x[0])
        es.append(e[0])
        oks.append(ok[0])
    return np.array(xs), np.array(es), np.array(oks)


def degeneracy_class(params: JrmParams, flux, n_seeds: int = DEFAULT_SEEDS, rng_seed=0) -> int:
    """Number of distinct global minima (1, 2 or 4 in practice)."""
    return global_minima(params, flux, n_seeds=n_seeds, rng_seed=rng_seed).degeneracy


@dataclass
class PhaseDiagram:
    """Degeneracy on a (parameter, flux) grid.

    ``degeneracy`` is -1 on cells whose minimization failed outright.
    Arrays are indexed ``[i_axis, i_flux]``.
    """

    axis_name: str
    axis_values: np.ndarray
    flux_values: np.ndarray
    degeneracy: np.ndarray
    ground_energy: np.ndarray
    failed_seeds: np.ndarray
    errors: dict = field(default_factory=dict)

    @property
    def failed_cells(self) -> int:
        return int(np.count_nonzero(self.degeneracy < 0))

    def rows(self):
        """Rows ``(axis1, axis2, degeneracy, ground_energy, failed_seeds)``."""
        for i, a in enumerate(self.axis_values):
            for j, f in enumerate(self.flux_values):
                yield (
                    float(a),
                    float(f),
                    int(self.degeneracy[i, j]),
                    float(self.ground_energy[i, j]),
                    int(self.failed_seeds[i, j]),
                )

    def threshold(self, flux_index=None):
        """Smallest axis value above which every sampled cell is non-degenerate.

        With ``flux_index`` the test is restricted to that flux column,
        otherwise all flux values must be non-degenerate. Returns ``nan``
        when even the last axis value is degenerate.
        """
        deg = self.degeneracy if flux_index is None else self.degeneracy[:, [flux_index]]
        stable = np.all(deg == 1, axis=1)
        if not stable[-1]:
            return float("nan")
        i = len(stable) - 1
        while i > 0 and stable[i - 1]:
            i -= 1
        return float(self.axis_values[i])


def _cell(task, base, n_seeds, rng_seed, axis_name):
    index, value, flux = task
    params = base.replace(**{axis_name: value})
    try:
        ms = global_minima(params, flux, n_seeds=n_seeds, rng_seed=(rng_seed, index))
    except JrmError as exc:
        return -1, np.nan, n_seeds, str(exc)
    return ms.degeneracy, ms.ground_energy, ms.failed_seeds, None


def phase_diagram(
    axis_name: str,
    axis_values: Sequence[float],
    flux_values: Sequence[float],
    base: JrmParams,
    n_seeds: int = DEFAULT_SEEDS,
    rng_seed: int = 0,
    workers: int = 1,
) -> PhaseDiagram:
    """Degeneracy map over ``axis_name`` ('beta' or 'alpha') and flux.

    Each cell draws its seeds from ``(rng_seed, cell_index)`` so the result
    does not depend on ``workers``. Failing cells are marked, not raised.
    """
    if axis_name not in ("beta", "alpha"):
        raise ValueError("axis_name must be 'beta' or 'alpha'")
    axis_values = np.asarray(axis_values, dtype=float)
    flux_values = np.asarray(flux_values, dtype=float)
    if axis_values.size < 2 or flux_values.size < 2:
        raise ValueError("phase diagrams need at least two points per axis")
    tasks = [
        (i * flux_values.size + j, a, f)
        for i, a in enumerate(axis_values)
        for j, f in enumerate(flux_values)
    ]
    func = partial(_cell, base=base, n_seeds=n_seeds, rng_seed=rng_seed, axis_name=axis_name)
    results = parallel_map(func, tasks, workers=workers)
    shape = (axis_values.size, flux_values.size)
    deg = np.array([r[0] for r in results], dtype=int).reshape(shape)
    energy = np.array([r[1] for r in results], dtype=float).reshape(shape)
    failed = np.array([r[2] for r in results], dtype=int).reshape(shape)
    errors = {tasks[k][0]: r[3] for k, r in enumerate(results) if r[3] is not None}
    return PhaseDiagram(axis_name, axis_values, flux_values, deg, energy, failed, errors)
