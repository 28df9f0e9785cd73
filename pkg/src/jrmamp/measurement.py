"""Dispersive qubit readout through a phase-sensitive amplifier.

Bloch convention: ``z = +1`` is the ground state |g>, whose pointer sits at
``+separation`` on the amplified quadrature ``i``; ``z = -1`` is |e>.

A single readout is modelled as two independent Gaussian channels. The
recorded channel gives ``i ~ N(+-m cos(theta), sigma**2)`` with ``m`` the
separation and ``theta`` the amplifier alignment (0 is informational,
pi/2 is orthogonal). With ``lam = m/sigma**2`` and ``L = lam i cos(theta)``
the conditional update is

    z'       = (P+ e^L - P- e^-L) / N,           N = P+ e^L + P- e^-L
    x' + iy' = (x + iy) e^{i lam i sin(theta)} D / N

where ``P+- = (1 +- z)/2``. The unrecorded (environment) channel is
marginalised; it only damps coherence by ``D = exp(-s_env**2/2)`` with
``s_env**2 = s_rec**2 (1 - eta)/eta`` and ``s_rec = m/sigma``. The squeezed
quadrature ``q`` carries no information and is pure noise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from functools import partial
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import least_squares

from .errors import FitError, PostselectionError
from .sweeps import chunk_rngs, parallel_map

__all__ = [
    "BlochState",
    "ReadoutModel",
    "MeasurementRecord",
    "Histogram",
    "JumpTrace",
    "Tomogram",
    "EfficiencyFit",
    "sample_record",
    "sample_records",
    "projective_histogram",
    "count_lobes",
    "jump_trace",
    "detect_jumps",
    "resolved_fraction",
    "backaction_experiment",
    "tomogram_model",
    "fit_efficiency",
    "rotate_y",
]

CHUNK = 8192
N_BINS = 41
BIN_RANGE = 4.0
MIN_BIN_SHOTS = 50
MIN_SURVIVAL = 0.10
_QUAD_NODES = 12


@dataclass(frozen=True)
class BlochState:
    x: float = 0.0
    y: float = 0.0
    z: float = 1.0

    def __post_init__(self):
        if self.x ** 2 + self.y ** 2 + self.z ** 2 > 1.0 + 1e-9:
            raise ValueError("Bloch vector longer than 1")

    @classmethod
    def ground(cls):
        return cls(0.0, 0.0, 1.0)

    @classmethod
    def excited(cls):
        return cls(0.0, 0.0, -1.0)

    @classmethod
    def plus_x(cls):
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def thermal(cls, p_excited: float):
        return cls(0.0, 0.0, 1.0 - 2.0 * p_excited)

    @classmethod
    def from_array(cls, v):
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def purity_radius(self) -> float:
        return float(np.linalg.norm(self.as_array()))


@dataclass(frozen=True)
class ReadoutModel:
    """Readout parameters; times in microseconds, rates in 1/us.

    ``separation`` is the recorded half-distance between the pointer
    means and ``sigma`` the record noise per shot, both in record units.
    """

    separation: float
    sigma: float = 1.0
    eta: float = 1.0
    alignment: float = 0.0
    t1: float = np.inf
    gamma_up: float = 0.0
    integration_time: float = 1.0

    def __post_init__(self):
        if self.separation < 0:
            raise ValueError("separation must be non-negative")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not self.t1 > 0 or self.gamma_up < 0 or not self.integration_time > 0:
            raise ValueError("t1 and integration_time must be positive, gamma_up >= 0")

    @property
    def strength(self) -> float:
        """Recorded measurement strength ``s = separation/sigma``."""
        return self.separation / self.sigma

    @property
    def lam(self) -> float:
        return self.separation / self.sigma ** 2

    @property
    def environment_factor(self) -> float:
        """Coherence damping from the unrecorded channel."""
        s_env2 = self.strength ** 2 * (1.0 - self.eta) / self.eta
        return float(np.exp(-0.5 * s_env2))

    def scaled(self, ratio: float) -> "ReadoutModel":
        """Same model with the separation multiplied by ``ratio``."""
        return replace(self, separation=self.separation * ratio)

    def replace(self, **changes) -> "ReadoutModel":
        return replace(self, **changes)


@dataclass(frozen=True)
class MeasurementRecord:
    i_rec: float
    q_rec: float


def _as_states(state, n=None):
    if isinstance(state, BlochState):
        arr = state.as_array()[None, :]
    else:
        arr = np.atleast_2d(np.asarray(state, dtype=float))
    if n is not None and arr.shape[0] == 1:
        arr = np.repeat(arr, n, axis=0)
    return arr


def _bayes_update(states, i_rec, model, theta=None):
    theta = model.alignment if theta is None else theta
    x, y, z = states.T
    p_plus = 0.5 * (1.0 + z)
    p_minus = 0.5 * (1.0 - z)
    big_l = model.lam * i_rec * np.cos(theta)
    phi = model.lam * i_rec * np.sin(theta)
    # divide through by e^|L| to stay finite for strong measurements
    shift = np.abs(big_l)
    ep, em = np.exp(big_l - shift), np.exp(-big_l - shift)
    norm = p_plus * ep + p_minus * em
    z_new = (p_plus * ep - p_minus * em) / norm
    coh = (x + 1j * y) * np.exp(1j * phi) * model.environment_factor * np.exp(-shift) / norm
    return np.column_stack([coh.real, coh.imag, z_new])


def sample_records(states, model: ReadoutModel, rng: np.random.Generator, n: Optional[int] = None):
    """Vectorised readout of many shots.

    Parameters
    ----------
    states : BlochState or array, shape (n, 3)
    n : int, optional
        Number of shots when a single state is given.

    Returns
    -------
    i_rec, q_rec : ndarray
    post : ndarray, shape (n, 3)
        Conditional post-measurement Bloch vectors.
    """
    states = _as_states(states, n)
    count = states.shape[0]
    # fixed draw order keeps results reproducible whatever the model
    u_jump = rng.random(count)
    tau = rng.random(count)
    u_branch = rng.random(count)
    noise_i = rng.standard_normal(count)
    noise_q = rng.standard_normal(count)

    mean_axis = model.separation * np.cos(model.alignment)
    states = states.copy()
    p_minus = 0.5 * (1.0 - states[:, 2])
    p_plus = 1.0 - p_minus
    p_down = -np.expm1(-model.integration_time / model.t1)
    p_up = -np.expm1(-model.integration_time * model.gamma_up)
    down = u_jump < p_minus * p_down
    up = ~down & (u_jump < p_minus * p_down + p_plus * p_up)
    jumped = down | up

    # no-jump branch of amplitude damping
    keep_g, keep_e = 1.0 - p_up, 1.0 - p_down
    if p_down > 0 or p_up > 0:
        pg, pe = p_plus * keep_g, p_minus * keep_e
        tot = pg + pe
        safe = np.where(tot > 0, tot, 1.0)
        states[:, 0:2] *= (np.sqrt(keep_g * keep_e) / safe)[:, None]
        states[:, 2] = (pg - pe) / safe

    p_ground = 0.5 * (1.0 + states[:, 2])
    branch = np.where(u_branch < p_ground, 1.0, -1.0)
    pointer = branch
    pointer = np.where(down, 1.0 - 2.0 * tau, pointer)
    pointer = np.where(up, 2.0 * tau - 1.0, pointer)
    i_rec = mean_axis * pointer + model.sigma * noise_i
    q_rec = model.sigma * noise_q

    post = _bayes_update(states, i_rec, model)
    if jumped.any():
        post[jumped] = 0.0
        post[down, 2] = 1.0
        post[up, 2] = -1.0
    return i_rec, q_rec, post


def sample_record(state: BlochState, model: ReadoutModel, rng: np.random.Generator) -> Tuple[MeasurementRecord, BlochState]:
    """One readout: returns the record and the conditional post-state."""
    i_rec, q_rec, post = sample_records(state, model, rng, n=1)
    vec = post[0]
    r = np.linalg.norm(vec)
    if r > 1.0:
        vec = vec / r
    return MeasurementRecord(float(i_rec[0]), float(q_rec[0])), BlochState.from_array(vec)


# ---------------------------------------------------------------------------
# histograms


@dataclass
class Histogram:
    i_edges: np.ndarray
    q_edges: np.ndarray
    counts: np.ndarray
    i_rec: np.ndarray
    q_rec: np.ndarray

    def rows(self):
        ic = 0.5 * (self.i_edges[1:] + self.i_edges[:-1])
        qc = 0.5 * (self.q_edges[1:] + self.q_edges[:-1])
        for a, i in enumerate(ic):
            for b, q in enumerate(qc):
                yield float(i), float(q), int(self.counts[a, b])


def _draw_chunks(state, model, n_shots, seed, workers=1):
    tasks = chunk_rngs(seed, n_shots, CHUNK)
    func = partial(_chunk_records, state=state, model=model)
    out = parallel_map(func, tasks, workers=workers)
    return np.concatenate([o[0] for o in out]), np.concatenate([o[1] for o in out])


def _chunk_records(task, state, model):
    seq, size = task
    i_rec, q_rec, _ = sample_records(state, model, np.random.default_rng(seq), n=size)
    return i_rec, q_rec


def projective_histogram(
    prep: BlochState,
    model: ReadoutModel,
    n_shots: int = 80_000,
    seed: int = 0,
    bins: int = 101,
    extent: Optional[float] = None,
    workers: int = 1,
) -> Histogram:
    """2D histogram of (i_rec, q_rec) for ``n_shots`` readouts of ``prep``.

    The grid is square and symmetric, spanning ``separation + 5 sigma``
    unless ``extent`` is given.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    i_rec, q_rec = _draw_chunks(prep, model, n_shots, seed, workers)
    if extent is None:
        extent = model.separation + 5.0 * model.sigma
    edges = np.linspace(-extent, extent, bins + 1)
    counts, _, _ = np.histogram2d(i_rec, q_rec, bins=[edges, edges])
    return Histogram(edges, edges.copy(), counts.astype(int), i_rec, q_rec)


def count_lobes(i_rec, q_rec=None, min_separation: float = 2.0, seed: int = 0) -> int:
    """Number of distinct lobes (1 or 2) in a readout cloud.

    Gaussian mixtures with one and two components are compared by BIC; two
    lobes also require the component means to be at least
    ``min_separation`` pooled standard deviations apart.
    """
    from sklearn.mixture import GaussianMixture

    data = np.asarray(i_rec, dtype=float)[:, None]
    if q_rec is not None:
        data = np.column_stack([data[:, 0], np.asarray(q_rec, dtype=float)])
    one = GaussianMixture(1, random_state=seed).fit(data)
    two = GaussianMixture(2, random_state=seed, n_init=2).fit(data)
    if two.bic(data) >= one.bic(data):
        return 1
    if two.weights_.min() < 0.05:
        return 1
    diff = two.means_[0] - two.means_[1]
    unit = diff / np.linalg.norm(diff)
    spread = np.sqrt(np.mean([unit @ c @ unit for c in two.covariances_]))
    return 2 if np.linalg.norm(diff) / spread >= min_separation else 1


# ---------------------------------------------------------------------------
# quantum jumps


@dataclass
class JumpTrace:
    """Continuous readout of a telegraph-switching qubit.

    ``hidden`` holds the true state (+1 ground, -1 excited) per sample,
    ``raw`` the per-sample records and ``filtered`` their boxcar average.
    """

    times: np.ndarray
    hidden: np.ndarray
    raw: np.ndarray
    filtered: np.ndarray
    separation: float
    window: float

    def rows(self):
        for row in zip(self.times, self.hidden, self.raw, self.filtered):
            yield float(row[0]), int(row[1]), float(row[2]), float(row[3])

    def true_jumps(self):
        """(time, new_state) for every hidden transition."""
        idx = np.flatnonzero(np.diff(self.hidden) != 0) + 1
        return [(float(self.times[k]), int(self.hidden[k])) for k in idx]


def jump_trace(
    model: ReadoutModel,
    duration: float,
    window: float,
    dt: Optional[float] = None,
    initial: int = -1,
    seed: int = 0,
) -> JumpTrace:
    """Simulate one trace of ``duration`` us sampled every ``dt``.

    Decay (-1 -> +1) happens at rate ``1/t1``, excitation at ``gamma_up``.
    Each sample carries noise such that integrating over
    ``integration_time`` gives ``sigma``.
    """
    if window > duration:
        raise ValueError("window must not exceed duration")
    dt = window / 10.0 if dt is None else dt
    rng = np.random.default_rng(seed)
    n = int(round(duration / dt))
    times = (np.arange(n) + 0.5) * dt
    hidden = np.empty(n, dtype=int)
    state, t, k = int(initial), 0.0, 0
    rate_down = 0.0 if np.isinf(model.t1) else 1.0 / model.t1
    while k < n:
        rate = rate_down if state == -1 else model.gamma_up
        t_next = t + (rng.exponential(1.0 / rate) if rate > 0 else np.inf)
        stop = n if np.isinf(t_next) else min(n, int(np.searchsorted(times, t_next)))
        hidden[k:stop] = state
        k, t, state = stop, t_next, -state
    sigma_dt = model.sigma * np.sqrt(model.integration_time / dt)
    raw = model.separation * hidden + sigma_dt * rng.standard_normal(n)
    width = max(1, int(round(window / dt)))
    filtered = uniform_filter1d(raw, size=width, mode="nearest")
    return JumpTrace(times, hidden, raw, filtered, model.separation, window)


def detect_jumps(trace: JumpTrace, low: Optional[float] = None, high: Optional[float] = None):
    """Two-threshold detector; returns (time, new_state) for each detected jump.

    The detected state switches to ground once the filtered record rises
    above ``high`` and to excited once it falls below ``low`` (defaults
    ``-+separation/2``).
    """
    high = 0.5 * trace.separation if high is None else high
    low = -0.5 * trace.separation if low is None else low
    f = trace.filtered
    state = 1 if f[0] >= 0 else -1
    jumps = []
    for k in range(1, f.size):
        if state == -1 and f[k] > high:
            state = 1
            jumps.append((float(trace.times[k]), 1))
        elif state == 1 and f[k] < low:
            state = -1
            jumps.append((float(trace.times[k]), -1))
    return jumps


def resolved_fraction(trace: JumpTrace, detected=None, tolerance: Optional[float] = None) -> float:
    """Fraction of hidden jumps matched by a detection of the same sign.

    A match must lie within ``tolerance`` (default: one filter window) and
    each detection can be used once. ``nan`` if there are no hidden jumps.
    """
    detected = detect_jumps(trace) if detected is None else list(detected)
    tolerance = trace.window if tolerance is None else tolerance
    truth = trace.true_jumps()
    if not truth:
        return float("nan")
    used = set()
    hits = 0
    for t, s in truth:
        for k, (td, sd) in enumerate(detected):
            if k not in used and sd == s and abs(td - t) <= tolerance:
                used.add(k)
                hits += 1
                break
    return hits / len(truth)


# ---------------------------------------------------------------------------
# back-action tomography


def rotate_y(states):
    """Rotation by +pi/2 about y: (x, y, z) -> (z, y, -x)."""
    states = np.atleast_2d(states)
    return np.column_stack([states[:, 2], states[:, 1], -states[:, 0]])


@dataclass
class Tomogram:
    """Conditional tomography against the binned weak-measurement record.

    Records are in units of sigma. ``n`` counts all surviving shots in a
    bin; each shot measures one axis (shot index mod 3).
    """

    m_bin: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    n: np.ndarray
    bin_width: float
    survival: float = float("nan")

    COLUMNS = ("m_bin", "X", "Y", "Z", "n")

    def rows(self):
        for row in zip(self.m_bin, self.x, self.y, self.z, self.n):
            yield float(row[0]), float(row[1]), float(row[2]), float(row[3]), int(row[4])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for m, x, y, z, n in self.rows():
                w.writerow([f"{m:.16e}", f"{x:.16e}", f"{y:.16e}", f"{z:.16e}", n])

    @classmethod
    def from_csv(cls, path, bin_width: Optional[float] = None):
        data = np.genfromtxt(path, delimiter=",", names=True)
        data = np.atleast_1d(data)
        m = np.asarray(data["m_bin"], dtype=float)
        if bin_width is None:
            bin_width = float(np.min(np.diff(m))) if m.size > 1 else 2 * BIN_RANGE / N_BINS
        return cls(m, data["X"], data["Y"], data["Z"], data["n"].astype(int), bin_width)


def _backaction_chunk(task, model, ratio, p_excited):
    (seq, size), offset = task
    rng = np.random.default_rng(seq)
    prep = np.tile(BlochState.thermal(p_excited).as_array(), (size, 1))
    strong = model.replace(alignment=0.0)
    i_strong, _, post = sample_records(prep, strong, rng)
    weak_model = model.scaled(ratio)
    i_weak, _, post = sample_records(rotate_y(post), weak_model, rng)
    axis = (offset + np.arange(size)) % 3
    p_up = 0.5 * (1.0 + np.clip(post[np.arange(size), axis], -1.0, 1.0))
    outcome = np.where(rng.random(size) < p_up, 1.0, -1.0)
    return i_strong > 0, i_weak / model.sigma, axis, outcome


def backaction_experiment(
    model: ReadoutModel,
    weak_strength_ratio: float = 0.2,
    n_shots: int = 80_000,
    seed: int = 0,
    p_excited: float = 0.1,
    workers: int = 1,
) -> Tomogram:
    """Strong readout, ground postselection, pi/2 about y, weak readout, tomography.

    ``model`` describes the strong readout (taken at informational
    alignment); the weak readout uses ``weak_strength_ratio`` times its
    separation, at the model's alignment and efficiency.

    Raises
    ------
    PostselectionError
        If fewer than 10% of the shots pass the ground-state postselection.
    """
    if not 0 < weak_strength_ratio <= 1:
        raise ValueError("weak_strength_ratio must lie in (0, 1]")
    chunks = chunk_rngs(seed, n_shots, CHUNK)
    tasks = [(c, k * CHUNK) for k, c in enumerate(chunks)]
    func = partial(_backaction_chunk, model=model, ratio=weak_strength_ratio, p_excited=p_excited)
    out = parallel_map(func, tasks, workers=workers)
    keep = np.concatenate([o[0] for o in out])
    m = np.concatenate([o[1] for o in out])[keep]
    axis = np.concatenate([o[2] for o in out])[keep]
    outcome = np.concatenate([o[3] for o in out])[keep]
    survival = keep.mean()
    if survival < MIN_SURVIVAL:
        raise PostselectionError(f"only {100 * survival:.1f}% of shots survived postselection")

    edges = np.linspace(-BIN_RANGE, BIN_RANGE, N_BINS + 1)
    idx = np.digitize(m, edges) - 1
    inside = (idx >= 0) & (idx < N_BINS)
    idx, axis, outcome = idx[inside], axis[inside], outcome[inside]
    counts = np.bincount(idx, minlength=N_BINS)
    means = np.zeros((3, N_BINS))
    for a in range(3):
        sel = axis == a
        s = np.bincount(idx[sel], weights=outcome[sel], minlength=N_BINS)
        c = np.bincount(idx[sel], minlength=N_BINS)
        means[a] = s / np.maximum(c, 1)
    good = counts >= MIN_BIN_SHOTS
    centers = 0.5 * (edges[1:] + edges[:-1])
    return Tomogram(
        centers[good], means[0][good], means[1][good], means[2][good], counts[good],
        bin_width=float(edges[1] - edges[0]), survival=float(survival),
    )


def tomogram_model(m, lam, eta, theta):
    """Post-measurement (X, Y, Z) for a record ``m`` (sigma = 1) from +x."""
    big_l = lam * m * np.cos(theta)
    phi = lam * m * np.sin(theta)
    d = np.exp(-0.5 * lam ** 2 * (1.0 - eta) / eta)
    sech = 1.0 / np.cosh(big_l)
    return d * sech * np.cos(phi), d * sech * np.sin(phi), np.tanh(big_l)


def _bin_average(centers, width, lam, eta, theta):
    nodes, weights = np.polynomial.legendre.leggauss(_QUAD_NODES)
    r = centers[:, None] + 0.5 * width * nodes[None, :]
    mu = lam * np.cos(theta)
    density = np.exp(-0.5 * (r - mu) ** 2) + np.exp(-0.5 * (r + mu) ** 2)
    w = weights[None, :] * density
    w /= w.sum(axis=1, keepdims=True)
    return tuple(np.sum(w * f, axis=1) for f in tomogram_model(r, lam, eta, theta))


@dataclass(frozen=True)
class EfficiencyFit:
    eta: float
    stderr: float
    lam: float
    lam_stderr: float
    reduced_chi2: float


def fit_efficiency(tomogram: Tomogram, template: ReadoutModel) -> EfficiencyFit:
    """Least-squares estimate of eta from a conditional tomogram.

    The weak-measurement strength ``lam`` (sinusoid frequency and tanh
    slope) and ``eta`` (coherence amplitude) are fitted jointly to the
    bin-averaged model, with binomial weights per tomography axis.
    ``template`` supplies the alignment and the starting strength
    (its separation in sigma units). Standard errors come from the inverse
    of ``J^T J`` at the optimum.

    Raises
    ------
    FitError
        If the optimiser fails or the curvature matrix is singular.
    """
    theta = template.alignment
    data = np.concatenate([tomogram.x, tomogram.y, tomogram.z])
    n_axis = np.tile(np.maximum(tomogram.n / 3.0, 1.0), 3)

    def predict(p):
        return np.concatenate(_bin_average(tomogram.m_bin, tomogram.bin_width, p[0], p[1], theta))

    def residual(p):
        pred = predict(p)
        var = np.maximum(1.0 - pred ** 2, 1e-3) / n_axis
        return (data - pred) / np.sqrt(var)

    lam0 = max(template.strength, 1e-2)
    res = least_squares(
        residual, x0=[lam0, min(template.eta, 0.99)], bounds=([1e-6, 1e-3], [np.inf, 1.0]),
        x_scale="jac", xtol=1e-12, ftol=1e-12,
    )
    if not res.success:
        raise FitError(f"efficiency fit failed: {res.message}")
    jtj = res.jac.T @ res.jac
    if np.linalg.cond(jtj) > 1e12:
        raise FitError("efficiency fit ill-conditioned (weak strength too small?)")
    cov = np.linalg.inv(jtj)
    dof = max(data.size - 2, 1)
    return EfficiencyFit(
        eta=float(res.x[1]),
        stderr=float(np.sqrt(cov[1, 1])),
        lam=float(res.x[0]),
        lam_stderr=float(np.sqrt(cov[0, 0])),
        reduced_chi2=float(2.0 * res.cost / dof),
    )
