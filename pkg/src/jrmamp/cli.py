"""Command-line front end: ``jrm-sim <command> [--config FILE] ...``.

Each command writes a data artifact (``<command>.csv`` or ``.json``), a
``<command>.summary.json`` with derived scalars, and a
``<command>.manifest.json`` recording inputs, versions and wall time. Data
and summary files are byte-identical for identical inputs and seed; only
the manifest carries run-specific fields.

Exit status: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from .config import COMMANDS, ConfigError, load_config
from .errors import JrmError

__all__ = ["main", "run"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
MAX_FAILED_FRACTION = 0.01


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def _dump_json(path, data):
    text = json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def _write_table(path, columns, rows, fmt):
    if fmt == "csv":
        lines = [",".join(columns)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        Path(path).write_text("\n".join(lines) + "\n")
    else:
        _dump_json(path, {"columns": list(columns), "rows": [list(r) for r in rows]})


# ---------------------------------------------------------------------------
# commands: each returns (columns, rows, summary, failed_fraction)


def _phase_diagram(cfg, seed, workers):
    from .ground_state import phase_diagram

    pd = phase_diagram(
        cfg.axis, cfg.axis_grid.values(), cfg.flux_grid.values(), cfg.circuit.build(),
        n_seeds=cfg.n_seeds, rng_seed=seed, workers=workers,
    )
    flux = pd.flux_values
    summary = {
        "threshold_all_flux": pd.threshold(),
        "failed_cells": pd.failed_cells,
        "cell_errors": {str(k): v for k, v in sorted(pd.errors.items())},
    }
    two_pi = np.flatnonzero(np.isclose(flux, 2 * np.pi))
    if two_pi.size:
        summary["threshold_at_2pi"] = pd.threshold(int(two_pi[0]))
    columns = (cfg.axis, "flux", "degeneracy", "ground_energy", "failed_seeds")
    return columns, list(pd.rows()), summary, pd.failed_cells / pd.degeneracy.size


def _kerr_map(cfg, seed, workers):
    from .kerr import duffing_map

    dm = duffing_map(
        cfg.circuit.build(), cfg.caps.build(), cfg.probe_mode, cfg.pump_mode,
        cfg.flux_grid.values(), cfg.photon_grid.values(), energy_scale=cfg.energy_scale,
        check_degeneracy=cfg.check_degeneracy, n_seeds=cfg.n_seeds,
    )
    rows = [r + (c,) for r, c in zip(dm.rows(), dm.colors().ravel())]
    summary = {"flagged_flux_points": int(dm.flagged.sum())}
    return ("flux", "photons", "shift", "flagged", "color"), rows, summary, 0.0


def _null_point(cfg, seed, workers):
    from .kerr import kerr_tensor, null_flux

    params = cfg.circuit.build()
    point = null_flux(params, check_stability=cfg.check_stability, n_seeds=cfg.n_seeds, rng_seed=seed)
    kt = kerr_tensor(params, point.phi_star)
    row = (point.phi_star, point.phi_star / np.pi, "" if point.stable is None else int(point.stable))
    row += tuple(kt.as_array())
    columns = ("phi_star", "phi_star_over_pi", "stable", "k_aa", "k_bb", "k_cc", "k_ab", "k_ac", "k_bc")
    summary = {"phi_star": point.phi_star, "stable": point.stable, "max_abs_kerr": kt.max_abs()}
    return columns, [row], summary, 0.0


def _null_trajectory(cfg, seed, workers):
    from .kerr import null_trajectory

    tr = null_trajectory(cfg.beta, cfg.alpha_grid.values(), n_seeds=cfg.n_seeds, rng_seed=seed, workers=workers)
    summary = {"critical_alpha": tr.critical_alpha, "critical_flux": tr.critical_flux}
    return ("alpha", "phi_star", "stable"), list(tr.rows()), summary, 0.0


def _modes(cfg, seed, workers):
    from .eigenmodes import mode_frequencies_vs_flux

    curves = mode_frequencies_vs_flux(cfg.circuit.build(), cfg.caps.build(), cfg.flux_grid.values())
    rows = [r + (int(u),) for r, u in zip(curves.rows(), curves.unstable)]
    summary = {"unstable_points": int(curves.unstable.sum())}
    return ("flux", "omega_a", "omega_b", "omega_c", "unstable"), rows, summary, 0.0


def _scattering(cfg, seed, workers):
    from .network import PORTS, scattering

    net = cfg.network.build()
    columns = ["omega"]
    for o in PORTS:
        for i in PORTS:
            columns += [f"abs_S_{o}_{i}", f"arg_S_{o}_{i}"]
    rows = []
    for w in cfg.omega_grid.values():
        s = scattering(net, w).matrix
        row = [w]
        for v in s.ravel():
            row += [abs(v), float(np.angle(v))]
        rows.append(tuple(row))
    summary = {"pumps": [[p.kind, p.g, p.phase] for p in net.pumps]}
    return tuple(columns), rows, summary, 0.0


def _gain_curves(cfg, seed, workers):
    from .errors import BandwidthError
    from .network import bandwidth, gain_curves, phase_sensitive_gain

    net = cfg.network.build()
    gc = gain_curves(net, cfg.omega_grid.values())
    # the transmission path carrying gain depends on which pumps are present
    main = gc.transmission_ba if net.pump("C") is not None else gc.reflection_a
    try:
        width = bandwidth(gc.omega, main)
    except BandwidthError:
        width = None
    summary = {
        "pumps": [[p.kind, p.g, p.phase] for p in net.pumps],
        "peak_gain_db": float(np.max(main)),
        "bandwidth": width,
    }
    if net.balanced:
        ps = phase_sensitive_gain(net)
        summary.update(
            phase_sensitive_max_db=ps.max_db, phase_sensitive_min_db=ps.min_db, amplified_quadrature_angle=ps.angle
        )
    return gc.COLUMNS, list(gc.rows()), summary, 0.0


def _two_tone(cfg, seed, workers):
    from .network import two_tone_spectrum

    tones = two_tone_spectrum(cfg.network.build(), cfg.probe_detuning, cfg.out_port)
    rows = [(t.offset, t.power, t.label) for t in tones]
    summary = {"n_tones": len(tones)}
    if len(tones) == 2:
        summary["idler_to_probe"] = tones[0].power / tones[1].power
    return ("offset", "power", "label"), rows, summary, 0.0


def _histogram(cfg, seed, workers):
    from .measurement import count_lobes, projective_histogram

    h = projective_histogram(cfg.prep.build(), cfg.readout.build(), cfg.n_shots, seed=seed, bins=cfg.bins, workers=workers)
    summary = {"lobes": count_lobes(h.i_rec, h.q_rec), "n_shots": cfg.n_shots}
    return ("i", "q", "count"), list(h.rows()), summary, 0.0


def _jumps(cfg, seed, workers):
    from .measurement import detect_jumps, jump_trace, resolved_fraction

    tr = jump_trace(cfg.readout.build(), cfg.duration, cfg.window, dt=cfg.dt, initial=cfg.initial, seed=seed)
    det = detect_jumps(tr)
    summary = {
        "true_jumps": len(tr.true_jumps()),
        "detected_jumps": len(det),
        "resolved_fraction": resolved_fraction(tr, det),
    }
    return ("time", "hidden", "raw", "filtered"), list(tr.rows()), summary, 0.0


def _backaction(cfg, seed, workers):
    from .measurement import backaction_experiment

    tomo = backaction_experiment(
        cfg.readout.build(), cfg.weak_strength_ratio, cfg.n_shots, seed=seed,
        p_excited=cfg.p_excited, workers=workers,
    )
    summary = {"survival": tomo.survival, "bins": int(tomo.m_bin.size), "bin_width": tomo.bin_width}
    return ("m_bin", "X", "Y", "Z", "n"), list(tomo.rows()), summary, 0.0


def _fit_eta(cfg, seed, workers):
    from .measurement import Tomogram, fit_efficiency

    try:
        tomo = Tomogram.from_csv(cfg.tomogram)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load tomogram {cfg.tomogram}: {exc}") from exc
    fit = fit_efficiency(tomo, cfg.template.build())
    summary = {"eta_hat": fit.eta, "stderr": fit.stderr, "lam": fit.lam, "fit_residual": fit.reduced_chi2}
    row = (fit.eta, fit.stderr, fit.lam, fit.lam_stderr, fit.reduced_chi2)
    return ("eta_hat", "stderr", "lam", "lam_stderr", "reduced_chi2"), [row], summary, 0.0


HANDLERS = {
    "phase-diagram": _phase_diagram,
    "kerr-map": _kerr_map,
    "null-point": _null_point,
    "null-trajectory": _null_trajectory,
    "modes": _modes,
    "scattering": _scattering,
    "gain-curves": _gain_curves,
    "two-tone": _two_tone,
    "histogram": _histogram,
    "jumps": _jumps,
    "backaction": _backaction,
    "fit-eta": _fit_eta,
}


def _versions():
    import scipy

    from . import __version__

    return {"jrmamp": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(command, config_path=None, seed=None, out=None, workers=None, fmt=None, stderr=None):
    """Run one command and return its exit status."""
    stderr = sys.stderr if stderr is None else stderr
    overrides = {}
    env_seed, env_workers = os.environ.get("JRM_SEED"), os.environ.get("JRM_WORKERS")
    try:
        if seed is None and env_seed is not None:
            seed = int(env_seed)
        if workers is None and env_workers is not None:
            workers = int(env_workers)
    except ValueError as exc:
        print(f"config error: bad environment override: {exc}", file=stderr)
        return EXIT_CONFIG
    out = None if out is None else str(out)
    for key, value in (("rng_seed", seed), ("workers", workers), ("format", fmt), ("output", out)):
        if value is not None:
            overrides[key] = value
    try:
        cfg = load_config(command, config_path, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG

    t0 = time.perf_counter()
    try:
        columns, rows, summary, failed = HANDLERS[command](cfg, cfg.rng_seed, cfg.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (JrmError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error in {command}: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_NUMERIC
    wall = time.perf_counter() - t0

    out_dir = Path(cfg.output or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = out_dir / f"{command}.{cfg.format}"
    summary_path = out_dir / f"{command}.summary.json"
    _write_table(data_path, columns, rows, cfg.format)
    summary = dict(summary, command=command, rng_seed=cfg.rng_seed)
    _dump_json(summary_path, summary)
    status = EXIT_OK if failed <= MAX_FAILED_FRACTION else EXIT_NUMERIC
    manifest = {
        "command": command,
        "config": cfg.model_dump(mode="json"),
        "rng_seed": cfg.rng_seed,
        "workers": cfg.workers,
        "versions": _versions(),
        "wall_time_s": wall,
        "failed_fraction": failed,
        "exit_status": status,
        "artifacts": {p.name: _sha256(p) for p in (data_path, summary_path)},
    }
    _dump_json(out_dir / f"{command}.manifest.json", manifest)
    if status != EXIT_OK:
        print(f"numerical error in {command}: {100 * failed:.2f}% of grid cells failed", file=stderr)
    return status


def build_parser():
    parser = argparse.ArgumentParser(prog="jrm-sim", description="Shunted JRM amplifier simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML or JSON config file")
        p.add_argument("--seed", type=int, help="RNG seed (env JRM_SEED)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="worker processes (env JRM_WORKERS)")
        p.add_argument("--format", choices=("csv", "json"))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.seed, args.out, args.workers, args.format)


if __name__ == "__main__":
    sys.exit(main())
