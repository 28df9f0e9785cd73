"""Validated run configurations for the command-line front end.

Config files are YAML (a superset of JSON). Every block rejects unknown
keys. Flux values are radians unless a grid sets ``unit: pi``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Type

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

__all__ = ["ConfigError", "load_config", "COMMANDS", "Grid", "RunConfig"]


class ConfigError(Exception):
    """Unreadable or invalid configuration (exit status 2)."""


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Grid(_Block):
    start: float
    stop: float
    steps: int = Field(ge=1)
    unit: Literal["rad", "pi"] = "rad"

    def values(self) -> np.ndarray:
        scale = np.pi if self.unit == "pi" else 1.0
        return scale * np.linspace(self.start, self.stop, self.steps)


class CircuitBlock(_Block):
    beta: PositiveFloat = 4.5
    alpha: float = Field(0.0, ge=0.0, le=0.99)
    e_j: PositiveFloat = 1.0
    junction_asymmetry: Tuple[PositiveFloat, PositiveFloat, PositiveFloat, PositiveFloat] = (1.0, 1.0, 1.0, 1.0)
    loop_flux_asymmetry: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def build(self):
        from .circuit import JrmParams

        return JrmParams(
            beta=self.beta, alpha=self.alpha, e_j=self.e_j,
            junction_asymmetry=self.junction_asymmetry,
            loop_flux_asymmetry=self.loop_flux_asymmetry,
        )


class CapsBlock(_Block):
    c1: PositiveFloat = 1.0
    c2: PositiveFloat = 1.0
    c3: PositiveFloat = 1.0
    c4: PositiveFloat = 1.0

    def build(self):
        from .eigenmodes import CapacitanceSet

        return CapacitanceSet(self.c1, self.c2, self.c3, self.c4)


class ModeBlock(_Block):
    center_frequency: float = 0.0
    kappa: PositiveFloat = 10.0
    kappa_ext: Optional[PositiveFloat] = None
    static_detuning: float = 0.0

    @model_validator(mode="after")
    def _ext_below_total(self):
        if self.kappa_ext is not None and self.kappa_ext > self.kappa:
            raise ValueError("kappa_ext must not exceed kappa")
        return self


class PumpBlock(_Block):
    kind: Literal["G", "C"]
    g: float = Field(ge=0.0)
    phase: float = 0.0


class BalanceBlock(_Block):
    gain_db: float = Field(ge=0.0)
    theta_g: float = 0.0
    theta_c: float = 0.0


class SinglePumpBlock(_Block):
    kind: Literal["G", "C"] = "G"
    gain_db: float
    phase: float = 0.0


class NetworkBlock(_Block):
    """Two modes plus either explicit pumps or a calibration target."""

    mode_a: ModeBlock = ModeBlock(center_frequency=7466.8)
    mode_b: ModeBlock = ModeBlock(center_frequency=4871.5)
    pumps: List[PumpBlock] = []
    balance: Optional[BalanceBlock] = None
    single_pump: Optional[SinglePumpBlock] = None

    @model_validator(mode="after")
    def _one_pump_source(self):
        if sum(bool(x) for x in (self.pumps, self.balance, self.single_pump)) > 1:
            raise ValueError("give only one of pumps, balance, single_pump")
        return self

    def build(self):
        from .network import ModeSpec, PumpedNetwork, PumpSpec, balance_gc, calibrate_single_pump

        base = PumpedNetwork(
            ModeSpec(**self.mode_a.model_dump()), ModeSpec(**self.mode_b.model_dump())
        )
        if self.balance is not None:
            g_g, g_c, t_g, t_c = balance_gc(self.balance.gain_db, base, self.balance.theta_g, self.balance.theta_c)
            return base.with_pumps(PumpSpec("G", g_g, t_g), PumpSpec("C", g_c, t_c))
        if self.single_pump is not None:
            sp = self.single_pump
            g = calibrate_single_pump(sp.gain_db, base, kind=sp.kind)
            return base.with_pumps(PumpSpec(sp.kind, g, sp.phase))
        return base.with_pumps(*(PumpSpec(p.kind, p.g, p.phase) for p in self.pumps))


class ReadoutBlock(_Block):
    separation: float = Field(2.5, ge=0.0)
    sigma: PositiveFloat = 1.0
    eta: float = Field(1.0, gt=0.0, le=1.0)
    alignment: float = 0.0
    t1: PositiveFloat = float("inf")
    gamma_up: float = Field(0.0, ge=0.0)
    integration_time: PositiveFloat = 1.0

    def build(self):
        from .measurement import ReadoutModel

        return ReadoutModel(**self.model_dump())


class StateBlock(_Block):
    x: float = 1.0
    y: float = 0.0
    z: float = 0.0

    @model_validator(mode="after")
    def _inside_sphere(self):
        if self.x ** 2 + self.y ** 2 + self.z ** 2 > 1 + 1e-9:
            raise ValueError("Bloch vector longer than 1")
        return self

    def build(self):
        from .measurement import BlochState

        return BlochState(self.x, self.y, self.z)


class RunConfig(_Block):
    """Fields shared by every command."""

    command: Optional[str] = None
    rng_seed: int = Field(0, ge=0, lt=2 ** 64)
    output: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    workers: PositiveInt = 1


class PhaseDiagramConfig(RunConfig):
    circuit: CircuitBlock = CircuitBlock()
    axis: Literal["beta", "alpha"] = "beta"
    axis_grid: Grid = Grid(start=0.25, stop=6.0, steps=116)
    flux_grid: Grid = Grid(start=0.0, stop=4.0, steps=9, unit="pi")
    n_seeds: int = Field(256, ge=64)


class KerrMapConfig(RunConfig):
    circuit: CircuitBlock = CircuitBlock()
    caps: CapsBlock = CapsBlock()
    probe_mode: Literal["a", "b", "c"] = "a"
    pump_mode: Literal["a", "b", "c"] = "c"
    flux_grid: Grid = Grid(start=0.0, stop=4.0, steps=81, unit="pi")
    photon_grid: Grid = Grid(start=0.0, stop=100.0, steps=11)
    energy_scale: float = 1.0
    check_degeneracy: bool = False
    n_seeds: int = Field(256, ge=64)


class NullPointConfig(RunConfig):
    circuit: CircuitBlock = CircuitBlock(alpha=0.0)
    check_stability: bool = True
    n_seeds: int = Field(256, ge=64)


class NullTrajectoryConfig(RunConfig):
    beta: PositiveFloat = 4.5
    alpha_grid: Grid = Grid(start=0.0, stop=0.6, steps=61)
    n_seeds: int = Field(256, ge=64)

    @model_validator(mode="after")
    def _alpha_range(self):
        v = self.alpha_grid.values()
        if v.min() < 0 or v.max() > 0.6:
            raise ValueError("alpha grid must lie within [0, 0.6]")
        return self


class ModesConfig(RunConfig):
    circuit: CircuitBlock = CircuitBlock()
    caps: CapsBlock = CapsBlock()
    flux_grid: Grid = Grid(start=0.0, stop=4.0, steps=81, unit="pi")


class ScatteringConfig(RunConfig):
    network: NetworkBlock = NetworkBlock(balance=BalanceBlock(gain_db=15.0))
    omega_grid: Grid = Grid(start=-20.0, stop=20.0, steps=401)


class GainCurvesConfig(ScatteringConfig):
    pass


class TwoToneConfig(RunConfig):
    network: NetworkBlock = NetworkBlock(balance=BalanceBlock(gain_db=15.0))
    probe_detuning: float = 5.0
    out_port: Literal["a", "b"] = "b"


class HistogramConfig(RunConfig):
    readout: ReadoutBlock = ReadoutBlock()
    prep: StateBlock = StateBlock()
    n_shots: PositiveInt = 80_000
    bins: PositiveInt = 101


class JumpsConfig(RunConfig):
    readout: ReadoutBlock = ReadoutBlock(separation=1.0, sigma=1.0, t1=10.0, gamma_up=0.05, integration_time=0.05)
    duration: PositiveFloat = 7.5
    window: PositiveFloat = 0.2
    dt: PositiveFloat = 0.01
    initial: Literal[-1, 1] = -1

    @model_validator(mode="after")
    def _window_fits(self):
        if self.window > self.duration:
            raise ValueError("window must not exceed duration")
        return self


class BackactionConfig(RunConfig):
    readout: ReadoutBlock = ReadoutBlock(separation=5.0, eta=0.55, alignment=float(np.pi / 2))
    weak_strength_ratio: float = Field(0.2, gt=0.0, le=1.0)
    n_shots: PositiveInt = 80_000
    p_excited: float = Field(0.1, ge=0.0, lt=1.0)


class FitEtaConfig(RunConfig):
    tomogram: str = "backaction.csv"
    template: ReadoutBlock = ReadoutBlock(separation=1.0, alignment=float(np.pi / 2))


COMMANDS: Dict[str, Type[RunConfig]] = {
    "phase-diagram": PhaseDiagramConfig,
    "kerr-map": KerrMapConfig,
    "null-point": NullPointConfig,
    "null-trajectory": NullTrajectoryConfig,
    "modes": ModesConfig,
    "scattering": ScatteringConfig,
    "gain-curves": GainCurvesConfig,
    "two-tone": TwoToneConfig,
    "histogram": HistogramConfig,
    "jumps": JumpsConfig,
    "backaction": BackactionConfig,
    "fit-eta": FitEtaConfig,
}


def _read(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    return data


def load_config(command: str, path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Read and validate the configuration for ``command``.

    ``overrides`` (already-resolved CLI flags) replace top-level keys.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    data = _read(path) if path is not None else {}
    if data.get("command") not in (None, command):
        raise ConfigError(f"config is for {data['command']!r}, not {command!r}")
    data.update(overrides or {})
    try:
        return COMMANDS[command].model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
