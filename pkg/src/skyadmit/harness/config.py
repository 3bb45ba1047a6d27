"""Experiment configuration files.

A config is a YAML mapping. Every section is optional; missing keys take the
reference defaults and unknown keys are rejected::

    experiment: convergence          # convergence | capacity-sweep | energy-rate-sweep | single-eval
    seeds: [0, 1, 2, 3, 4]
    sweep: []                        # grid for the sweep experiments
    out_dir: results
    workers: 1
    model:       {battery_capacity: 10, rate_energy: 110, ...}   # ModelParams fields
    learner:
      algorithm: online              # online | regen
      eta: 1.0
      schedule: {kind: harmonic, gamma0: 0.001, kappa: 1.0e6}
      recurrent_state: null          # or {energy: 2, event: ENERGY}
      total_steps: 1000000
      initial_theta: [1, 1, 1]
      initial_psi: 0.7
      slope: 1.5
      snapshot_every: 1000
    simulation:  {horizon: 200000, burn_in: 10000, initial_energy: null}
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from ..learner import Algorithm, LearnConfig, StepSchedule
from ..model import Event, ModelParams, State

EXPERIMENTS = ("convergence", "capacity-sweep", "energy-rate-sweep", "single-eval")
DEFAULT_GRIDS = {
    "capacity-sweep": [5, 10, 15, 20, 25],
    "energy-rate-sweep": [90, 100, 110, 120, 130],
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimulationSettings:
    horizon: int = 200_000
    burn_in: int = 10_000
    initial_energy: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "convergence"
    model: ModelParams = field(default_factory=ModelParams)
    learner: LearnConfig = field(default_factory=LearnConfig)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    sweep: tuple[float, ...] = ()
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    out_dir: str = "results"
    workers: int = 1

    def to_dict(self) -> dict:
        lc = self.learner
        rs = lc.recurrent_state
        return {
            "experiment": self.experiment,
            "seeds": list(self.seeds),
            "sweep": list(self.sweep),
            "out_dir": self.out_dir,
            "workers": self.workers,
            "model": dataclasses.asdict(self.model),
            "learner": {
                "algorithm": lc.algorithm.value,
                "eta": lc.eta,
                "schedule": dataclasses.asdict(lc.schedule),
                "recurrent_state": None if rs is None else
                {"energy": rs.energy, "event": rs.event.name},
                "total_steps": lc.total_steps,
                "initial_theta": list(lc.initial_theta),
                "initial_psi": lc.initial_psi,
                "slope": lc.slope,
                "snapshot_every": lc.snapshot_every,
            },
            "simulation": dataclasses.asdict(self.simulation),
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)


def _check_keys(section: str, data: dict, allowed) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        where = f" in '{section}'" if section else ""
        raise ConfigError(f"unknown key(s){where}: {', '.join(unknown)}")


def _mapping(section: str, value) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"'{section}' must be a mapping")
    return value


def _number(key: str, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if kind is int:
        if not float(value).is_integer():
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite")
    return value


def _build(section: str, cls, data: dict, converters: dict):
    kwargs = {}
    for name, conv in converters.items():
        if name in data:
            kwargs[name] = conv(f"{section}.{name}", data[name])
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def _opt_int(key, value):
    return None if value is None else _number(key, value, int)


def _model(data: dict) -> ModelParams:
    fields = {f.name: f for f in dataclasses.fields(ModelParams)}
    _check_keys("model", data, fields)
    conv = {}
    for name in fields:
        kind = int if name in ("battery_capacity", "energy_per_request") else float
        conv[name] = (lambda k, v, kind=kind: _number(k, v, kind))
    params = _build("model", ModelParams, data, conv)
    return params


def _recurrent(key, value):
    if value is None:
        return None
    value = _mapping(key, value)
    _check_keys(key, value, ("energy", "event"))
    try:
        event = Event[str(value.get("event", "ENERGY")).upper()]
    except KeyError:
        raise ConfigError(f"{key}.event: must be one of {[e.name for e in Event]}") from None
    return State(_number(f"{key}.energy", value.get("energy"), int), event)


def _theta(key, value):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{key}: expected a list of three numbers")
    return tuple(_number(key, v) for v in value)


def _schedule(key, value):
    value = _mapping(key, value)
    _check_keys(key, value, ("kind", "gamma0", "kappa"))
    conv = {"kind": lambda k, v: str(v), "gamma0": _number, "kappa": _number}
    return _build(key, StepSchedule, value, conv)


def _algorithm(key, value):
    try:
        return Algorithm(str(value))
    except ValueError:
        raise ConfigError(f"{key}: must be 'online' or 'regen', got {value!r}") from None


def _learner(data: dict) -> LearnConfig:
    conv = {
        "algorithm": _algorithm,
        "eta": _number,
        "schedule": _schedule,
        "recurrent_state": _recurrent,
        "total_steps": lambda k, v: _number(k, v, int),
        "initial_theta": _theta,
        "initial_psi": _number,
        "slope": _number,
        "snapshot_every": lambda k, v: _number(k, v, int),
    }
    _check_keys("learner", data, conv)
    return _build("learner", LearnConfig, data, conv)


def _simulation(data: dict) -> SimulationSettings:
    conv = {
        "horizon": lambda k, v: _number(k, v, int),
        "burn_in": lambda k, v: _number(k, v, int),
        "initial_energy": _opt_int,
    }
    _check_keys("simulation", data, conv)
    sim = _build("simulation", SimulationSettings, data, conv)
    if not sim.horizon > sim.burn_in >= 0:
        raise ConfigError("simulation.horizon must exceed simulation.burn_in >= 0")
    return sim


TOP_LEVEL = ("experiment", "model", "learner", "simulation", "sweep", "seeds", "out_dir", "workers")


def config_from_dict(data: dict | None) -> ExperimentConfig:
    data = _mapping("config", data)
    _check_keys("", data, TOP_LEVEL)
    experiment = str(data.get("experiment", "convergence"))
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}")
    model = _model(_mapping("model", data.get("model")))
    learner = _learner(_mapping("learner", data.get("learner")))
    sim = _simulation(_mapping("simulation", data.get("simulation")))

    sweep = data.get("sweep") or DEFAULT_GRIDS.get(experiment, [])
    if not isinstance(sweep, (list, tuple)):
        raise ConfigError("sweep: expected a list")
    sweep = tuple(_number("sweep", v) for v in sweep)
    if experiment == "capacity-sweep":
        sweep = tuple(_number("sweep", v, int) for v in sweep)
    seeds = data.get("seeds", [0, 1, 2, 3, 4])
    if not isinstance(seeds, (list, tuple)) or not seeds:
        raise ConfigError("seeds: expected a non-empty list")
    seeds = tuple(_number("seeds", s, int) for s in seeds)
    workers = _number("workers", data.get("workers", 1), int)
    if workers < 1:
        raise ConfigError("workers: must be >= 1")

    if learner.recurrent_state is not None and not 0 <= learner.recurrent_state.energy <= model.battery_capacity:
        raise ConfigError("learner.recurrent_state.energy: outside the battery range")
    if sim.initial_energy is not None and not 0 <= sim.initial_energy <= model.battery_capacity:
        raise ConfigError("simulation.initial_energy: outside the battery range")
    return ExperimentConfig(experiment, model, learner, sim, sweep, seeds,
                            str(data.get("out_dir", "results")), workers)


def parse_config(path) -> ExperimentConfig:
    """Read and validate a YAML config file; an empty file gives all defaults."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return config_from_dict(data)
