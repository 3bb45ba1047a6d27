"""Experiment runners: convergence, capacity sweep, energy-rate sweep, single evaluation.

Each run writes plain CSV into the output directory:

* ``config.yaml`` - the effective configuration with defaults filled in
* ``rng.txt`` - identifier of the bit generator
* ``trace_<tag>.csv`` - learner snapshots per (sweep value, seed)
* ``policy_<tag>.csv`` - acceptance probability by energy level for the learned theta
* ``results.csv`` - one :class:`ResultRow` per (sweep value, seed)
* ``summary.csv`` - mean and standard error over seeds per sweep value
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import oracle
from ..learner import TrainResult, train, write_trace
from ..model import ModelParams
from ..policy import SigmoidPolicy, extract_thresholds, greedy
from ..simulator import RNG_ID, SimConfig, run_seeds, run_trajectory
from .config import ExperimentConfig

log = logging.getLogger(__name__)

SWEEP_FIELD = {"capacity-sweep": "battery_capacity", "energy-rate-sweep": "rate_energy"}


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return format(float(value), ".10g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


@dataclass
class ResultRow:
    sweep_value: float | None
    seed: int
    theta_b: float
    theta_c: float
    theta_s: float
    threshold_b: int
    threshold_c: int
    threshold_s: int
    psi_learned_mc: float
    psi_learned_exact: float
    psi_greedy_mc: float
    psi_greedy_exact: float
    psi_optimal: float
    accepted_b: float
    accepted_c: float
    accepted_s: float
    accepted_greedy_b: float
    accepted_greedy_c: float
    accepted_greedy_s: float
    energy_learned: float
    energy_greedy: float

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def values(self) -> list:
        return [getattr(self, f) for f in self.header()]

    @property
    def accepted_total(self) -> float:
        return self.accepted_b + self.accepted_c + self.accepted_s

    @property
    def accepted_greedy_total(self) -> float:
        return self.accepted_greedy_b + self.accepted_greedy_c + self.accepted_greedy_s


@dataclass
class RunOutput:
    row: ResultRow
    result: TrainResult


def params_for(config: ExperimentConfig, value) -> ModelParams:
    if value is None:
        return config.model
    name = SWEEP_FIELD[config.experiment]
    return dataclasses.replace(config.model, **{name: int(value) if name == "battery_capacity" else float(value)})


def run_one(config: ExperimentConfig, value, seed: int, learn: bool = True) -> RunOutput:
    """Train (unless ``learn`` is false) and evaluate one (sweep value, seed) pair."""
    params = params_for(config, value)
    learn_seed, mc_seed, greedy_seed = run_seeds(seed, 3)
    lc = dataclasses.replace(config.learner, seed=learn_seed,
                             initial_energy=config.simulation.initial_energy,
                             total_steps=config.learner.total_steps if learn else 0)
    log.info("run value=%s seed=%d steps=%d", value, seed, lc.total_steps)
    result = train(lc, params)
    theta = result.theta
    sim = config.simulation

    def mc(policy, s):
        cfg = SimConfig(s, sim.horizon, sim.initial_energy, sim.burn_in)
        return run_trajectory(cfg, policy, params)[0].average_reward

    learned = oracle.evaluate(theta, params, lc.slope)
    base = oracle.evaluate(greedy(), params)
    best = oracle.solve_optimal(params)
    acc, acc_g = learned.acceptance_rates(), base.acceptance_rates()
    row = ResultRow(
        None if value is None else value, seed, *theta,
        *extract_thresholds(theta, params.battery_capacity),
        mc(SigmoidPolicy(theta, lc.slope), mc_seed), learned.psi,
        mc(greedy(), greedy_seed), base.psi, best.psi,
        *acc, *acc_g, learned.average_energy(), base.average_energy())
    return RunOutput(row, result)


def _tag(config: ExperimentConfig, value, seed: int) -> str:
    if value is None:
        return f"seed{seed}"
    prefix = "E" if config.experiment == "capacity-sweep" else "rate"
    return f"{prefix}{fmt(value)}_seed{seed}"


def _work(args):
    config, value, seed, learn = args
    return run_one(config, value, seed, learn)


def summarize(rows: list[ResultRow]) -> list[list]:
    """Per sweep value: mean and standard error (unbiased variance) of each numeric column."""
    numeric = [h for h in ResultRow.header() if h not in ("sweep_value", "seed")]
    groups: dict = {}
    for r in rows:
        groups.setdefault(r.sweep_value, []).append(r)
    out = []
    for value, members in groups.items():
        line = [value, len(members)]
        for name in numeric:
            xs = np.array([getattr(r, name) for r in members], dtype=float)
            se = xs.std(ddof=1) / math.sqrt(len(xs)) if len(xs) > 1 else float("nan")
            line += [xs.mean(), se]
        out.append(line)
    return out


def summary_header() -> list[str]:
    numeric = [h for h in ResultRow.header() if h not in ("sweep_value", "seed")]
    return ["sweep_value", "n_seeds"] + [f"{n}_{s}" for n in numeric for s in ("mean", "se")]


def run_experiment(config: ExperimentConfig, out_dir=None) -> list[RunOutput]:
    """Run every (sweep value, seed) work item and write all outputs."""
    out = Path(out_dir or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = dataclasses.replace(config, out_dir=str(out))
    config.dump(out / "config.yaml")
    (out / "rng.txt").write_text(RNG_ID + "\n")

    values = list(config.sweep) if config.experiment in SWEEP_FIELD else [None]
    learn = config.experiment != "single-eval"
    items = [(config, v, s, learn) for v in values for s in config.seeds]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            outputs = list(pool.map(_work, items))
    else:
        outputs = [_work(item) for item in items]

    for (_, value, seed, _), res in zip(items, outputs):
        tag = _tag(config, value, seed)
        write_trace(res.result, out / f"trace_{tag}.csv")
        params = params_for(config, value)
        oracle.write_policy_table(SigmoidPolicy(res.result.theta, config.learner.slope),
                                  params.battery_capacity, out / f"policy_{tag}.csv")
    for value in values:
        params = params_for(config, value)
        suffix = "" if value is None else "_" + _tag(config, value, 0).rsplit("_", 1)[0]
        oracle.write_policy_table(oracle.solve_optimal(params).policy(),
                                  params.battery_capacity, out / f"policy_optimal{suffix}.csv")

    rows = [o.row for o in outputs]
    write_csv(out / "results.csv", ResultRow.header(), [r.values() for r in rows])
    write_csv(out / "summary.csv", summary_header(), summarize(rows))
    return outputs


def _require(config: ExperimentConfig, kind: str) -> ExperimentConfig:
    if config.experiment != kind:
        config = dataclasses.replace(config, experiment=kind)
    if kind in SWEEP_FIELD and not config.sweep:
        raise ValueError(f"{kind} needs a non-empty sweep grid")
    return config


def run_convergence(config: ExperimentConfig, out_dir=None) -> list[RunOutput]:
    return run_experiment(_require(config, "convergence"), out_dir)


def run_capacity_sweep(config: ExperimentConfig, out_dir=None) -> list[RunOutput]:
    return run_experiment(_require(config, "capacity-sweep"), out_dir)


def run_energy_rate_sweep(config: ExperimentConfig, out_dir=None) -> list[RunOutput]:
    return run_experiment(_require(config, "energy-rate-sweep"), out_dir)


def run_single_eval(config: ExperimentConfig, out_dir=None) -> list[RunOutput]:
    """Evaluate ``learner.initial_theta`` (no training) against greedy and the optimum."""
    return run_experiment(_require(config, "single-eval"), out_dir)
