"""Energy-aware admission control for a harvesting access point.

Submodules: ``model`` (MDP dynamics), ``policy`` (sigmoid and baseline
policies), ``simulator`` (seeded Monte Carlo), ``learner`` (policy-gradient
training), ``oracle`` (exact chain computations) and ``harness``
(experiments, config files, CLI).
"""
from .model import Action, Event, ModelParams, State
from .policy import ParamVector, SigmoidPolicy, ThresholdPolicy, greedy

__version__ = "0.1.0"

__all__ = ["Action", "Event", "ModelParams", "ParamVector", "SigmoidPolicy", "State",
           "ThresholdPolicy", "greedy"]
