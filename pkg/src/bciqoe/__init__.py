"""Wireless edge BCI/VR QoE laboratory.

Simulates the uplink EEG / edge render / downlink VR delivery loop and
trains joint resource-allocation + EEG-classification learners against a
delay-plus-accuracy QoE objective. Subpackages: ``nn`` (autodiff core),
``wireless`` (channel/rate/error/delay closed forms), ``eeg`` (EDF and
synthetic ingestion plus windowing), ``env`` (the step environment),
``learners`` (hybrid/meta and baselines), ``harness`` (runs, sweeps,
metrics, oracle), ``cli``.
"""

from . import eeg, env, harness, learners, nn, wireless
from .env import QoEEnv, ResourceAction, project_action
from .harness import ExperimentConfig, run, sweep
from .learners import HybridLearner, MetaLearner, make_learner
from .wireless import NetworkParams

__version__ = "0.1.0"

__all__ = [
    "nn",
    "wireless",
    "eeg",
    "env",
    "learners",
    "harness",
    "QoEEnv",
    "ResourceAction",
    "project_action",
    "NetworkParams",
    "HybridLearner",
    "MetaLearner",
    "make_learner",
    "ExperimentConfig",
    "run",
    "sweep",
]
