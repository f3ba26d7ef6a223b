"""Learners: hybrid and meta (the trained contributions) plus baselines."""

from .baselines import RewardOnlyPpoLearner, SvmHybridLearner, VpgLearner
from .core import HybridLearner, MetaLearner
from .svm import LinearSvm

LEARNERS = {
    cls.kind: cls
    for cls in (HybridLearner, MetaLearner, RewardOnlyPpoLearner, VpgLearner, SvmHybridLearner)
}


def make_learner(kind, **params):
    try:
        cls = LEARNERS[kind]
    except KeyError:
        raise ValueError(f"unknown learner kind {kind!r}; choose from {sorted(LEARNERS)}") from None
    return cls(**params)


__all__ = [
    "HybridLearner",
    "MetaLearner",
    "RewardOnlyPpoLearner",
    "VpgLearner",
    "SvmHybridLearner",
    "LinearSvm",
    "LEARNERS",
    "make_learner",
]
