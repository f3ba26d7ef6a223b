"""Comparison learners.

RewardOnlyPpoLearner / VpgLearner: the actor's output is widened by K*C
class logits, so classification is decided from the radio/compute
observation alone and trained purely through the QoE reward. They never
see the EEG windows, which is why their accuracy stays near chance.

SvmHybridLearner: keeps the hybrid actor/critic but swaps the convnet
classifier for a linear SVM refitted every episode on a cumulative buffer
of every segment seen so far.
"""

from __future__ import annotations

import numpy as np

from ..env import project_action
from ..nn import tensor as T
from ..nn.tensor import Tape, Tensor, backward
from . import common
from .core import HybridLearner
from .svm import LinearSvm


class RewardOnlyPpoLearner(HybridLearner):
    """Clipped-surrogate actor-critic whose action carries the class logits."""

    kind = "ppo"
    _classifier_in_minibatch = False
    _uses_convnet = False

    def __init__(self, n_classes=4, **kwargs):
        self.n_classes = n_classes
        super().__init__(**kwargs)

    def _action_dim(self, env):
        return 3 * env.n_users + env.n_users * self.n_classes

    def _tail_probs(self, raw):
        k = self._env.n_users
        logits = raw[3 * k :].reshape(k, self.n_classes)
        e = np.exp(logits - logits.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)

    def _to_action(self, raw, obs):
        k = self._env.n_users
        return project_action(raw[: 3 * k], self._tail_probs(raw), self._env.params, k)

    def predict_proba(self, windows):
        raise NotImplementedError(
            "reward-only learners classify from radio state during the rollout"
        )

    predict = predict_proba


class VpgLearner(RewardOnlyPpoLearner):
    """Plain policy gradient: discounted return minus the critic baseline,
    one full-batch actor step per trajectory, no clipping, no advantage
    weighting; the critic trains exactly like the hybrid's."""

    kind = "vpg"

    def _update(self, traj, rng):
        returns = common.discounted_returns(traj.mean_q, self.gamma)
        adv = returns - traj.values
        with Tape() as tape:
            logp = self.policy_.log_prob(traj.obs, traj.raw_actions)
            loss = T.neg(T.tmean(T.mul(logp, Tensor(adv))))
        self._opt_actor.step(backward(tape, loss))
        critic_losses = []
        for _ in range(self.update_epochs):
            for mb in common.minibatch_indices(len(traj), self.minibatch, rng):
                critic_losses.append(self._critic_step(traj, mb))
        return {
            "advantage": float(adv.mean()),
            "actor_loss": loss.item(),
            "critic_loss": float(np.mean(critic_losses)),
            "ce_loss": 0.0,
        }


class SvmHybridLearner(HybridLearner):
    """Hybrid decision path with a cumulative-buffer linear SVM classifier."""

    kind = "svm"
    _classifier_in_minibatch = False
    _uses_convnet = False

    def __init__(self, n_classes=4, svm_lr=0.05, svm_reg=1e-4, svm_epochs=2, **kwargs):
        self.n_classes = n_classes
        self.svm_lr = svm_lr
        self.svm_reg = svm_reg
        self.svm_epochs = svm_epochs
        super().__init__(**kwargs)

    def _build(self, env, n_classes):
        super()._build(env, n_classes)
        self.svm_ = LinearSvm(
            n_classes=n_classes, lr=self.svm_lr, reg=self.svm_reg,
            epochs=self.svm_epochs, seed=self.seed,
        )
        self._buffer = {}  # window bytes -> (features, label); dedups replays

    def _probs_for(self, obs):
        feats = np.stack([seg.window.reshape(-1) for seg in obs.e_hat])
        return self.svm_.predict_proba(feats)

    def _classifier_finalize(self, traj, rng):
        n_steps, n_users = traj.labels.shape
        for o in range(n_steps):
            for k in range(n_users):
                feats = traj.windows[o, k].reshape(-1)
                self._buffer[feats.tobytes()] = (feats, int(traj.labels[o, k]))
        X = np.stack([f for f, _ in self._buffer.values()])
        y = np.array([lab for _, lab in self._buffer.values()])
        self.svm_.fit(X, y)
        return None

    @property
    def buffer_size(self):
        return len(self._buffer)

    def predict_proba(self, windows):
        feats = np.asarray(windows).reshape(len(windows), -1)
        return self.svm_.predict_proba(feats)

    def predict(self, windows):
        feats = np.asarray(windows).reshape(len(windows), -1)
        return self.svm_.predict(feats)
