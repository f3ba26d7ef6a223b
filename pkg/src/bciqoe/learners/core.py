"""Joint resource-allocation + classification learners.

HybridLearner: an actor-critic pair over the (channel gains, top CPU
loads) observation drives the resource action through the feasibility
projection, while a 1-D convnet classifies each user's EEG window; the
three networks are updated by their own Adam optimizers (ascent on the
clipped surrogate for the actor, squared QoE-tracking loss for the
critic, error-damped cross-entropy for the classifier).

MetaLearner: identical decision-making path, but the classifier is
updated per user: w sequential SGD steps on that user's minibatches give
a per-user endpoint, and the shared weights move toward the mean endpoint
(first-order meta-update). At test time it is a single shared model.
"""

from __future__ import annotations

import numpy as np

from ..base import ParamMixin, check_rng
from ..env import project_action
from ..nn import layers, optim
from ..nn import tensor as T
from ..nn.checkpoint import restore_module, save_params
from ..nn.tensor import Tape, Tensor, backward
from . import common


class HybridLearner(ParamMixin):
    """Actor-critic resource allocator with a convolutional EEG classifier."""

    kind = "hybrid"

    def __init__(
        self,
        gamma=0.99,
        lam=0.99,
        clip_eps=0.2,
        lr_actor=5e-5,
        lr_critic=5e-4,
        lr_classifier=2e-3,
        hidden=(64, 64),
        conv_channels=(32, 32),
        kernel=3,
        pool=2,
        steps_per_episode=100,
        update_epochs=4,
        minibatch=25,
        classifier_updates="trajectory",
        normalize_advantage=True,
        advantage_exponent="printed",
        log_std_init=-0.5,
        seed=0,
    ):
        self.gamma = gamma
        self.lam = lam
        self.clip_eps = clip_eps
        self.lr_actor = lr_actor
        self.lr_critic = lr_critic
        self.lr_classifier = lr_classifier
        self.hidden = hidden
        self.conv_channels = conv_channels
        self.kernel = kernel
        self.pool = pool
        self.steps_per_episode = steps_per_episode
        self.update_epochs = update_epochs
        self.minibatch = minibatch
        if classifier_updates not in ("trajectory", "epochs"):
            raise ValueError(f"classifier_updates must be 'trajectory' or 'epochs', got {classifier_updates!r}")
        self.classifier_updates = classifier_updates
        self.normalize_advantage = normalize_advantage
        self.advantage_exponent = advantage_exponent
        self.log_std_init = log_std_init
        self.seed = seed

    _uses_convnet = True

    @property
    def _classifier_in_minibatch(self):
        # "trajectory": one full-batch update per collected rollout (the
        # printed cadence); "epochs": ride every actor/critic minibatch
        return self._uses_convnet and self.classifier_updates == "epochs"

    def _action_dim(self, env):
        return 3 * env.n_users

    def _build(self, env, n_classes):
        init_rng, self._run_rng = np.random.default_rng(self.seed).spawn(2)
        probe = env.streams[0].segments[0]
        self.n_classes_ = n_classes
        self.window_shape_ = probe.window.shape
        self.policy_ = layers.GaussianPolicy(
            env.obs_dim, self._action_dim(env), init_rng,
            hidden=self.hidden, log_std_init=self.log_std_init,
        )
        self.critic_ = layers.mlp([env.obs_dim, *self.hidden, 1], init_rng)
        self._opt_actor = optim.Adam(self.policy_.params(), lr=self.lr_actor)
        self._opt_critic = optim.Adam(self.critic_.params(), lr=self.lr_critic)
        if self._uses_convnet:
            j, w = probe.window.shape
            self.classifier_ = layers.EegConvNet(
                j, w, n_classes, init_rng,
                conv_channels=self.conv_channels, kernel=self.kernel, pool=self.pool,
            )
            self._opt_clf = optim.Adam(self.classifier_.params(), lr=self.lr_classifier)
        self.history_ = []

    # --- acting -----------------------------------------------------------

    def _probs_for(self, obs):
        windows = np.stack([seg.window for seg in obs.e_hat])
        return self.classifier_.predict_proba(windows)

    def _policy_step(self, obs, rng):
        raw, logp = self.policy_.sample(obs.vector(), rng)
        return raw, logp, self._to_action(raw, obs)

    def _to_action(self, raw, obs):
        return project_action(
            raw[: 3 * self._env.n_users], self._probs_for(obs), self._env.params, self._env.n_users
        )

    def _mean_step(self, obs):
        """Deterministic action from the policy mean, for evaluation."""
        raw = self.policy_.trunk(Tensor(obs.vector()[None, :])).data[0]
        return self._to_action(raw, obs)

    # --- training ---------------------------------------------------------

    def fit(self, env, episodes, n_classes=4, callback=None):
        """Train for ``episodes`` trajectories of steps_per_episode steps."""
        self._env = env
        self._build(env, n_classes)
        rng = self._run_rng
        obs = env.reset(rng)
        for episode in range(episodes):
            traj, obs = common.collect(env, obs, self._policy_step, self.steps_per_episode, rng)
            traj.values = self.critic_(Tensor(traj.obs)).data.reshape(-1)
            traj.bootstrap = self.critic_(Tensor(obs.vector()[None, :])).item()
            stats = self._update(traj, rng)
            stats.update(
                episode=episode,
                mean_q=float(traj.mean_q.mean()),
                train_acc=float(traj.correct.mean()),
                mean_delay=float(np.mean(np.where(np.isinf(traj.delays), env.params.D_max * 10, traj.delays))),
                psi_rate=float(traj.psi.mean()),
                eps_star_mean=float(traj.eps_star.mean()),
            )
            self.history_.append(stats)
            if callback is not None:
                callback(self, stats)
        return self

    def _update(self, traj, rng):
        deltas = common.td_errors(traj.mean_q, traj.values, traj.bootstrap, self.gamma)
        advantage = common.trajectory_advantage(
            deltas, self.gamma, self.lam,
            exponent=self.advantage_exponent, normalize=self.normalize_advantage,
        )
        actor_losses, critic_losses, ce_losses = [], [], []
        for _ in range(self.update_epochs):
            for mb in common.minibatch_indices(len(traj), self.minibatch, rng):
                actor_losses.append(self._actor_step(traj, mb, advantage))
                critic_losses.append(self._critic_step(traj, mb))
                if self._classifier_in_minibatch:
                    ce_losses.append(self._classifier_step(traj, mb))
        final_ce = self._classifier_finalize(traj, rng)
        if final_ce is not None:
            ce_losses.append(final_ce)
        return {
            "advantage": advantage,
            "actor_loss": float(np.mean(actor_losses)),
            "critic_loss": float(np.mean(critic_losses)),
            "ce_loss": float(np.mean(ce_losses)) if ce_losses else 0.0,
        }

    def _actor_step(self, traj, mb, advantage):
        with Tape() as tape:
            surrogate = common.clipped_surrogate(
                self.policy_, traj.obs[mb], traj.raw_actions[mb],
                traj.log_probs[mb], advantage, self.clip_eps,
            )
            loss = T.neg(surrogate)  # gradient ascent on the surrogate
        self._opt_actor.step(backward(tape, loss))
        return loss.item()

    def _critic_step(self, traj, mb):
        with Tape() as tape:
            loss = common.critic_loss(self.critic_, traj.obs[mb], traj.mean_q[mb])
        self._opt_critic.step(backward(tape, loss))
        return loss.item()

    def _classifier_step(self, traj, mb):
        k = traj.windows.shape[1]
        windows = traj.windows[mb].reshape(-1, *self.window_shape_)
        labels = traj.labels[mb].reshape(-1)
        weights = np.repeat(1.0 - traj.eps_star[mb], k)
        with Tape() as tape:
            loss = common.damped_ce_loss(self.classifier_, windows, labels, weights)
        self._opt_clf.step(backward(tape, loss))
        return loss.item()

    def _classifier_finalize(self, traj, rng):
        if not self._uses_convnet or self.classifier_updates == "epochs":
            return None
        return self._classifier_step(traj, np.arange(len(traj)))

    # --- inference --------------------------------------------------------

    def predict_proba(self, windows):
        return self.classifier_.predict_proba(np.asarray(windows))

    def predict(self, windows):
        return np.argmax(self.predict_proba(windows), axis=1)

    def score(self, segments):
        """Mean argmax-vs-label indicator over labeled segments."""
        windows = np.stack([s.window for s in segments])
        labels = np.array([s.label for s in segments])
        return float(np.mean(self.predict(windows) == labels))

    def evaluate(self, env, rng, n_steps=None, deterministic=True):
        """Frozen-policy rollout; returns aggregate step metrics."""
        rng = check_rng(rng)
        n_steps = n_steps or self.steps_per_episode
        obs = env.reset(rng)
        recs = []
        for _ in range(n_steps):
            if deterministic:
                action = self._mean_step(obs)
            else:
                _, _, action = self._policy_step(obs, rng)
            obs, rec = env.step(action, rng)
            recs.append(rec)
        delays = np.concatenate([r.delay for r in recs])
        return {
            "mean_q": float(np.mean([r.mean_q for r in recs])),
            "psi_rate": float(np.mean([r.psi for r in recs])),
            "phi_mean": float(np.mean([r.phi_ind for r in recs])),
            "correct_rate": float(np.mean([r.correct for r in recs])),
            "eps_star_mean": float(np.mean([r.eps_star for r in recs])),
            "delay_met_rate": float(np.mean(delays <= env.params.D_max)),
            "mean_delay": float(np.mean(delays[np.isfinite(delays)])) if np.any(np.isfinite(delays)) else float("inf"),
        }

    # --- persistence ------------------------------------------------------

    def named_params(self):
        out = dict(self.policy_.named_params("actor."))
        out.update(self.critic_.named_params("critic."))
        if self._uses_convnet:
            out.update(self.classifier_.named_params("classifier."))
        return out

    def save(self, path, extra_meta=None):
        meta = {"kind": self.kind}
        if extra_meta:
            meta.update(extra_meta)
        save_params(path, self.named_params(), extra_meta=meta)

    def load_weights(self, params):
        restore_module(self.policy_, params, "actor.")
        restore_module(self.critic_, params, "critic.")
        if self._uses_convnet:
            restore_module(self.classifier_, params, "classifier.")


class MetaLearner(HybridLearner):
    """Hybrid decision path with a first-order per-user meta classifier update.

    Every episode, each user's windows are split into ``w`` minibatches and
    walked with plain SGD from the shared weights; the shared weights then
    move by meta_lr toward the mean per-user endpoint.
    """

    kind = "meta"
    _classifier_in_minibatch = False

    def __init__(self, w=3, inner_lr=2e-3, meta_lr=1.0, **kwargs):
        self.w = w
        self.inner_lr = inner_lr
        self.meta_lr = meta_lr
        super().__init__(**kwargs)

    def _classifier_finalize(self, traj, rng):
        base = self.classifier_.param_vector()
        n_users = traj.windows.shape[1]
        weights_all = 1.0 - traj.eps_star
        endpoints = np.empty((n_users, base.size))
        losses = []
        for k in range(n_users):
            self.classifier_.load_param_vector(base)
            order = rng.permutation(len(traj))
            for chunk in np.array_split(order, self.w):
                if len(chunk) == 0:
                    continue
                with Tape() as tape:
                    loss = common.damped_ce_loss(
                        self.classifier_,
                        traj.windows[chunk, k],
                        traj.labels[chunk, k],
                        weights_all[chunk],
                    )
                optim.sgd_step(self.classifier_.params(), backward(tape, loss), self.inner_lr)
                losses.append(loss.item())
            endpoints[k] = self.classifier_.param_vector()
        self.classifier_.load_param_vector(base + self.meta_lr * (endpoints - base).mean(axis=0))
        return float(np.mean(losses)) if losses else None
