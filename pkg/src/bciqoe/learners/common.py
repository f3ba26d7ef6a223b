"""Shared training machinery: trajectories, the scalar advantage, the
clipped surrogate, and the error-damped classification loss.

The advantage estimator is the whole-trajectory scalar

    A = sum_{o=1..O} (gamma*lambda)^o * delta_o,
    delta_o = mean_k Q_{k,o} + gamma * V(obs_{o+1}) - V(obs_o),

with the exponent starting at 1 exactly as the update rule is stated; set
``exponent="standard"`` for the conventional o-1 start. The critic
regresses V(obs_o) directly onto mean_k Q_{k,o}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import tensor as T
from ..nn.tensor import Tensor


@dataclass
class Trajectory:
    """One on-policy rollout of O steps."""

    obs: np.ndarray          # (O, obs_dim)
    raw_actions: np.ndarray  # (O, act_dim) pre-projection policy samples
    log_probs: np.ndarray    # (O,) sampling-policy log densities
    mean_q: np.ndarray       # (O,) per-step mean user QoE
    eps_star: np.ndarray     # (O,) worst uplink PER per step
    windows: np.ndarray      # (O, K, J, W) classifier inputs as received
    labels: np.ndarray       # (O, K) true classes
    correct: np.ndarray      # (O, K) argmax-vs-label indicators
    psi: np.ndarray          # (O, K) delay indicators
    delays: np.ndarray       # (O, K) round-trip delays (inf if unreachable)
    values: np.ndarray = None      # (O,) critic values, filled by the learner
    bootstrap: float = 0.0         # V(obs_{O+1})

    def __len__(self):
        return self.obs.shape[0]


def collect(env, obs, policy_step, n_steps, rng):
    """Roll the policy for n_steps from ``obs``.

    ``policy_step(obs, rng) -> (raw, log_prob, ResourceAction)`` is supplied
    by the learner. Returns (Trajectory, next_obs).
    """
    obs_rows, raw_rows, logp_rows = [], [], []
    meanq, eps_rows, win_rows, label_rows = [], [], [], []
    correct_rows, psi_rows, delay_rows = [], [], []
    for _ in range(n_steps):
        raw, logp, action = policy_step(obs, rng)
        windows = np.stack([seg.window for seg in obs.e_hat])
        labels = np.array([seg.label for seg in obs.e_hat], dtype=np.int64)
        nxt, rec = env.step(action, rng)
        obs_rows.append(obs.vector())
        raw_rows.append(raw)
        logp_rows.append(logp)
        meanq.append(rec.mean_q)
        eps_rows.append(rec.eps_star)
        win_rows.append(windows)
        label_rows.append(labels)
        correct_rows.append(rec.correct)
        psi_rows.append(rec.psi)
        delay_rows.append(rec.delay)
        obs = nxt
    traj = Trajectory(
        obs=np.asarray(obs_rows),
        raw_actions=np.asarray(raw_rows),
        log_probs=np.asarray(logp_rows),
        mean_q=np.asarray(meanq),
        eps_star=np.asarray(eps_rows),
        windows=np.asarray(win_rows),
        labels=np.asarray(label_rows),
        correct=np.asarray(correct_rows),
        psi=np.asarray(psi_rows),
        delays=np.asarray(delay_rows),
    )
    return traj, obs


def td_errors(mean_q, values, bootstrap, gamma):
    next_values = np.append(values[1:], bootstrap)
    return mean_q + gamma * next_values - values


def trajectory_advantage(deltas, gamma, lam, exponent="printed", normalize=False):
    """Scalar advantage over the whole trajectory.

    With normalize=True the TD errors are standardized first, which keeps
    the scalar's scale comparable across reward scales.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    if normalize:
        std = deltas.std()
        deltas = (deltas - deltas.mean()) / (std + 1e-8)
    start = {"printed": 1, "standard": 0}[exponent]
    weights = (gamma * lam) ** np.arange(start, start + len(deltas))
    return float(weights @ deltas)


def clip_reference(eps, advantage):
    """Pessimistic clipped value: (1+eps)*A for A >= 0, else (1-eps)*A."""
    return (1.0 + eps) * advantage if advantage >= 0 else (1.0 - eps) * advantage


def clipped_surrogate(policy, obs_mb, act_mb, logp_old_mb, advantage, clip_eps):
    """min(ratio * A, clip_reference) averaged over the minibatch (Tensor)."""
    logp_new = policy.log_prob(obs_mb, act_mb)
    ratio = T.exp(T.sub(logp_new, Tensor(logp_old_mb)))
    capped = np.full(len(logp_old_mb), clip_reference(clip_eps, advantage))
    return T.tmean(T.minimum(T.mul(ratio, advantage), Tensor(capped)))


def critic_loss(critic, obs_mb, mean_q_mb):
    """Mean squared gap between V(obs) and the per-step mean QoE (Tensor)."""
    v = critic(Tensor(obs_mb))
    diff = T.sub(T.reshape(v, (-1,)), Tensor(mean_q_mb))
    return T.tmean(T.mul(diff, diff))


def damped_ce_loss(classifier, windows, labels, weights):
    """Cross-entropy on the true class, scaled per sample by (1 - eps_star).

    windows: (B, J, W); labels: (B,); weights: (B,) the (1-eps) factors.
    Returns the mean loss as a Tensor.
    """
    logits = classifier(Tensor(windows))
    logp = T.log_softmax(logits)
    picked = T.gather_rows(logp, labels)
    return T.neg(T.tmean(T.mul(picked, Tensor(weights))))


def discounted_returns(rewards, gamma):
    out = np.empty_like(rewards)
    acc = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


def minibatch_indices(n, size, rng):
    order = rng.permutation(n)
    return [order[i : i + size] for i in range(0, n, size)]
