"""Step environment for joint resource allocation and EEG classification.

Each step: the controller's raw output is projected onto the feasible set
(block shares -> an exact partition of the M resource blocks, per-user
power in [0, P_max], compute shares on the simplex), the radio/compute
closed forms produce per-user delay and packet-error figures, and the
per-user reward combines a delay-budget indicator with a classification
indicator damped by the worst uplink packet-error rate:

    Q_k = eta1 * [D_k <= D_max] + eta2 * (1 - eps_star) * [argmax probs = label]

Corruption semantics are configurable: "analytical" keeps windows intact
and treats (1 - eps_star) as an expected-value scaling (the default, and
what the losses assume); "sampled" draws the loss Bernoulli per user and
zeroes the delivered window when the packet is lost.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import wireless
from .base import check_rng
from .eeg.pipeline import corrupt

LOG_FLOOR = 1e-12


class DatasetExhaustedError(RuntimeError):
    """A user's segment stream ran out and replay is disabled."""


@dataclass
class Observation:
    h: np.ndarray                 # (K,) channel power gains
    u_top: np.ndarray             # min(3, N) least-loaded CPU loads, ascending
    e_hat: list                   # per-user CorruptedSegment to classify this step

    def vector(self):
        """Flat input for the policy networks: gains then top CPU loads."""
        return np.concatenate([self.h, self.u_top])


@dataclass(frozen=True)
class ResourceAction:
    rho_share: np.ndarray         # (K,) block shares, simplex
    blocks: np.ndarray            # (K,) integer block counts, sums to M
    p: np.ndarray                 # (K,) transmit powers in [0, P_max]
    tau: np.ndarray               # (K,) compute shares, simplex
    phi_out: np.ndarray           # (K, C) predicted class distributions

    def validate(self, params):
        k = len(self.rho_share)
        if abs(self.rho_share.sum() - 1.0) > 1e-9 or np.any(self.rho_share < 0):
            raise ValueError("block shares must form a simplex")
        if abs(self.tau.sum() - 1.0) > 1e-9 or np.any(self.tau < 0):
            raise ValueError("compute shares must form a simplex")
        if self.blocks.sum() != params.M or np.any(self.blocks < 0):
            raise ValueError(f"block counts must partition M={params.M}")
        if np.any(self.p < 0) or np.any(self.p > params.P_max * (1 + 1e-12)):
            raise ValueError("powers must lie in [0, P_max]")
        if self.phi_out.shape[0] != k or np.any(self.phi_out < 0):
            raise ValueError("phi_out must be (K, C) nonnegative rows")
        if np.max(np.abs(self.phi_out.sum(axis=1) - 1.0)) > 1e-6:
            raise ValueError("phi_out rows must sum to 1")
        return self


def _softmax(x):
    e = np.exp(x - np.max(x))
    return e / e.sum()


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def largest_remainder_blocks(shares, m):
    """Round simplex shares to integer block counts summing to m.

    Floors the quotas, then hands leftover blocks to the largest fractional
    remainders; ties break toward the lowest user index.
    """
    quotas = np.asarray(shares) * m
    counts = np.floor(quotas).astype(np.int64)
    leftover = m - counts.sum()
    if leftover > 0:
        remainders = quotas - counts
        order = np.lexsort((np.arange(len(shares)), -remainders))
        counts[order[:leftover]] += 1
    return counts


def project_action(raw, classifier_probs, params, n_users):
    """Map an unconstrained 3K vector onto the feasible action set.

    First K entries -> block shares (softmax), next K -> powers
    (P_max * sigmoid), last K -> compute shares (softmax). Total function:
    any finite input yields a feasible ResourceAction.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (3 * n_users,):
        raise ValueError(f"raw action must have length {3 * n_users}, got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw action contains non-finite values")
    rho_share = _softmax(raw[:n_users])
    p = params.P_max * _sigmoid(raw[n_users : 2 * n_users])
    tau = _softmax(raw[2 * n_users :])
    probs = np.asarray(classifier_probs, dtype=np.float64)
    return ResourceAction(
        rho_share=rho_share,
        blocks=largest_remainder_blocks(rho_share, params.M),
        p=p,
        tau=tau,
        phi_out=probs,
    )


def delay_indicator(delay, d_max):
    """1 when the round trip meets the budget (inclusive), else 0."""
    return 1.0 if delay <= d_max else 0.0


def classification_indicator(probs, label, eps_star):
    """(1 - eps_star) when the argmax matches the label, else 0."""
    probs = np.asarray(probs)
    if abs(probs.sum() - 1.0) > 1e-6:
        raise ValueError("class probabilities must sum to 1")
    return (1.0 - eps_star) * (1.0 if int(np.argmax(probs)) == int(label) else 0.0)


def modified_ce_loss(probs, label, eps_star):
    """Cross-entropy on the true class, damped by the worst uplink PER."""
    probs = np.asarray(probs, dtype=np.float64)
    return -(1.0 - eps_star) * np.log(max(probs[int(label)], LOG_FLOOR))


@dataclass
class QoERecord:
    delay: np.ndarray             # (K,) seconds; inf marks unreachable/starved
    psi: np.ndarray               # (K,) delay indicators
    phi_ind: np.ndarray           # (K,) error-damped classification indicators
    correct: np.ndarray           # (K,) raw argmax-vs-label indicators
    eps: np.ndarray               # (K,) uplink PERs
    eps_star: float               # max over users
    q: np.ndarray                 # (K,) per-user QoE
    mean_q: float
    eta1: float
    eta2: float


@dataclass
class UserStream:
    """Deals one user's segments in order, optionally cycling."""

    segments: list
    replay: bool = True
    _cursor: int = field(default=0, repr=False)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("user stream needs at least one segment")

    def reset(self):
        self._cursor = 0

    def next(self):
        if self._cursor >= len(self.segments):
            if not self.replay:
                raise DatasetExhaustedError("segment stream exhausted and replay is disabled")
            self._cursor = 0
        seg = self.segments[self._cursor]
        self._cursor += 1
        return seg


class QoEEnv:
    """Channel + compute + EEG state machine with a per-step QoE reward.

    One instance per training run; all randomness is drawn from the rng
    passed to reset/step, so (state, action, rng-state) fixes the outcome.
    """

    def __init__(
        self,
        params,
        streams,
        eta1=1.0,
        eta2=1.0,
        corruption_mode="analytical",
        channel_mode="iid",
        fading_scale=1.0,
        h_frozen=None,
        cpu=None,
    ):
        if corruption_mode not in ("analytical", "sampled"):
            raise ValueError(f"unknown corruption mode {corruption_mode!r}")
        if channel_mode not in ("iid", "frozen"):
            raise ValueError(f"unknown channel mode {channel_mode!r}")
        if channel_mode == "frozen" and h_frozen is None:
            raise ValueError("frozen channel mode needs h_frozen")
        self.params = params
        self.streams = list(streams)
        self.n_users = len(self.streams)
        self.eta1 = eta1
        self.eta2 = eta2
        self.corruption_mode = corruption_mode
        self.channel_mode = channel_mode
        self.fading_scale = fading_scale
        self.h_frozen = None if h_frozen is None else np.asarray(h_frozen, dtype=np.float64)
        self.cpu = cpu if cpu is not None else wireless.CpuLoadWalk(n_cpus=params.N)
        self.h = None
        self.u = None
        self._prev_eps_star = 0.0

    @property
    def obs_dim(self):
        return self.n_users + min(3, self.params.N)

    def _draw_channel(self, rng):
        if self.channel_mode == "frozen":
            return self.h_frozen.copy()
        return wireless.sample_channel(rng, self.n_users, self.fading_scale)

    def _u_top(self):
        k = min(3, self.params.N)
        return np.sort(self.u)[:k]

    def _deal(self, rng):
        mode = "analytical" if self.corruption_mode == "analytical" else "sample-drop"
        out = []
        for stream in self.streams:
            seg = stream.next()
            if mode == "analytical":
                out.append(corrupt(seg, self._prev_eps_star, "analytical"))
            else:
                out.append(corrupt(seg, self._prev_eps_star, "sample-drop", rng))
        return out

    def reset(self, rng):
        rng = check_rng(rng)
        self.h = self._draw_channel(rng)
        self.u = self.cpu.reset()
        self._prev_eps_star = 0.0
        for stream in self.streams:
            stream.reset()
        self._dealt = self._deal(rng)
        return Observation(self.h.copy(), self._u_top(), self._dealt)

    def step(self, action, rng):
        """Score ``action`` against the current state, then advance it."""
        rng = check_rng(rng)
        if self.h is None:
            raise RuntimeError("call reset() before step()")
        action.validate(self.params)
        params = self.params
        k_users = self.n_users

        eps = np.empty(k_users)
        r_up = np.empty(k_users)
        block_cursor = 0
        for k in range(k_users):
            rho_mask = np.zeros(params.M)
            rho_mask[block_cursor : block_cursor + int(action.blocks[k])] = 1.0
            block_cursor += int(action.blocks[k])
            r_up[k] = wireless.uplink_rate(rho_mask, action.p[k], self.h[k], params)
            eps[k] = wireless.uplink_per(rho_mask, action.p[k], self.h[k], params)
        eps_star = float(eps.max())

        serving_cpu = self._u_top()[0]  # most-available CPU hosts the renderers
        delay = np.empty(k_users)
        psi = np.empty(k_users)
        for k in range(k_users):
            try:
                d_k = wireless.processing_delay(action.tau[k], serving_cpu, params)
                delay[k] = wireless.round_trip_delay(
                    params.l_U, r_up[k], d_k, params.l_D, wireless.downlink_rate(self.h[k], params)
                )
                psi[k] = delay_indicator(delay[k], params.D_max)
            except (wireless.StarvedUserError, wireless.UnreachableUserError):
                delay[k] = np.inf
                psi[k] = 0.0

        current = self._dealt  # the segments this action's phi_out classified
        correct = np.empty(k_users)
        phi_ind = np.empty(k_users)
        for k in range(k_users):
            label = current[k].label
            correct[k] = 1.0 if int(np.argmax(action.phi_out[k])) == int(label) else 0.0
            if self.corruption_mode == "analytical":
                phi_ind[k] = (1.0 - eps_star) * correct[k]
            else:
                delivered = rng.random() >= eps_star
                phi_ind[k] = correct[k] if delivered else 0.0

        q = self.eta1 * psi + self.eta2 * phi_ind
        record = QoERecord(
            delay=delay,
            psi=psi,
            phi_ind=phi_ind,
            correct=correct,
            eps=eps,
            eps_star=eps_star,
            q=q,
            mean_q=float(q.mean()),
            eta1=self.eta1,
            eta2=self.eta2,
        )

        self._prev_eps_star = eps_star
        self.h = self._draw_channel(rng)
        self.u = self.cpu.step(rng)
        self._dealt = self._deal(rng)
        return Observation(self.h.copy(), self._u_top(), self._dealt), record


def frozen_cpu(u_values):
    """A degenerate CPU process pinned at the given loads."""
    u = np.asarray(u_values, dtype=np.float64)
    return wireless.CpuLoadWalk(n_cpus=len(u), drift=0.0, sigma=0.0, start=u,
                                u_lo=min(0.01, u.min() / 2), u_hi=max(0.99, (1 + u.max()) / 2))
