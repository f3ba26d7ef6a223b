"""Brute-force reference optimum for small frozen environments.

Exhaustively enumerates block partitions x per-user power grid x compute
share grid and scores each candidate with the exact per-step QoE under a
fixed channel/CPU state and a fixed per-user classification indicator.
A learner on the same frozen environment can at best match the grid
optimum (up to grid resolution), which anchors the convergence tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .. import wireless

MAX_EVALS = 2_000_000


@dataclass(frozen=True)
class OracleResult:
    mean_q: float
    blocks: tuple
    powers: tuple
    tau: tuple
    evaluations: int


def _block_partitions(m, k):
    """All nonnegative integer k-tuples summing to m."""
    if k == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in _block_partitions(m - first, k - 1):
            yield (first,) + rest


def step_qoe(params, h, u_serving, blocks, powers, tau, indicator, eta1, eta2):
    """Expected per-step mean QoE for one candidate action."""
    k_users = len(h)
    eps = np.empty(k_users)
    psi = np.empty(k_users)
    for k in range(k_users):
        mask = np.zeros(params.M)
        mask[: blocks[k]] = 1.0
        eps[k] = wireless.uplink_per(mask, powers[k], h[k], params)
        try:
            d_k = wireless.processing_delay(tau[k], u_serving, params)
            rtt = wireless.round_trip_delay(
                params.l_U,
                wireless.uplink_rate(mask, powers[k], h[k], params),
                d_k,
                params.l_D,
                wireless.downlink_rate(h[k], params),
            )
            psi[k] = 1.0 if rtt <= params.D_max else 0.0
        except (wireless.StarvedUserError, wireless.UnreachableUserError):
            psi[k] = 0.0
    eps_star = eps.max()
    q = eta1 * psi + eta2 * (1.0 - eps_star) * np.asarray(indicator, dtype=np.float64)
    return float(q.mean())


def oracle_best(
    params,
    h,
    u_serving,
    eta1=1.0,
    eta2=1.0,
    power_levels=9,
    tau_levels=9,
    indicator=None,
):
    """Exhaustive grid search over the feasible action set.

    Guards keep the search at desk scale: K <= 3, M <= 4, grids <= 16.
    """
    h = np.asarray(h, dtype=np.float64)
    k_users = len(h)
    if k_users > 3 or params.M > 4:
        raise ValueError("oracle limited to K <= 3 users and M <= 4 blocks")
    if power_levels > 16 or tau_levels > 16:
        raise ValueError("oracle grids limited to 16 levels")
    if indicator is None:
        indicator = np.ones(k_users)
    indicator = np.asarray(indicator, dtype=np.float64)

    # canonicalize on gain-sorted users so tie-breaking commutes with
    # permutations of the user indices (exact ties in h aside)
    order = np.argsort(h, kind="stable")
    inverse = np.argsort(order)
    h = h[order]
    indicator = indicator[order]

    partitions = list(_block_partitions(params.M, k_users))
    power_grid = np.linspace(0.0, params.P_max, power_levels)
    tau_axis = np.arange(1, tau_levels + 1, dtype=np.float64)
    tau_grid = [
        tuple(np.asarray(combo) / sum(combo))
        for combo in itertools.product(tau_axis, repeat=k_users)
        if abs(sum(combo) - tau_levels) < 1e-9
    ]
    total = len(partitions) * power_levels**k_users * len(tau_grid)
    if total > MAX_EVALS:
        raise ValueError(f"oracle grid too large: {total} evaluations")

    best = None
    evals = 0
    for blocks in partitions:
        for powers in itertools.product(power_grid, repeat=k_users):
            for tau in tau_grid:
                evals += 1
                q = step_qoe(params, h, u_serving, blocks, powers, tau, indicator, eta1, eta2)
                if best is None or q > best.mean_q:
                    best = OracleResult(q, tuple(blocks), tuple(powers), tau, evals)
    unsort = lambda tup: tuple(np.asarray(tup)[inverse].tolist())
    return OracleResult(best.mean_q, unsort(best.blocks), unsort(best.powers),
                        unsort(best.tau), evals)
