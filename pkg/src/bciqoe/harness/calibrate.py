"""Calibration of the waterfall PER threshold z.

z has no published value, so it is fitted per experiment: pick z so that a
user holding an even share of the blocks at the LOW end of the headset
power sweep sees a packet error rate of ``target_eps``, which makes the
PER span roughly [~0, target_eps] across the sweep and reproduces the
low-power accuracy collapse.
"""

from __future__ import annotations

import math

import numpy as np

from ..wireless import dbm_to_watts


def calibrate_z(
    sigma_u2,
    p_lo_w,
    blocks_per_user,
    target_eps=0.5,
    h_mean=1.0,
):
    """Solve n * (1 - exp(-z*sigma^2/(p*h))) = target for z."""
    if not 0 < target_eps < 1:
        raise ValueError("target_eps must lie in (0, 1)")
    per_block = target_eps / blocks_per_user
    if per_block >= 1.0:
        raise ValueError("target unreachable: per-block PER would be >= 1")
    return -math.log(1.0 - per_block) * (p_lo_w * h_mean) / sigma_u2


def calibrate_from_config(cfg, sweep_dbm=(-20.0, -10.0, 0.0, 10.0, 20.0)):
    """z for a config dict-like, plus the per-user PER at each sweep power.

    Uses the low end of the headset power range, even block share for K
    users, and the configured fading scale as the mean channel gain.
    """
    sigma_u2 = cfg["net.sigma_U2_w"]
    if sigma_u2 == "auto":
        sigma_u2 = cfg["net.B_U_hz"] * dbm_to_watts(cfg["net.N0_dbm"])
    blocks = max(1, int(math.ceil(cfg["net.M"] / cfg["env.K"])))
    z = calibrate_z(
        sigma_u2,
        p_lo_w=dbm_to_watts(min(sweep_dbm)),
        blocks_per_user=blocks,
        h_mean=cfg["env.fading_scale"],
    )
    span = []
    for dbm in sweep_dbm:
        p = dbm_to_watts(dbm)
        per_block = 1.0 - math.exp(-z * sigma_u2 / (p * cfg["env.fading_scale"]))
        span.append((dbm, min(1.0, blocks * per_block)))
    return z, span
