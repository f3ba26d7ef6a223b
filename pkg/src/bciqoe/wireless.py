"""Radio and compute model for the edge-served VR/BCI loop.

Closed forms implemented here:

  uplink rate      r_U = sum_m B_U * rho_m * log2(1 + p*h / (I_m + B_U*N0))
  uplink PER       eps = sum_m rho_m * (1 - exp(-z*sigma_U2 / (p*h))), clamped to [0,1]
  downlink rate    r_D = B_D * log2(1 + P_B*h / (I_D + B_D*N0))
  downlink PER     eps_D = 1 - exp(-z*sigma_D2 / (P_B*h))
  render delay     d = 1 / (tau * u * upsilon)
  round trip       D = l_U/r_U + d + l_D/r_D

The render-delay load factor enters multiplicatively exactly as above, so a
higher measured load shortens the delay; the alternate reading that uses the
free fraction (1 - u) instead is available via ``load_mode="available"``.

All functions are pure; randomness always comes in through an explicit
numpy Generator.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .base import check_rng


class StarvedUserError(ValueError):
    """A user was allocated no compute share, so render delay is unbounded."""


class UnreachableUserError(ValueError):
    """A nonzero payload has to cross a link whose rate is zero."""


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=np.float64) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=np.float64)) + 30.0


@dataclass
class NetworkParams:
    """Radio/compute constants; powers in W, bandwidths in Hz, delays in s.

    ``z`` (the waterfall PER threshold) has no published value and must be
    supplied explicitly, either hand-picked or from ``harness.calibrate_z``.
    """

    z: float
    M: int = 10                      # uplink resource blocks
    B_U: float = 1e6                 # Hz per uplink block
    B_D: float = 20e6                # downlink bandwidth, Hz
    N0: float = dbm_to_watts(-174.0)  # noise PSD, W/Hz
    I_m: float = dbm_to_watts(-10.0)  # uplink interference, W
    I_D: float = dbm_to_watts(-10.0)  # downlink interference, W
    P_B: float = 1.0                 # edge-server transmit power, W
    P_max: float = dbm_to_watts(20.0)  # headset power ceiling, W
    upsilon: float = 2.3e9           # CPU capacity, cycles/s
    D_max: float = 0.01              # round-trip delay budget, s
    l_U: float = 16 * 64 * 16.0      # uplink bits per EEG window (W*J*16-bit)
    l_D: float = 1e6                 # downlink bits per pre-rendered frame
    N: int = 8                       # CPU count at the edge server
    sigma_U2: float = None           # uplink noise power, W; default B_U*N0
    sigma_D2: float = None           # downlink noise power, W; default B_D*N0
    load_mode: str = "literal"       # "literal" uses u, "available" uses 1-u

    def __post_init__(self):
        if self.sigma_U2 is None:
            self.sigma_U2 = self.B_U * self.N0
        if self.sigma_D2 is None:
            self.sigma_D2 = self.B_D * self.N0
        for name in ("z", "B_U", "B_D", "N0", "P_B", "P_max", "upsilon",
                     "D_max", "sigma_U2", "sigma_D2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"NetworkParams.{name} must be > 0")
        for name in ("I_m", "I_D", "l_U", "l_D"):
            if getattr(self, name) < 0:
                raise ValueError(f"NetworkParams.{name} must be >= 0")
        if self.M < 1 or self.N < 1:
            raise ValueError("NetworkParams.M and N must be >= 1")
        if self.load_mode not in ("literal", "available"):
            raise ValueError(f"unknown load_mode {self.load_mode!r}")


def sample_channel(rng, n_users, fading_scale=1.0):
    """I.i.d. channel power gains: Rayleigh amplitude => exponential power."""
    if not fading_scale > 0:
        raise ValueError("fading_scale must be > 0")
    return check_rng(rng).exponential(fading_scale, size=n_users)


def uplink_rate(rho_k, p_k, h_k, params):
    """Achievable uplink rate in bits/s for one user.

    rho_k: {0,1} indicator per resource block (length M).
    """
    rho_k = np.asarray(rho_k)
    if rho_k.shape != (params.M,):
        raise ValueError(f"rho_k must have length M={params.M}")
    if p_k < 0:
        raise ValueError("transmit power must be >= 0")
    if p_k > params.P_max * (1 + 1e-12):
        raise ValueError(f"transmit power {p_k} exceeds P_max={params.P_max}")
    snr = p_k * h_k / (params.I_m + params.B_U * params.N0)
    return float(rho_k.sum()) * params.B_U * np.log2(1.0 + snr)


def downlink_rate(h_k, params):
    """Broadcast downlink rate in bits/s for one user."""
    if h_k < 0:
        raise ValueError("channel gain must be >= 0")
    snr = params.P_B * h_k / (params.I_D + params.B_D * params.N0)
    return params.B_D * np.log2(1.0 + snr)


def uplink_per(rho_k, p_k, h_k, params):
    """Uplink packet error probability, summed over assigned blocks.

    The per-block sum can exceed 1 when a user holds several blocks, so the
    result is clamped to [0, 1] to stay a probability. An assigned block
    with zero received power is certain loss.
    """
    rho_k = np.asarray(rho_k)
    n_blocks = float(rho_k.sum())
    if n_blocks == 0:
        return 0.0
    received = p_k * h_k
    if received <= 0:
        return 1.0
    per_block = 1.0 - np.exp(-params.z * params.sigma_U2 / received)
    return float(min(1.0, n_blocks * per_block))


def downlink_per(h_k, params):
    """Downlink packet error probability; a dead channel is certain loss."""
    received = params.P_B * h_k
    if received <= 0:
        return 1.0
    return float(1.0 - np.exp(-params.z * params.sigma_D2 / received))


def processing_delay(tau_k, u_n, params):
    """Pre-render delay at the edge server for one user, in seconds."""
    if tau_k <= 0:
        raise StarvedUserError(f"compute share tau={tau_k} leaves the user unserved")
    if not 0 < u_n < 1:
        raise ValueError(f"CPU load u={u_n} outside (0, 1)")
    load = u_n if params.load_mode == "literal" else 1.0 - u_n
    return 1.0 / (tau_k * load * params.upsilon)


def round_trip_delay(l_u, r_u, d, l_d, r_d):
    """Uplink transfer + render + downlink transfer, in seconds."""
    for payload, rate, link in ((l_u, r_u, "uplink"), (l_d, r_d, "downlink")):
        if payload > 0 and rate <= 0:
            raise UnreachableUserError(f"{link} rate is zero with {payload} bits pending")
    total = d
    if l_u > 0:
        total += l_u / r_u
    if l_d > 0:
        total += l_d / r_d
    return total


@dataclass
class CpuLoadWalk:
    """Reflected random walk over per-CPU load fractions.

    Stands in for a measured render-load trace: each step adds drift plus
    Gaussian noise and reflects at the [u_lo, u_hi] walls, so loads stay
    inside a strict sub-interval of (0, 1).
    """

    n_cpus: int
    u_lo: float = 0.2
    u_hi: float = 0.8
    drift: float = 0.0
    sigma: float = 0.02
    start: np.ndarray = None

    def __post_init__(self):
        if not 0.0 < self.u_lo < self.u_hi < 1.0:
            raise ValueError("need 0 < u_lo < u_hi < 1")
        if self.start is None:
            self.start = np.full(self.n_cpus, 0.5 * (self.u_lo + self.u_hi))
        self.u = np.asarray(self.start, dtype=np.float64).copy()
        if self.u.shape != (self.n_cpus,) or np.any(self.u < self.u_lo) or np.any(self.u > self.u_hi):
            raise ValueError("start loads must be N values inside [u_lo, u_hi]")

    def reset(self):
        self.u = np.asarray(self.start, dtype=np.float64).copy()
        return self.u.copy()

    def step(self, rng):
        nxt = self.u + self.drift + self.sigma * check_rng(rng).standard_normal(self.n_cpus)
        out = (nxt < self.u_lo) | (nxt > self.u_hi)
        if np.any(out):
            # reflect into [u_lo, u_hi]: triangle-fold, exact for any overshoot
            span = self.u_hi - self.u_lo
            folded = self.u_lo + span - np.abs(np.mod(nxt - self.u_lo, 2.0 * span) - span)
            nxt = np.where(out, folded, nxt)
        self.u = nxt
        return self.u.copy()


@dataclass
class CpuLoadTrace:
    """Replays a recorded CPU-load trace (CSV columns: t,u_1,...,u_N)."""

    rows: np.ndarray
    loop: bool = True
    _cursor: int = field(default=0, repr=False)

    @classmethod
    def from_csv(cls, path, loop=True):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[0].strip() != "t":
                raise ValueError(f"{path}: expected header 't,u_1,...,u_N'")
            rows = [[float(v) for v in row[1:]] for row in reader if row]
        arr = np.asarray(rows, dtype=np.float64)
        if arr.size == 0:
            raise ValueError(f"{path}: trace has no data rows")
        if np.any(arr <= 0) or np.any(arr >= 1):
            raise ValueError(f"{path}: load values must lie strictly in (0, 1)")
        return cls(rows=arr, loop=loop)

    @property
    def n_cpus(self):
        return self.rows.shape[1]

    def reset(self):
        self._cursor = 0
        return self.step(None)

    def step(self, rng=None):
        if self._cursor >= len(self.rows):
            if not self.loop:
                raise IndexError("CPU trace exhausted and looping is disabled")
            self._cursor = 0
        row = self.rows[self._cursor].copy()
        self._cursor += 1
        return row
