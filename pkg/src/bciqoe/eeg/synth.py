"""Synthetic motor-imagery EEG with per-user response diversity.

Each user gets a profile: a per-channel amplitude signature, and a
per-class oscillation frequency and phase. Users responding to the same
class therefore produce waveforms that differ in amplitude and phase,
and (through frequency jitter) neighbouring classes of different users
can overlap spectrally. Single-user data stays easily separable while a
pooled multi-user classifier faces conflicting evidence, which is the
regime the multi-user experiments need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..base import check_rng
from .pipeline import Recording

DEFAULT_BANDS_HZ = (8.0, 12.0, 18.0, 24.0)


@dataclass(frozen=True)
class UserProfile:
    """Per-user generator parameters.

    channel_sign models electrode polarity: a per-user pattern of +-1
    flips. Within a user it is fixed, so single-user data stays trivially
    separable, while across users it decorrelates channel responses.
    """

    amp_scale: np.ndarray   # (channels,) > 0
    class_phase: np.ndarray  # (classes,) radians
    band_hz: np.ndarray     # (classes,) oscillation frequency per class
    noise_floor: float      # Gaussian noise std, same units as the signal
    rate: float = 160.0
    channel_sign: np.ndarray = None  # (channels,) +-1; default all +1

    def __post_init__(self):
        if np.any(np.asarray(self.amp_scale) <= 0):
            raise ValueError("amplitude scales must be > 0")
        bands = np.asarray(self.band_hz)
        if np.any(bands <= 0) or np.any(bands >= self.rate / 2):
            raise ValueError("band centers must lie in (0, rate/2)")
        if self.noise_floor < 0:
            raise ValueError("noise floor must be >= 0")
        if self.channel_sign is None:
            object.__setattr__(self, "channel_sign", np.ones(len(self.amp_scale)))
        elif not np.all(np.abs(self.channel_sign) == 1):
            raise ValueError("channel signs must be +-1")

    @property
    def n_classes(self):
        return len(self.band_hz)


def sample_profile(
    rng,
    n_channels=64,
    n_classes=4,
    rate=160.0,
    base_bands=DEFAULT_BANDS_HZ,
    band_jitter=2.5,
    band_mode="jitter",
    amp_range=(0.5, 2.0),
    noise_floor=0.5,
    polarity="random",
):
    """Draw a user profile: log-uniform channel amplitudes, uniform phases,
    and per-class oscillation bands.

    band_mode "jitter" keeps the shared class->band ordering and only
    perturbs the centers; "permuted" additionally shuffles which band each
    class uses per user, so the same tone carries different labels for
    different users and a pooled model cannot rely on frequency alone.
    """
    rng = check_rng(rng)
    if n_classes > len(base_bands):
        raise ValueError(f"need a base band per class, got {len(base_bands)} for {n_classes}")
    lo, hi = amp_range
    amp = np.exp(rng.uniform(np.log(lo), np.log(hi), n_channels))
    phase = rng.uniform(0.0, 2.0 * np.pi, n_classes)
    centers = np.asarray(base_bands[:n_classes], dtype=np.float64)
    if band_mode == "permuted":
        centers = centers[rng.permutation(n_classes)]
    elif band_mode != "jitter":
        raise ValueError(f"unknown band_mode {band_mode!r}")
    bands = centers + rng.uniform(-band_jitter, band_jitter, n_classes)
    if polarity == "random":
        signs = rng.choice([-1.0, 1.0], size=n_channels)
    elif polarity == "fixed":
        signs = np.ones(n_channels)
    else:
        raise ValueError(f"unknown polarity mode {polarity!r}")
    return UserProfile(amp, phase, np.clip(bands, 0.5, rate / 2 - 0.5), noise_floor, rate,
                       channel_sign=signs)


def synth_recording(profile, n_epochs, rng, user_id="synthetic", epoch_len=160):
    """Generate a recording of ``n_epochs`` class-conditioned epochs.

    Classes are balanced (cycled in shuffled blocks); one event marks each
    epoch onset.
    """
    if n_epochs <= 0:
        raise ValueError("n_epochs must be > 0")
    rng = check_rng(rng)
    n_classes = profile.n_classes
    n_channels = len(profile.amp_scale)

    labels = np.tile(np.arange(n_classes), n_epochs // n_classes + 1)[:n_epochs]
    labels = labels[rng.permutation(n_epochs)]

    t = np.arange(epoch_len) / profile.rate
    samples = np.empty((n_channels, n_epochs * epoch_len))
    events = []
    gains = profile.amp_scale * profile.channel_sign
    for e, label in enumerate(labels):
        wave = np.sin(2.0 * np.pi * profile.band_hz[label] * t + profile.class_phase[label])
        block = gains[:, None] * wave[None, :]
        if profile.noise_floor > 0:
            block = block + profile.noise_floor * rng.standard_normal((n_channels, epoch_len))
        start = e * epoch_len
        samples[:, start : start + epoch_len] = block
        events.append((start, int(label)))
    return Recording(user_id=user_id, rate=profile.rate, samples=samples, events=events)


def synth_cohort(rng, n_users, n_epochs, profile_kwargs=None, epoch_len=160):
    """Profiles plus recordings for a cohort of users, one rng stream each."""
    rng = check_rng(rng)
    kwargs = profile_kwargs or {}
    profiles, recordings = [], []
    for k in range(n_users):
        user_rng = np.random.default_rng(rng.integers(0, 2**63 - 1))
        profile = sample_profile(user_rng, **kwargs)
        profiles.append(profile)
        recordings.append(
            synth_recording(profile, n_epochs, user_rng, user_id=f"user{k}", epoch_len=epoch_len)
        )
    return profiles, recordings
