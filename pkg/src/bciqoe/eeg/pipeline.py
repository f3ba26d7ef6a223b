"""EEG windowing, normalization, stratified splitting, and link corruption.

A Recording is a multi-channel microvolt time series with labeled event
onsets. It is cut into fixed-width overlapping windows; windows are
z-scored per channel with statistics fitted on the training partition
only, then split per user and per class.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..base import ParamMixin, check_rng


@dataclass
class Recording:
    """One user's continuous EEG: samples is (channels, length) in microvolts."""

    user_id: str
    rate: float
    samples: np.ndarray
    events: list  # (onset_sample, class_label), onsets strictly increasing

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] == 0:
            raise ValueError(f"samples must be (channels, length), got {self.samples.shape}")
        if self.rate <= 0:
            raise ValueError("sample rate must be > 0")
        length = self.samples.shape[1]
        for onset, label in self.events:
            if not 0 <= onset < length:
                raise ValueError(f"event onset {onset} outside recording of length {length}")
            if label < 0:
                raise ValueError(f"negative class label {label}")

    @property
    def n_channels(self):
        return self.samples.shape[0]

    @property
    def length(self):
        return self.samples.shape[1]


@dataclass(frozen=True)
class EegSegment:
    """One labeled window: window is (channels, width)."""

    user_id: str
    index: int  # window position within the source recording
    window: np.ndarray
    label: int
    normalized: bool = False

    @property
    def seg_id(self):
        return (self.user_id, self.index)


@dataclass(frozen=True)
class CorruptedSegment:
    """A segment as received over the uplink.

    ``analytical`` mode keeps the window untouched and carries eps_star for
    expected-value scaling downstream; ``sample-drop`` mode zeroes the whole
    window with probability eps_star.
    """

    segment: EegSegment
    eps_star: float
    mode: str
    dropped: bool = False

    @property
    def window(self):
        if self.dropped:
            return np.zeros_like(self.segment.window)
        return self.segment.window

    @property
    def label(self):
        return self.segment.label

    @property
    def user_id(self):
        return self.segment.user_id


def corrupt(segment, eps_star, mode="analytical", rng=None):
    if not 0.0 <= eps_star <= 1.0:
        raise ValueError(f"eps_star={eps_star} is not a probability")
    if mode == "analytical":
        return CorruptedSegment(segment, eps_star, mode)
    if mode == "sample-drop":
        dropped = bool(check_rng(rng).random() < eps_star)
        return CorruptedSegment(segment, eps_star, mode, dropped)
    raise ValueError(f"unknown corruption mode {mode!r}")


def segment(recording, width=16, overlap=0.5):
    """Cut a recording into overlapping windows.

    stride = width*(1-overlap); window count = floor((L-width)/stride)+1.
    Each window takes the label of the event active at its first sample;
    windows that start before the first event are dropped.
    """
    if width < 2:
        raise ValueError("window width must be >= 2")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must lie in [0, 1)")
    length = recording.length
    if length < width:
        raise ValueError(f"recording length {length} shorter than window {width}")
    stride = int(round(width * (1.0 - overlap)))
    if stride < 1:
        raise ValueError(f"overlap {overlap} leaves a stride below one sample")

    onsets = np.array([onset for onset, _ in recording.events], dtype=np.int64)
    labels = [label for _, label in recording.events]
    segments = []
    for i, start in enumerate(range(0, length - width + 1, stride)):
        active = np.searchsorted(onsets, start, side="right") - 1
        if active < 0:
            continue
        segments.append(
            EegSegment(
                user_id=recording.user_id,
                index=i,
                window=recording.samples[:, start : start + width].copy(),
                label=labels[active],
            )
        )
    return segments


class ZScoreNormalizer(ParamMixin):
    """Per-channel standardization fitted on the training partition only.

    Channels with zero variance are centered but not scaled; their indices
    are kept in ``degenerate_channels_``.
    """

    def __init__(self, eps=1e-12):
        self.eps = eps

    def fit(self, segments):
        if not segments:
            raise ValueError("cannot fit normalizer on an empty partition")
        stacked = np.concatenate([s.window for s in segments], axis=1)
        self.mean_ = stacked.mean(axis=1)
        std = stacked.std(axis=1)
        self.degenerate_channels_ = np.flatnonzero(std <= self.eps)
        self.scale_ = np.where(std <= self.eps, 1.0, std)
        return self

    def transform(self, segments):
        if not hasattr(self, "mean_"):
            raise RuntimeError("normalizer must be fitted before transform")
        out = []
        for s in segments:
            window = (s.window - self.mean_[:, None]) / self.scale_[:, None]
            out.append(replace(s, window=window, normalized=True))
        return out

    def fit_transform(self, segments):
        return self.fit(segments).transform(segments)


def split(segments, ratio=0.8, rng=None):
    """Stratified train/test split, per user and per class.

    Returns (train, test); the union is the input and the partitions are
    disjoint. Strata with fewer than 2 segments cannot be split.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must lie in (0, 1)")
    rng = check_rng(rng)
    strata = {}
    for s in segments:
        strata.setdefault((s.user_id, s.label), []).append(s)
    train, test = [], []
    for key in sorted(strata):
        group = strata[key]
        if len(group) < 2:
            raise ValueError(f"stratum user/class {key} has {len(group)} segment(s); need >= 2")
        order = rng.permutation(len(group))
        n_train = int(round(ratio * len(group)))
        n_train = min(max(n_train, 1), len(group) - 1)  # both sides non-empty
        for pos, idx in enumerate(order):
            (train if pos < n_train else test).append(group[idx])
    return train, test
