import numpy as np
import pytest

from bciqoe.eeg import EegSegment
from bciqoe.env import QoEEnv, UserStream, frozen_cpu
from bciqoe.wireless import NetworkParams


def synthetic_segments(user, n_segments, n_channels=8, width=8, n_classes=4, seed=0):
    """Class-separable toy windows: class c lights up channel block c."""
    rng = np.random.default_rng(seed)
    segs = []
    for i in range(n_segments):
        label = i % n_classes
        window = 0.1 * rng.standard_normal((n_channels, width))
        window[label * (n_channels // n_classes)] += 2.0
        segs.append(EegSegment(user, i, window, label=label))
    return segs


def make_tiny_env(
    k=2,
    n_segments=24,
    z=1e9,
    m_blocks=4,
    p_max=0.1,
    frozen=True,
    eta1=1.0,
    eta2=1.0,
    n_channels=8,
    width=8,
    corruption_mode="analytical",
):
    params = NetworkParams(z=z, M=m_blocks, N=4, P_max=p_max)
    streams = [
        UserStream(synthetic_segments(f"u{j}", n_segments, n_channels, width, seed=j))
        for j in range(k)
    ]
    kwargs = {}
    if frozen:
        kwargs = {
            "channel_mode": "frozen",
            "h_frozen": np.linspace(1.0, 1.5, k),
            "cpu": frozen_cpu([0.4, 0.5, 0.6, 0.7]),
        }
    return QoEEnv(
        params, streams, eta1=eta1, eta2=eta2, corruption_mode=corruption_mode, **kwargs
    )


@pytest.fixture
def tiny_env_factory():
    return make_tiny_env
