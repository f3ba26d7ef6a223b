"""Closed-form radio/compute expressions against hand-computed values."""

import math

import numpy as np
import pytest

from bciqoe import wireless
from bciqoe.wireless import (
    CpuLoadTrace,
    CpuLoadWalk,
    NetworkParams,
    StarvedUserError,
    UnreachableUserError,
    dbm_to_watts,
    watts_to_dbm,
)


@pytest.fixture
def params():
    return NetworkParams(z=1.0)


def snr_one_power(params, uplink=True):
    """Transmit power that makes the link SNR exactly 1 for h=1."""
    if uplink:
        return params.I_m + params.B_U * params.N0
    return params.I_D + params.B_D * params.N0


class TestConversions:
    def test_known_points(self):
        assert dbm_to_watts(30.0) == pytest.approx(1.0)
        assert dbm_to_watts(-10.0) == pytest.approx(1e-4)
        assert dbm_to_watts(20.0) == pytest.approx(0.1)

    def test_roundtrip(self):
        vals = np.linspace(-40, 30, 57)
        back = watts_to_dbm(dbm_to_watts(vals))
        np.testing.assert_allclose(back, vals, rtol=1e-12)


class TestUplinkRate:
    def test_single_block_snr_one(self, params):
        rho = np.zeros(params.M)
        rho[0] = 1.0
        p = snr_one_power(params)  # p*h/(I_m + B_U*N0) == 1
        assert wireless.uplink_rate(rho, p, 1.0, params) == pytest.approx(1e6)

    def test_no_blocks_zero(self, params):
        assert wireless.uplink_rate(np.zeros(params.M), 0.01, 1.0, params) == 0.0

    def test_two_blocks_snr_three(self, params):
        rho = np.zeros(params.M)
        rho[:2] = 1.0
        p = 3.0 * snr_one_power(params)
        assert wireless.uplink_rate(rho, p, 1.0, params) == pytest.approx(4e6)

    def test_negative_power_rejected(self, params):
        with pytest.raises(ValueError):
            wireless.uplink_rate(np.ones(params.M), -1e-3, 1.0, params)

    def test_monotone_in_power_and_gain(self, params):
        rho = np.ones(params.M)
        rng = np.random.default_rng(0)
        powers = np.sort(rng.uniform(0, params.P_max, 50))
        rates = [wireless.uplink_rate(rho, p, 0.7, params) for p in powers]
        assert all(b >= a for a, b in zip(rates, rates[1:]))
        gains = np.sort(rng.uniform(0, 5.0, 50))
        rates = [wireless.uplink_rate(rho, 0.01, h, params) for h in gains]
        assert all(b >= a for a, b in zip(rates, rates[1:]))


class TestDownlinkRate:
    def test_zero_gain(self, params):
        assert wireless.downlink_rate(0.0, params) == 0.0

    def test_snr_one(self, params):
        h = snr_one_power(params, uplink=False) / params.P_B
        assert wireless.downlink_rate(h, params) == pytest.approx(2e7)

    def test_monotone_in_gain(self, params):
        gains = np.linspace(0, 3, 100)
        rates = [wireless.downlink_rate(h, params) for h in gains]
        assert all(b >= a for a, b in zip(rates, rates[1:]))


class TestPacketError:
    def one_block(self, params):
        rho = np.zeros(params.M)
        rho[3] = 1.0
        return rho

    def test_half_at_ln2(self, params):
        # z*sigma_U2/(p*h) = ln 2  ->  eps = 1/2
        p = params.z * params.sigma_U2 / math.log(2.0)
        eps = wireless.uplink_per(self.one_block(params), p, 1.0, params)
        assert eps == pytest.approx(0.5, rel=1e-12)

    def test_vanishes_at_high_power(self, params):
        eps = wireless.uplink_per(self.one_block(params), 1e9, 1.0, params)
        assert eps < 1e-12

    def test_unit_exponent(self, params):
        p = params.z * params.sigma_U2
        eps = wireless.uplink_per(self.one_block(params), p, 1.0, params)
        assert eps == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)

    def test_zero_received_power_certain_loss(self, params):
        assert wireless.uplink_per(self.one_block(params), 0.0, 1.0, params) == 1.0
        assert wireless.uplink_per(self.one_block(params), 0.01, 0.0, params) == 1.0

    def test_no_blocks_no_packets(self, params):
        assert wireless.uplink_per(np.zeros(params.M), 0.01, 1.0, params) == 0.0

    def test_multi_block_sum_clamped(self, params):
        p = params.z * params.sigma_U2 / math.log(2.0)  # per-block eps = 0.5
        eps = wireless.uplink_per(np.ones(params.M), p, 1.0, params)
        assert eps == 1.0  # 10 * 0.5 clamped

    def test_downlink_matches_closed_form(self, params):
        h = params.z * params.sigma_D2 / (params.P_B * math.log(2.0))
        assert wireless.downlink_per(h, params) == pytest.approx(0.5, rel=1e-12)
        assert wireless.downlink_per(0.0, params) == 1.0
        assert wireless.downlink_per(1e12, params) < 1e-12

    def test_per_decreasing_in_power_and_gain(self, params):
        rho = self.one_block(params)
        powers = np.linspace(1e-6, 0.1, 200)
        eps = [wireless.uplink_per(rho, p, 1.0, params) for p in powers]
        assert all(b < a for a, b in zip(eps, eps[1:]))
        assert all(0.0 <= e <= 1.0 for e in eps)


class TestDelays:
    def test_processing_delay_limit(self):
        # tau -> 1 and u -> 1 approaches one cycle at full capacity
        params = NetworkParams(z=1.0)
        d = wireless.processing_delay(1.0, 1.0 - 1e-12, params)
        assert d == pytest.approx(1.0 / 2.3e9, rel=1e-9)

    def test_halving_share_doubles_delay(self):
        params = NetworkParams(z=1.0)
        d1 = wireless.processing_delay(0.5, 0.6, params)
        d2 = wireless.processing_delay(0.25, 0.6, params)
        assert d2 == pytest.approx(2.0 * d1)

    def test_worked_example(self):
        params = NetworkParams(z=1.0)
        d = wireless.processing_delay(0.5, 0.6, params)
        assert d == pytest.approx(1.0 / (0.5 * 0.6 * 2.3e9), rel=1e-12)
        assert d == pytest.approx(1.449e-9, rel=1e-3)

    def test_available_mode_inverts_load_effect(self):
        lit = NetworkParams(z=1.0, load_mode="literal")
        avail = NetworkParams(z=1.0, load_mode="available")
        assert wireless.processing_delay(0.5, 0.7, lit) < wireless.processing_delay(0.5, 0.3, lit)
        assert wireless.processing_delay(0.5, 0.7, avail) > wireless.processing_delay(0.5, 0.3, avail)

    def test_starved_user(self):
        params = NetworkParams(z=1.0)
        with pytest.raises(StarvedUserError):
            wireless.processing_delay(0.0, 0.5, params)

    def test_round_trip_sum(self):
        d = wireless.round_trip_delay(1e4, 1e6, 1e-3, 1e5, 2e7)
        assert d == pytest.approx(0.016, rel=1e-12)

    def test_round_trip_zero_payload(self):
        assert wireless.round_trip_delay(0.0, 0.0, 2e-3, 0.0, 0.0) == 2e-3

    def test_round_trip_at_least_processing(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            l_u, l_d = rng.uniform(0, 1e6, 2)
            r_u, r_d = rng.uniform(1e5, 1e8, 2)
            d = rng.uniform(0, 1e-2)
            assert wireless.round_trip_delay(l_u, r_u, d, l_d, r_d) >= d

    def test_unreachable(self):
        with pytest.raises(UnreachableUserError):
            wireless.round_trip_delay(100.0, 0.0, 1e-3, 0.0, 1.0)


class TestChannel:
    def test_monte_carlo_mean(self):
        rng = np.random.default_rng(7)
        draws = wireless.sample_channel(rng, 1_000_000, fading_scale=1.0)
        assert abs(draws.mean() - 1.0) < 0.01

    def test_scale_doubles_mean(self):
        a = wireless.sample_channel(np.random.default_rng(8), 200_000, 1.0).mean()
        b = wireless.sample_channel(np.random.default_rng(8), 200_000, 2.0).mean()
        assert b == pytest.approx(2.0 * a, rel=1e-12)

    def test_support_nonnegative(self):
        draws = wireless.sample_channel(np.random.default_rng(9), 10_000)
        assert np.all(draws >= 0)


class TestCpuLoad:
    def test_zero_noise_zero_drift_fixed(self):
        walk = CpuLoadWalk(n_cpus=3, drift=0.0, sigma=0.0)
        before = walk.u.copy()
        after = walk.step(np.random.default_rng(0))
        np.testing.assert_array_equal(before, after)

    def test_long_run_stays_in_bounds(self):
        walk = CpuLoadWalk(n_cpus=4, u_lo=0.3, u_hi=0.7, sigma=0.05)
        rng = np.random.default_rng(10)
        for _ in range(100_000):
            u = walk.step(rng)
            assert np.all(u >= 0.3) and np.all(u <= 0.7)

    def test_trace_replay_verbatim(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("t,u_1,u_2\n0,0.4,0.5\n1,0.45,0.52\n2,0.5,0.49\n")
        trace = CpuLoadTrace.from_csv(path, loop=False)
        assert trace.n_cpus == 2
        np.testing.assert_allclose(trace.reset(), [0.4, 0.5])
        np.testing.assert_allclose(trace.step(), [0.45, 0.52])
        np.testing.assert_allclose(trace.step(), [0.5, 0.49])
        with pytest.raises(IndexError):
            trace.step()

    def test_trace_rejects_out_of_range(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,u_1\n0,1.5\n")
        with pytest.raises(ValueError):
            CpuLoadTrace.from_csv(path)


class TestParamValidation:
    def test_defaults_computed(self):
        p = NetworkParams(z=2.0)
        assert p.sigma_U2 == pytest.approx(p.B_U * p.N0)
        assert p.sigma_D2 == pytest.approx(p.B_D * p.N0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            NetworkParams(z=0.0)
        with pytest.raises(ValueError):
            NetworkParams(z=1.0, B_U=-5.0)
