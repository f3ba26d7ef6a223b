"""Config parsing, metrics/CDF, calibration, oracle, runs, and sweeps."""

import os

import numpy as np
import pytest

from bciqoe.harness import (
    ConfigError,
    ExperimentConfig,
    MetricsTable,
    SweepSpec,
    calibrate_from_config,
    cdf,
    oracle_best,
    run,
    sweep,
)
from bciqoe.harness.runner import build_dataset, resolve_network_params
from bciqoe.wireless import NetworkParams, dbm_to_watts


def fast_cfg(**overrides):
    cfg = ExperimentConfig(
        {
            "env.K": 3,
            "data.n_epochs": 16,
            "data.n_channels": 8,
            "data.epoch_len": 32,
            "data.window": 8,
            "learner.hidden": (8, 8),
            "learner.conv_channels": (4, 4),
            "learner.minibatch": 5,
            "learner.update_epochs": 1,
            "run.episodes": 2,
            "run.steps_per_episode": 5,
            "run.eval_steps": 5,
        }
    )
    if overrides:
        cfg.update(overrides)
    return cfg


class TestConfig:
    def test_defaults_and_override(self):
        cfg = ExperimentConfig({"net.M": "12", "env.eta1": "0.25"})
        assert cfg["net.M"] == 12
        assert cfg["env.eta1"] == 0.25

    def test_unknown_keys_reported_together(self):
        with pytest.raises(ConfigError) as err:
            ExperimentConfig({"net.bogus": "1", "env.wrong": "2"})
        assert "net.bogus" in str(err.value) and "env.wrong" in str(err.value)

    def test_type_errors_named(self):
        with pytest.raises(ConfigError, match="net.M"):
            ExperimentConfig({"net.M": "many"})

    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("# comment\nnet.P_max_dbm = -5\nlearner.kind = meta\n")
        cfg = ExperimentConfig.from_file(path)
        assert cfg["net.P_max_dbm"] == -5.0
        assert cfg["learner.kind"] == "meta"
        out = tmp_path / "dump.cfg"
        cfg.dump(out)
        again = ExperimentConfig.from_file(out)
        assert again.as_dict() == cfg.as_dict()

    def test_validate_domain(self):
        cfg = ExperimentConfig({"learner.kind": "hybrid"})
        cfg.validate()
        with pytest.raises(ConfigError, match="data.edf_dir"):
            ExperimentConfig({"data.source": "edf-dir"}).validate()

    def test_z_auto_resolves(self):
        cfg = fast_cfg()
        params = resolve_network_params(cfg)
        assert params.z > 0

    def test_tuple_keys(self):
        cfg = ExperimentConfig({"learner.hidden": "32,16"})
        assert cfg["learner.hidden"] == (32, 16)


class TestMetrics:
    def test_append_and_roundtrip(self, tmp_path):
        table = MetricsTable()
        table.append("a", 0, 1, "mean_q", 0.5)
        table.append("a", 0, 2, "mean_q", 0.75)
        path = tmp_path / "m.csv"
        table.to_csv(path)
        again = MetricsTable.from_csv(path)
        assert again.rows == table.rows

    def test_aggregate_order_independent(self):
        t1, t2 = MetricsTable(), MetricsTable()
        vals = [0.1, 0.9, 0.5]
        for i, v in enumerate(vals):
            t1.append("x", i, 0, "acc", v)
        for i, v in enumerate(reversed(vals)):
            t2.append("x", i, 0, "acc", v)
        assert t1.aggregate("acc") == t2.aggregate("acc")

    def test_cdf_constant_series(self):
        values, frac = cdf([2.0] * 10)
        assert values.tolist() == [2.0]
        assert frac.tolist() == [1.0]

    def test_cdf_last_fraction_one(self):
        values, frac = cdf(np.random.default_rng(0).normal(size=257))
        assert frac[-1] == pytest.approx(1.0)
        assert np.all(np.diff(values) > 0)
        assert np.all(np.diff(frac) > 0)

    def test_cdf_uniform_kolmogorov(self):
        draws = np.random.default_rng(1).uniform(size=100_000)
        values, frac = cdf(draws)
        assert np.max(np.abs(frac - values)) < 0.01


class TestCalibration:
    def test_span_covers_target(self):
        cfg = ExperimentConfig()
        z, span = calibrate_from_config(cfg)
        eps_by_dbm = dict(span)
        assert eps_by_dbm[-20.0] == pytest.approx(0.5, rel=1e-9)
        assert eps_by_dbm[20.0] < 0.01
        ordered = [eps for _, eps in sorted(span)]
        assert ordered == sorted(ordered, reverse=True)

    def test_z_positive_sane(self):
        cfg = ExperimentConfig()
        z, _ = calibrate_from_config(cfg)
        sigma = cfg["net.B_U_hz"] * dbm_to_watts(cfg["net.N0_dbm"])
        # PER at -20 dBm with the even block share should be ~0.5 by construction
        blocks = int(np.ceil(cfg["net.M"] / cfg["env.K"]))
        per = blocks * (1 - np.exp(-z * sigma / dbm_to_watts(-20)))
        assert per == pytest.approx(0.5, rel=1e-9)


class TestOracle:
    def params(self, m=2):
        # upsilon/l_U chosen so the compute share genuinely gates the delay
        # budget: each user needs tau >= ~0.35, so only near-even splits pass
        return NetworkParams(z=3e8, M=m, P_max=dbm_to_watts(0.0), N=4,
                             upsilon=1000.0, l_U=2000.0)

    def test_single_user_dominance(self):
        best = oracle_best(self.params(), h=[1.0], u_serving=0.5,
                           power_levels=5, tau_levels=4)
        assert best.blocks == (2,)
        assert best.powers[0] == pytest.approx(self.params().P_max)
        assert best.tau[0] == pytest.approx(1.0)

    def test_symmetric_users_symmetric_optimum(self):
        best = oracle_best(self.params(), h=[1.0, 1.0], u_serving=0.5,
                           power_levels=5, tau_levels=4)
        assert best.blocks == (1, 1)
        assert best.tau[0] == pytest.approx(best.tau[1])

    def test_permutation_equivariance(self):
        h = [0.8, 1.6]
        a = oracle_best(self.params(), h=h, u_serving=0.5, power_levels=5, tau_levels=4)
        b = oracle_best(self.params(), h=h[::-1], u_serving=0.5, power_levels=5, tau_levels=4)
        assert a.mean_q == pytest.approx(b.mean_q, rel=1e-12)
        assert a.blocks == b.blocks[::-1]
        assert a.powers == b.powers[::-1]
        np.testing.assert_allclose(a.tau, b.tau[::-1])

    def test_grid_guard(self):
        with pytest.raises(ValueError):
            oracle_best(NetworkParams(z=1.0, M=10), h=[1.0], u_serving=0.5)


class TestRun:
    def test_zero_episode_run_chance_level(self):
        result = run(fast_cfg(**{"run.episodes": 0}), run_id="t0")
        assert result.history == []
        assert abs(result.test_accuracy - 0.25) < 0.15

    def test_run_deterministic(self):
        a = run(fast_cfg(), run_id="rep")
        b = run(fast_cfg(), run_id="rep")
        assert a.test_accuracy == b.test_accuracy
        assert [r["mean_q"] for r in a.history] == [r["mean_q"] for r in b.history]
        assert a.table.rows == b.table.rows

    def test_metrics_row_count(self):
        cfg = fast_cfg()
        result = run(cfg, run_id="rows")
        history_metrics = 8
        expected = cfg["run.episodes"] * history_metrics + len(result.eval_metrics) + 1
        assert len(result.table) == expected

    def test_outputs_written(self, tmp_path):
        out = tmp_path / "runout"
        result = run(fast_cfg(), run_id="files", out_dir=out)
        for name in ("config.txt", "metrics.csv", "training_curve.csv",
                     "eval_steps.csv", "checkpoint.npz"):
            assert (out / name).exists(), name
        with open(out / "training_curve.csv") as fh:
            header = fh.readline().strip().split(",")
        assert header == ["episode", "mean_Q", "train_acc", "mean_delay",
                          "actor_loss", "critic_loss", "ce_loss"]
        with open(out / "eval_steps.csv") as fh:
            header = fh.readline().strip().split(",")
        assert header == ["t", "k", "D_k", "psi", "phi", "eps_k", "Q_k", "mean_Q"]

    def test_dataset_split_counts(self):
        cfg = fast_cfg()
        ds = build_dataset(cfg)
        assert set(ds.train) == set(ds.test) == {"user0", "user1", "user2"}
        for user in ds.train:
            n_train, n_test = len(ds.train[user]), len(ds.test[user])
            assert n_train / (n_train + n_test) == pytest.approx(0.8, abs=0.05)


class TestSweep:
    def test_value_times_seed_runs(self, tmp_path):
        spec = SweepSpec(key="net.P_max_dbm", values=[0.0, 20.0], seeds=[0, 1])
        table, results = sweep(spec, fast_cfg(), out_dir=tmp_path / "sw")
        assert len(results) == 4
        assert (tmp_path / "sw" / "sweep_metrics.csv").exists()

    def test_swept_key_in_provenance(self):
        spec = SweepSpec(key="env.K", values=[3], seeds=[0])
        table, results = sweep(spec, fast_cfg())
        assert all(r[0].startswith("env.K=3/") for r in table.rows)

    def test_eta_pair_sweep(self):
        spec = SweepSpec(key="eta", values=["0.25:1.0"], seeds=[0])
        table, results = sweep(spec, fast_cfg())
        assert len(results) == 1
        assert results[0].run_id == "eta=0.25:1.0/seed=0"

    def test_invalid_key_rejected(self):
        with pytest.raises(ConfigError):
            SweepSpec(key="net.B_U_hz", values=[1], seeds=[0]).validate()
