"""Dataset assembly, single runs, and sweeps.

A run is fully determined by (config, seed): the dataset stream, network
initialization, environment draws, and update order all derive from seeds
in the config. Outputs: a training-curve CSV, a per-step eval CSV, a
long-format metrics CSV, and a parameter checkpoint.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import wireless
from ..eeg import ZScoreNormalizer, load_edf_directory, segment, split, synth_cohort
from ..env import QoEEnv, UserStream
from ..learners import make_learner
from .calibrate import calibrate_from_config
from .config import ConfigError, ExperimentConfig
from .metrics import MetricsTable

TRAIN_CURVE_HEADER = ["episode", "mean_Q", "train_acc", "mean_delay",
                      "actor_loss", "critic_loss", "ce_loss"]
STEP_LOG_HEADER = ["t", "k", "D_k", "psi", "phi", "eps_k", "Q_k", "mean_Q"]


@dataclass
class Dataset:
    train: dict   # user_id -> [EegSegment]
    test: dict    # user_id -> [EegSegment]
    n_classes: int


@dataclass
class RunResult:
    run_id: str
    config: ExperimentConfig
    learner: object
    z: float
    history: list
    eval_metrics: dict
    test_accuracy: float
    table: MetricsTable
    out_dir: str = None


def resolve_network_params(cfg):
    """NetworkParams from config, calibrating z when set to 'auto'."""
    z = cfg["net.z"]
    if z == "auto":
        z, _ = calibrate_from_config(cfg)
    sigma_u2 = cfg["net.sigma_U2_w"]
    sigma_d2 = cfg["net.sigma_D2_w"]
    return wireless.NetworkParams(
        z=float(z),
        M=cfg["net.M"],
        B_U=cfg["net.B_U_hz"],
        B_D=cfg["net.B_D_hz"],
        N0=wireless.dbm_to_watts(cfg["net.N0_dbm"]),
        I_m=wireless.dbm_to_watts(cfg["net.I_m_dbm"]),
        I_D=wireless.dbm_to_watts(cfg["net.I_D_dbm"]),
        P_B=cfg["net.P_B_w"],
        P_max=wireless.dbm_to_watts(cfg["net.P_max_dbm"]),
        upsilon=cfg["net.upsilon_hz"],
        D_max=cfg["net.D_max_s"],
        l_U=cfg["net.l_U_bits"],
        l_D=cfg["net.l_D_bits"],
        N=cfg["net.N_cpus"],
        sigma_U2=None if sigma_u2 == "auto" else float(sigma_u2),
        sigma_D2=None if sigma_d2 == "auto" else float(sigma_d2),
        load_mode=cfg["net.load_mode"],
    )


def build_dataset(cfg):
    """Per-user windowed, normalized, stratified segments."""
    k = cfg["env.K"]
    rng = np.random.default_rng(cfg["data.seed"])
    if cfg["data.source"] == "synthetic":
        _, recordings = synth_cohort(
            rng,
            n_users=k,
            n_epochs=cfg["data.n_epochs"],
            epoch_len=cfg["data.epoch_len"],
            profile_kwargs={
                "n_channels": cfg["data.n_channels"],
                "n_classes": cfg["data.n_classes"],
                "band_jitter": cfg["data.band_jitter"],
                "band_mode": cfg["data.band_mode"],
                "polarity": cfg["data.polarity"],
                "amp_range": (cfg["data.amp_lo"], cfg["data.amp_hi"]),
                "noise_floor": cfg["data.noise_floor"],
            },
        )
        per_user = {rec.user_id: [rec] for rec in recordings}
    else:
        per_user = load_edf_directory(cfg["data.edf_dir"], max_users=k)
        users = sorted(per_user)[:k]
        if len(users) < k:
            raise ConfigError(f"need {k} users, found {len(users)} under {cfg['data.edf_dir']}")
        per_user = {u: per_user[u] for u in users}

    train, test = {}, {}
    all_train = []
    staged = {}
    for user, recs in per_user.items():
        segs = []
        for rec in recs:
            segs.extend(segment(rec, width=cfg["data.window"], overlap=cfg["data.overlap"]))
        tr, te = split(segs, ratio=cfg["data.split_ratio"], rng=rng)
        staged[user] = (tr, te)
        all_train.extend(tr)
    # normalization statistics come from the pooled training partition only
    norm = ZScoreNormalizer().fit(all_train)
    for user, (tr, te) in staged.items():
        tr = norm.transform(tr)
        # split returns strata grouped by class; interleave so a stream
        # never deals long single-class runs into one trajectory
        order = rng.permutation(len(tr))
        train[user] = [tr[i] for i in order]
        test[user] = norm.transform(te)
    return Dataset(train=train, test=test, n_classes=cfg["data.n_classes"])


def build_env(cfg, dataset, params, partition="train"):
    segments = dataset.train if partition == "train" else dataset.test
    streams = [UserStream(segments[user]) for user in sorted(segments)]
    if cfg["env.cpu_mode"] == "trace":
        cpu = wireless.CpuLoadTrace.from_csv(cfg["env.cpu_trace"])
    else:
        cpu = wireless.CpuLoadWalk(
            n_cpus=cfg["net.N_cpus"],
            u_lo=cfg["env.cpu_u_lo"],
            u_hi=cfg["env.cpu_u_hi"],
            drift=cfg["env.cpu_drift"],
            sigma=cfg["env.cpu_sigma"],
        )
    return QoEEnv(
        params,
        streams,
        eta1=cfg["env.eta1"],
        eta2=cfg["env.eta2"],
        corruption_mode=cfg["env.corruption_mode"],
        channel_mode=cfg["env.channel_mode"],
        fading_scale=cfg["env.fading_scale"],
        cpu=cpu,
    )


def build_learner(cfg):
    kind = cfg["learner.kind"]
    params = {
        "gamma": cfg["learner.gamma"],
        "lam": cfg["learner.lam"],
        "clip_eps": cfg["learner.clip_eps"],
        "lr_actor": cfg["learner.lr_actor"],
        "lr_critic": cfg["learner.lr_critic"],
        "hidden": cfg["learner.hidden"],
        "steps_per_episode": cfg["run.steps_per_episode"],
        "update_epochs": cfg["learner.update_epochs"],
        "minibatch": cfg["learner.minibatch"],
        "normalize_advantage": cfg["learner.normalize_advantage"],
        "advantage_exponent": cfg["learner.advantage_exponent"],
        "log_std_init": cfg["learner.log_std_init"],
        "seed": cfg["run.seed"],
    }
    if kind in ("hybrid", "meta"):
        params.update(
            lr_classifier=cfg["learner.lr_classifier"],
            conv_channels=cfg["learner.conv_channels"],
            kernel=cfg["learner.kernel"],
            pool=cfg["learner.pool"],
            classifier_updates=cfg["learner.classifier_updates"],
        )
    if kind == "meta":
        params.update(w=cfg["learner.w"], inner_lr=cfg["learner.inner_lr"],
                      meta_lr=cfg["learner.meta_lr"])
    if kind in ("ppo", "vpg", "svm"):
        params.update(n_classes=cfg["data.n_classes"])
    return make_learner(kind, **params)


def test_accuracy(learner, dataset, eval_metrics):
    """Frozen-model test accuracy; reward-only learners use rollout accuracy."""
    try:
        segs = [s for user in sorted(dataset.test) for s in dataset.test[user]]
        return learner.score(segs)
    except NotImplementedError:
        return eval_metrics["correct_rate"]


def run(cfg, run_id="run", out_dir=None, callback=None):
    """Train per config, then evaluate the frozen model on the test split."""
    cfg.validate()
    params = resolve_network_params(cfg)
    dataset = build_dataset(cfg)
    env = build_env(cfg, dataset, params, partition="train")
    learner = build_learner(cfg)
    learner.fit(env, episodes=cfg["run.episodes"],
                n_classes=cfg["data.n_classes"], callback=callback)

    eval_env = build_env(cfg, dataset, params, partition="test")
    eval_rng = np.random.default_rng(cfg["run.seed"] + 10_000)
    eval_metrics = learner.evaluate(eval_env, eval_rng, n_steps=cfg["run.eval_steps"])
    acc = test_accuracy(learner, dataset, eval_metrics)

    seed = cfg["run.seed"]
    table = MetricsTable()
    for row in learner.history_:
        for metric in ("mean_q", "train_acc", "mean_delay", "actor_loss",
                       "critic_loss", "ce_loss", "psi_rate", "eps_star_mean"):
            table.append(run_id, seed, row["episode"], metric, row[metric])
    for metric, value in eval_metrics.items():
        table.append(run_id, seed, cfg["run.episodes"], f"eval_{metric}", value)
    table.append(run_id, seed, cfg["run.episodes"], "test_accuracy", acc)

    result = RunResult(
        run_id=run_id, config=cfg, learner=learner, z=params.z,
        history=learner.history_, eval_metrics=eval_metrics,
        test_accuracy=acc, table=table,
    )
    if out_dir is not None:
        result.out_dir = str(out_dir)
        _write_outputs(result, eval_env, eval_rng)
    return result


def _write_outputs(result, eval_env, eval_rng):
    out = result.out_dir
    os.makedirs(out, exist_ok=True)
    result.config.dump(os.path.join(out, "config.txt"))
    result.table.to_csv(os.path.join(out, "metrics.csv"))
    with open(os.path.join(out, "training_curve.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAIN_CURVE_HEADER)
        for row in result.history:
            writer.writerow([
                row["episode"], row["mean_q"], row["train_acc"], row["mean_delay"],
                row["actor_loss"], row["critic_loss"], row["ce_loss"],
            ])
    _write_step_log(result.learner, eval_env, eval_rng,
                    os.path.join(out, "eval_steps.csv"))
    result.learner.save(os.path.join(out, "checkpoint.npz"),
                        extra_meta={"run_id": result.run_id, "z": result.z})


def _write_step_log(learner, env, rng, path, n_steps=100):
    obs = env.reset(rng)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STEP_LOG_HEADER)
        for t in range(n_steps):
            action = learner._mean_step(obs)
            obs, rec = env.step(action, rng)
            for k in range(env.n_users):
                writer.writerow([
                    t, k, rec.delay[k], rec.psi[k], rec.phi_ind[k],
                    rec.eps[k], rec.q[k], rec.mean_q,
                ])


@dataclass
class SweepSpec:
    """One swept key, its values, and the seeds to repeat each value over."""

    key: str
    values: list
    seeds: list

    SWEEPABLE = ("net.P_max_dbm", "net.upsilon_hz", "env.K", "eta")

    def validate(self):
        if self.key not in self.SWEEPABLE:
            raise ConfigError(f"sweep key must be one of {self.SWEEPABLE}, got {self.key!r}")
        if not self.values or not self.seeds:
            raise ConfigError("sweep needs at least one value and one seed")
        return self


def _sweep_configs(spec, base_cfg):
    jobs = []
    for value in spec.values:
        for seed in spec.seeds:
            cfg = base_cfg.copy()
            if spec.key == "eta":
                eta1, eta2 = (float(x) for x in str(value).split(":"))
                cfg.update({"env.eta1": eta1, "env.eta2": eta2})
                tag = f"eta={eta1}:{eta2}"
            else:
                cfg.update({spec.key: value})
                tag = f"{spec.key}={value}"
            cfg.update({"run.seed": seed})
            jobs.append((f"{tag}/seed={seed}", cfg))
    return jobs


def _run_job(args):
    run_id, cfg_values, out_dir = args
    cfg = ExperimentConfig()
    cfg._values = cfg_values
    result = run(cfg, run_id=run_id, out_dir=out_dir)
    # learners are not needed (or picklable) across process boundaries
    result.learner = None
    result.config = None
    return result


def sweep(spec, base_cfg, out_dir=None, workers=1):
    """One run per (value x seed); merged long-format table plus summaries."""
    spec.validate()
    jobs = _sweep_configs(spec, base_cfg)
    args = [
        (run_id, cfg.as_dict(),
         None if out_dir is None else os.path.join(out_dir, run_id.replace("/", "_")))
        for run_id, cfg in jobs
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, args))
    else:
        results = [_run_job(a) for a in args]

    table = MetricsTable()
    for result in results:
        table.extend(result.table)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        table.to_csv(os.path.join(out_dir, "sweep_metrics.csv"))
    return table, results
