"""Command-line interface.

Verbs: run, sweep, eval, oracle, plot, calibrate-z. Flags mirror config
keys; any key can be overridden with --set section.key=value. Exit code 0
means the command completed with every internal check passing.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .harness.calibrate import calibrate_from_config
from .harness.config import ConfigError, ExperimentConfig
from .harness.oracle import oracle_best
from .harness.runner import (
    SweepSpec,
    build_dataset,
    build_env,
    build_learner,
    resolve_network_params,
    run,
    sweep,
    test_accuracy,
)


def _load_config(args):
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    if overrides:
        cfg.update(overrides, source="--set")
    return cfg


def _add_common(parser):
    parser.add_argument("--config", help="config file (section.key = value lines)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")


def cmd_run(args):
    cfg = _load_config(args)
    result = run(cfg, run_id=args.run_id, out_dir=args.out)
    print(f"run {result.run_id}: z={result.z:.4g}")
    if result.history:
        last = result.history[-1]
        print(f"  final episode: mean_Q={last['mean_q']:.4f} train_acc={last['train_acc']:.4f}")
    print(f"  eval: {json.dumps(result.eval_metrics, sort_keys=True)}")
    print(f"  test_accuracy: {result.test_accuracy:.4f}")
    if result.out_dir:
        print(f"  outputs under {result.out_dir}")
    return 0


def cmd_sweep(args):
    cfg = _load_config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if args.key != "eta":
        values = [float(v) if "." in v or "e" in v.lower() or "-" in v else int(v) for v in values]
    seeds = [int(s) for s in args.seeds.split(",")]
    spec = SweepSpec(key=args.key, values=values, seeds=seeds)
    table, results = sweep(spec, cfg, out_dir=args.out, workers=args.workers)
    summary = table.aggregate("test_accuracy", group_key=lambda rid: rid.split("/seed=")[0])
    print(f"{len(results)} runs")
    for key, (mean, std, n) in summary.items():
        print(f"  {key}: test_accuracy = {mean:.4f} +- {std:.4f} (n={n})")
    return 0


def cmd_eval(args):
    cfg = _load_config(args)
    cfg.validate()
    from .nn.checkpoint import load_params

    params = resolve_network_params(cfg)
    dataset = build_dataset(cfg)
    learner = build_learner(cfg)
    env = build_env(cfg, dataset, params, partition="test")
    learner._env = env
    learner._build(env, cfg["data.n_classes"])
    weights, meta = load_params(args.checkpoint)
    learner.load_weights(weights)
    metrics = learner.evaluate(env, np.random.default_rng(cfg["run.seed"] + 10_000),
                               n_steps=cfg["run.eval_steps"])
    acc = test_accuracy(learner, dataset, metrics)
    print(f"checkpoint {args.checkpoint} (kind={meta.get('kind')})")
    print(f"  eval: {json.dumps(metrics, sort_keys=True)}")
    print(f"  test_accuracy: {acc:.4f}")
    return 0


def cmd_oracle(args):
    cfg = _load_config(args)
    params = resolve_network_params(cfg)
    h = np.array([float(v) for v in args.gains.split(",")])
    best = oracle_best(
        params, h, args.cpu_load,
        eta1=cfg["env.eta1"], eta2=cfg["env.eta2"],
        power_levels=args.power_levels, tau_levels=args.tau_levels,
    )
    print(f"oracle over {best.evaluations} candidates:")
    print(f"  mean_Q = {best.mean_q:.6f}")
    print(f"  blocks = {best.blocks}")
    print(f"  powers = {tuple(round(p, 6) for p in best.powers)} W")
    print(f"  tau    = {tuple(round(t, 4) for t in best.tau)}")
    return 0


def cmd_plot(args):
    from .harness import plots

    if args.kind == "curve":
        out = plots.plot_training_curve(args.input, args.out, metric=args.metric or "mean_Q")
    else:
        out = plots.plot_metric_cdf(args.input, args.out, metric=args.metric or "mean_q")
    print(f"wrote {out}")
    return 0


def cmd_calibrate_z(args):
    cfg = _load_config(args)
    z, span = calibrate_from_config(cfg)
    print(f"calibrated z = {z:.6g}")
    print("  per-user PER across the headset power sweep (even block share):")
    for dbm, eps in span:
        print(f"    P_max = {dbm:+.0f} dBm -> eps = {eps:.4g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bciqoe",
        description="Wireless edge BCI/VR QoE laboratory: train and evaluate "
                    "joint resource-allocation/classification learners.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train one learner and evaluate it")
    _add_common(p)
    p.add_argument("--out", help="output directory")
    p.add_argument("--run-id", default="run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat runs over a swept key")
    _add_common(p)
    p.add_argument("--key", required=True,
                   choices=list(SweepSpec.SWEEPABLE))
    p.add_argument("--values", required=True, help="comma list (eta uses a:b pairs)")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="evaluate a saved checkpoint on the test split")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="brute-force optimum of a small frozen setting")
    _add_common(p)
    p.add_argument("--gains", default="1.0,1.0", help="comma list of channel gains")
    p.add_argument("--cpu-load", type=float, default=0.5)
    p.add_argument("--power-levels", type=int, default=9)
    p.add_argument("--tau-levels", type=int, default=9)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plot", help="render a training curve or metric CDF from CSV")
    p.add_argument("--kind", choices=["curve", "cdf"], default="curve")
    p.add_argument("--input", required=True)
    p.add_argument("--metric")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("calibrate-z", help="fit the waterfall PER threshold")
    _add_common(p)
    p.set_defaults(func=cmd_calibrate_z)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
