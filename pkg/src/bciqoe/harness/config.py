"""Flat dotted-key experiment configuration.

Files are plain text, one ``section.key = value`` per line, ``#`` comments.
Every key must exist in DEFAULTS; unknown keys are collected and reported
together so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import copy

DEFAULTS = {
    # radio/compute constants (Hz, W, s, bits); dBm where suffixed
    "net.M": 10,
    "net.B_U_hz": 1e6,
    "net.B_D_hz": 20e6,
    "net.N0_dbm": -174.0,
    "net.I_m_dbm": -10.0,
    "net.I_D_dbm": -10.0,
    "net.P_B_w": 1.0,
    "net.P_max_dbm": 20.0,
    "net.z": "auto",              # waterfall PER threshold; "auto" calibrates
    "net.upsilon_hz": 2.3e9,
    "net.D_max_s": 0.01,
    "net.l_U_bits": 16384.0,
    "net.l_D_bits": 1e6,
    "net.N_cpus": 8,
    "net.sigma_U2_w": "auto",     # default: B_U * N0
    "net.sigma_D2_w": "auto",
    "net.load_mode": "literal",
    # environment composition
    "env.K": 3,
    "env.eta1": 1.0,
    "env.eta2": 1.0,
    "env.corruption_mode": "analytical",
    "env.channel_mode": "iid",
    "env.fading_scale": 1.0,
    "env.cpu_mode": "walk",       # walk | trace
    "env.cpu_trace": "",
    "env.cpu_u_lo": 0.2,
    "env.cpu_u_hi": 0.8,
    "env.cpu_sigma": 0.02,
    "env.cpu_drift": 0.0,
    # dataset
    "data.source": "synthetic",   # synthetic | edf-dir
    "data.edf_dir": "",
    "data.n_epochs": 120,         # synthetic epochs per user
    "data.epoch_len": 160,
    "data.n_channels": 64,
    "data.n_classes": 4,
    "data.window": 16,
    "data.overlap": 0.5,
    "data.split_ratio": 0.8,
    "data.band_jitter": 2.5,
    "data.band_mode": "jitter",
    "data.polarity": "random",
    "data.amp_lo": 0.5,
    "data.amp_hi": 2.0,
    "data.noise_floor": 0.5,
    "data.seed": 1234,            # dataset generation stream
    # learner
    "learner.kind": "hybrid",
    "learner.gamma": 0.99,
    "learner.lam": 0.99,
    "learner.clip_eps": 0.2,
    "learner.lr_actor": 5e-5,
    "learner.lr_critic": 5e-4,
    "learner.lr_classifier": 2e-3,
    "learner.hidden": (64, 64),
    "learner.conv_channels": (32, 32),
    "learner.kernel": 3,
    "learner.pool": 2,
    "learner.update_epochs": 4,
    "learner.minibatch": 25,
    "learner.classifier_updates": "trajectory",
    "learner.normalize_advantage": True,
    "learner.advantage_exponent": "printed",
    "learner.log_std_init": -0.5,
    "learner.w": 3,
    "learner.inner_lr": 2e-3,
    "learner.meta_lr": 1.0,
    # run control
    "run.seed": 0,
    "run.episodes": 3000,         # x O steps = total training steps
    "run.steps_per_episode": 100,
    "run.eval_steps": 100,
    "run.out_dir": "runs",
}


class ConfigError(ValueError):
    pass


def _parse_value(text, like):
    text = text.strip()
    if isinstance(like, bool):
        if text.lower() in ("true", "1", "yes", "on"):
            return True
        if text.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {text!r}")
    if isinstance(like, int) and not isinstance(like, bool):
        try:
            return int(float(text))
        except ValueError:
            raise ConfigError(f"expected an integer, got {text!r}") from None
    if isinstance(like, float):
        try:
            return float(text)
        except ValueError:
            # a few numeric keys accept the sentinel "auto"
            if text == "auto":
                return "auto"
            raise ConfigError(f"expected a number, got {text!r}") from None
    if isinstance(like, tuple):
        try:
            return tuple(int(v) for v in text.strip("()").split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"expected a comma list of integers, got {text!r}") from None
    return text


class ExperimentConfig:
    """Validated key-value store over DEFAULTS."""

    def __init__(self, overrides=None):
        self._values = copy.deepcopy(DEFAULTS)
        if overrides:
            self.update(overrides)

    @classmethod
    def from_file(cls, path):
        overrides = {}
        errors = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
                    continue
                key, _, value = line.partition("=")
                overrides[key.strip()] = value.strip()
        if errors:
            raise ConfigError(f"{path}: " + "; ".join(errors))
        cfg = cls()
        cfg.update(overrides, source=str(path))
        return cfg

    def update(self, overrides, source="override"):
        errors = []
        for key, value in overrides.items():
            if key not in DEFAULTS:
                errors.append(f"unknown key {key!r}")
                continue
            try:
                if isinstance(value, str):
                    value = _parse_value(value, DEFAULTS[key])
                self._values[key] = value
            except ConfigError as exc:
                errors.append(f"{key}: {exc}")
        if errors:
            raise ConfigError(f"{source}: " + "; ".join(errors))
        return self

    def __getitem__(self, key):
        if key not in self._values:
            raise ConfigError(f"unknown config key {key!r}")
        return self._values[key]

    def get(self, key, default=None):
        return self._values.get(key, default)

    def copy(self):
        clone = ExperimentConfig()
        clone._values = copy.deepcopy(self._values)
        return clone

    def as_dict(self):
        return dict(self._values)

    def dump(self, path):
        with open(path, "w") as fh:
            for key in sorted(self._values):
                value = self._values[key]
                if isinstance(value, tuple):
                    value = ",".join(str(v) for v in value)
                fh.write(f"{key} = {value}\n")

    def validate(self):
        """Domain checks beyond type parsing; raises with every violation."""
        errors = []
        v = self._values
        if not 3 <= v["env.K"] or v["env.K"] > 16:
            errors.append(f"env.K={v['env.K']} outside [3, 16]")
        if v["learner.kind"] not in ("hybrid", "meta", "ppo", "vpg", "svm"):
            errors.append(f"unknown learner.kind {v['learner.kind']!r}")
        if v["data.source"] not in ("synthetic", "edf-dir"):
            errors.append(f"unknown data.source {v['data.source']!r}")
        if v["data.source"] == "edf-dir" and not v["data.edf_dir"]:
            errors.append("data.source=edf-dir requires data.edf_dir")
        if not 0 < v["data.split_ratio"] < 1:
            errors.append(f"data.split_ratio={v['data.split_ratio']} outside (0,1)")
        if v["run.episodes"] < 0 or v["run.steps_per_episode"] < 1:
            errors.append("run.episodes must be >= 0 and run.steps_per_episode >= 1")
        if v["env.corruption_mode"] not in ("analytical", "sampled"):
            errors.append(f"unknown env.corruption_mode {v['env.corruption_mode']!r}")
        if v["env.cpu_mode"] not in ("walk", "trace"):
            errors.append(f"unknown env.cpu_mode {v['env.cpu_mode']!r}")
        if v["env.cpu_mode"] == "trace" and not v["env.cpu_trace"]:
            errors.append("env.cpu_mode=trace requires env.cpu_trace")
        if isinstance(v["net.z"], str) and v["net.z"] != "auto":
            errors.append(f"net.z must be a number or 'auto', got {v['net.z']!r}")
        if errors:
            raise ConfigError("; ".join(errors))
        return self
