"""Versioned parameter checkpoints.

Layout: a numpy ``.npz`` archive. Every parameter is stored under its
dotted name as a float64 array (shape preserved); the reserved key
``__meta__`` holds a JSON string with at least ``{"format": "bciqoe-ckpt",
"version": 1}``. float64 bit patterns survive the .npy encoding unchanged,
so save -> load round-trips are bit-exact.
"""

import json

import numpy as np

from .tensor import Tensor

FORMAT_NAME = "bciqoe-ckpt"
FORMAT_VERSION = 1
_META_KEY = "__meta__"


def save_params(path, named_params, extra_meta=None):
    """Write {name: Tensor-or-array} to ``path``."""
    meta = {"format": FORMAT_NAME, "version": FORMAT_VERSION}
    if extra_meta:
        meta.update(extra_meta)
    arrays = {}
    for name, value in named_params.items():
        if name == _META_KEY:
            raise ValueError(f"parameter name {name!r} is reserved")
        arr = value.data if isinstance(value, Tensor) else np.asarray(value)
        arrays[name] = np.asarray(arr, dtype=np.float64)
    np.savez(path, **arrays, **{_META_KEY: np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)})


def load_params(path):
    """Read a checkpoint; returns ({name: float64 array}, meta dict)."""
    with np.load(path) as archive:
        if _META_KEY not in archive:
            raise ValueError(f"{path}: not a parameter checkpoint (missing metadata)")
        meta = json.loads(bytes(archive[_META_KEY]).decode())
        if meta.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: unknown checkpoint format {meta.get('format')!r}")
        if meta.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {meta.get('version')!r}")
        params = {k: archive[k].copy() for k in archive.files if k != _META_KEY}
    return params, meta


def restore_module(module, params, prefix=""):
    """Load arrays back into a Module's named parameters, checking shapes."""
    for name, tensor in module.named_params(prefix):
        if name not in params:
            raise KeyError(f"checkpoint missing parameter {name!r}")
        arr = params[name]
        if arr.shape != tensor.data.shape:
            raise ValueError(
                f"parameter {name!r}: checkpoint shape {arr.shape} != model shape {tensor.data.shape}"
            )
        tensor.data = arr.copy()
