"""Estimator base utilities and input validation helpers.

The learner, classifier, and preprocessing classes in this package follow
the scikit-learn parameter protocol: constructor arguments are stored
verbatim as attributes of the same name, and ``get_params``/``set_params``
expose them for cloning, grid construction, and config round-trips.
"""

import inspect

import numpy as np


class ParamMixin:
    """get_params/set_params following the sklearn estimator contract."""

    @classmethod
    def _param_names(cls):
        # walk the MRO so subclasses that forward **kwargs to a parent
        # constructor still expose the parent's parameters
        names = set()
        for klass in cls.__mro__:
            init = klass.__dict__.get("__init__")
            if init is None:
                continue
            sig = inspect.signature(init)
            names.update(
                name
                for name, p in sig.parameters.items()
                if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
            )
        return sorted(names)

    def get_params(self, deep=True):
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(
                    f"invalid parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters are {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_array(x, name="array", ndim=None, dtype=np.float64):
    """Coerce to a finite ndarray of the requested dtype/rank."""
    arr = np.asarray(x, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_positive(value, name):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_unit_interval(value, name, *, open_left=False, open_right=False):
    lo_ok = value > 0 if open_left else value >= 0
    hi_ok = value < 1 if open_right else value <= 1
    if not (lo_ok and hi_ok):
        raise ValueError(f"{name}={value} outside the unit interval")
    return value


def check_rng(rng):
    """Accept a Generator or a seed; ambient global RNG is never used."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        raise ValueError("an explicit rng (Generator or integer seed) is required")
    return np.random.default_rng(rng)
