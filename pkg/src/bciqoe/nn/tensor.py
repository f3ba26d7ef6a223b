"""Dense float64 tensors with taped reverse-mode differentiation.

Every primitive op eagerly computes its value with numpy and, when a Tape
is active, records (output, parents, vjp) so the tape can be replayed
backward exactly once.  The engine is deliberately small: row-major dense
arrays, float64 only, the op set needed for small MLPs, a 1-D convnet,
Gaussian policy densities, and the losses trained in this package.

A non-finite value produced anywhere raises immediately and names the op
that produced it, so NaNs cannot propagate silently into an update.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "backward",
    "TapeConsumedError",
    "NonFiniteError",
    "add",
    "sub",
    "mul",
    "neg",
    "matmul",
    "exp",
    "log",
    "tanh",
    "relu",
    "sigmoid",
    "reshape",
    "tsum",
    "tmean",
    "softmax",
    "log_softmax",
    "conv1d",
    "maxpool1d",
    "gather_rows",
    "minimum",
]


class TapeConsumedError(RuntimeError):
    """Raised when a tape is replayed backward more than once."""


class NonFiniteError(FloatingPointError):
    """Raised when an op produces NaN or Inf, naming the producing op."""


class Tensor:
    """A float64 array plus the metadata the tape needs to reach it."""

    __slots__ = ("data", "requires_grad", "_op", "_rec")

    def __init__(self, data, requires_grad=False):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self._op = "leaf"
        self._rec = False
        if requires_grad and not np.all(np.isfinite(arr)):
            raise NonFiniteError("parameter tensor initialised with non-finite values")

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return self.data.item()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self._op!r})"

    # operator sugar; all dispatch to the module-level primitives
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class Tape:
    """Ordered record of primitive ops, replayable backward exactly once.

    Use as a context manager around the forward pass::

        with Tape() as tape:
            loss = model_loss(...)
        grads = backward(tape, loss)
    """

    def __init__(self):
        self._entries = []  # (out, parents, vjp) in execution order
        self._out_ids = set()
        self.consumed = False

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPE_STACK.pop()
        assert popped is self
        return False

    def _record(self, out, parents, vjp):
        self._entries.append((out, parents, vjp))
        self._out_ids.add(id(out))

    def __len__(self):
        return len(self._entries)


_TAPE_STACK: list[Tape] = []


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def backward(tape, loss):
    """Replay ``tape`` in reverse from scalar ``loss``.

    Returns a dict mapping each requires-grad Tensor reached by the sweep
    to its gradient array (same shape as the parameter).
    """
    if tape.consumed:
        raise TapeConsumedError("tape has already been replayed backward")
    if not isinstance(loss, Tensor) or loss.data.size != 1:
        raise ValueError("loss must be a scalar Tensor")
    if id(loss) not in tape._out_ids:
        raise ValueError("loss was not produced on this tape")
    tape.consumed = True

    flows = {id(loss): np.ones_like(loss.data)}
    grads: dict[Tensor, np.ndarray] = {}
    for out, parents, vjp in reversed(tape._entries):
        g = flows.pop(id(out), None)
        if g is None:
            continue
        for parent, pg in zip(parents, vjp(g)):
            if pg is None:
                continue
            if not np.all(np.isfinite(pg)):
                raise NonFiniteError(f"non-finite gradient at op {out._op!r}")
            if id(parent) in flows:
                flows[id(parent)] = flows[id(parent)] + pg
            else:
                flows[id(parent)] = pg
            if parent.requires_grad:
                grads[parent] = flows[id(parent)]
    return grads


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _make(op, out_data, parents, vjp):
    if not np.all(np.isfinite(out_data)):
        raise NonFiniteError(f"non-finite values produced by op {op!r}")
    out = Tensor(out_data)
    out._op = op
    tape = _active_tape()
    if tape is not None and any(p.requires_grad or p._rec for p in parents):
        out._rec = True
        tape._record(out, parents, vjp)
    return out


def _unbroadcast(grad, shape):
    """Reduce ``grad`` back to ``shape`` after numpy broadcasting."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make("add", a.data + b.data, (a, b), vjp)


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _make("sub", a.data - b.data, (a, b), vjp)


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)

    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _make("mul", a.data * b.data, (a, b), vjp)


def neg(a):
    a = _as_tensor(a)
    return _make("neg", -a.data, (a,), lambda g: (-g,))


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError(
            f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}"
        )
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return _make("matmul", a.data @ b.data, (a, b), vjp)


def exp(a):
    a = _as_tensor(a)
    out = np.exp(a.data)
    return _make("exp", out, (a,), lambda g: (g * out,))


def log(a):
    a = _as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return _make("log", out, (a,), lambda g: (g / a.data,))


def tanh(a):
    a = _as_tensor(a)
    out = np.tanh(a.data)
    return _make("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def relu(a):
    a = _as_tensor(a)
    mask = a.data > 0
    return _make("relu", np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def sigmoid(a):
    a = _as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))
    return _make("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def reshape(a, shape):
    a = _as_tensor(a)
    orig = a.data.shape
    return _make(
        "reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(orig),)
    )


def tsum(a, axis=None):
    """Sum over ``axis`` (or all elements when axis is None)."""
    a = _as_tensor(a)
    shape = a.data.shape

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _make("sum", a.data.sum(axis=axis), (a,), vjp)


def tmean(a, axis=None):
    a = _as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis), 1.0 / n)


def _shifted_exp(x, axis):
    z = x - x.max(axis=axis, keepdims=True)
    return np.exp(z), z


def softmax(a, axis=-1):
    a = _as_tensor(a)
    e, _ = _shifted_exp(a.data, axis)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make("softmax", out, (a,), vjp)


def log_softmax(a, axis=-1):
    a = _as_tensor(a)
    e, z = _shifted_exp(a.data, axis)
    out = z - np.log(e.sum(axis=axis, keepdims=True))
    soft = np.exp(out)

    def vjp(g):
        return (g - soft * g.sum(axis=axis, keepdims=True),)

    return _make("log_softmax", out, (a,), vjp)


def conv1d(x, w, b=None):
    """Valid 1-D convolution, stride 1.

    x: (batch, in_channels, length); w: (out_channels, in_channels, k);
    b: (out_channels,) or None.  Output: (batch, out_channels, length-k+1).
    """
    x, w = _as_tensor(x), _as_tensor(w)
    if x.data.ndim != 3 or w.data.ndim != 3:
        raise ValueError("conv1d expects x (B,C,L) and w (O,C,k)")
    batch, cin, length = x.data.shape
    cout, cin_w, k = w.data.shape
    if cin != cin_w:
        raise ValueError(f"conv1d channel mismatch: input {cin}, kernel {cin_w}")
    if k > length:
        raise ValueError(f"kernel size {k} exceeds input length {length}")
    win = np.lib.stride_tricks.sliding_window_view(x.data, k, axis=2)
    out = np.einsum("bilk,oik->bol", win, w.data, optimize=True)
    parents = [x, w]
    if b is not None:
        b = _as_tensor(b)
        out = out + b.data[None, :, None]
        parents.append(b)

    def vjp(g):
        gw = np.einsum("bol,bilk->oik", g, win, optimize=True)
        contrib = np.einsum("bol,oik->bilk", g, w.data, optimize=True)
        gx = np.zeros((batch, cin, length))
        lo = length - k + 1
        for j in range(k):
            gx[:, :, j : j + lo] += contrib[:, :, :, j]
        if b is None:
            return gx, gw
        return gx, gw, g.sum(axis=(0, 2))

    return _make("conv1d", out, tuple(parents), vjp)


def maxpool1d(x, size):
    """Non-overlapping max pool along the last axis; length must divide."""
    x = _as_tensor(x)
    batch, ch, length = x.data.shape
    if length % size != 0:
        raise ValueError(f"maxpool1d: length {length} not divisible by {size}")
    lo = length // size
    blocks = x.data.reshape(batch, ch, lo, size)
    idx = blocks.argmax(axis=3)
    out = np.take_along_axis(blocks, idx[..., None], axis=3)[..., 0]

    def vjp(g):
        gb = np.zeros_like(blocks)
        np.put_along_axis(gb, idx[..., None], g[..., None], axis=3)
        return (gb.reshape(batch, ch, length),)

    return _make("maxpool1d", out, (x,), vjp)


def gather_rows(x, idx):
    """Pick x[i, idx[i]] from a (B, C) tensor; returns shape (B,)."""
    x = _as_tensor(x)
    idx = np.asarray(idx, dtype=np.intp)
    rows = np.arange(x.data.shape[0])
    out = x.data[rows, idx]

    def vjp(g):
        gx = np.zeros_like(x.data)
        gx[rows, idx] = g
        return (gx,)

    return _make("gather_rows", out, (x,), vjp)


def minimum(a, b):
    """Elementwise min; at ties the gradient goes to the first operand."""
    a, b = _as_tensor(a), _as_tensor(b)
    take_a = a.data <= b.data

    def vjp(g):
        return (
            _unbroadcast(np.where(take_a, g, 0.0), a.data.shape),
            _unbroadcast(np.where(take_a, 0.0, g), b.data.shape),
        )

    return _make("minimum", np.minimum(a.data, b.data), (a, b), vjp)
