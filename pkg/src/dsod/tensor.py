"""Minimal reverse-mode autodiff over numpy arrays.

This module is the numerical substrate for the whole package: a `Tensor`
wraps a numpy array and remembers, when gradients are enabled, which
operation produced it and from which inputs.  Calling ``backward()`` on a
scalar result walks that record in reverse topological order and
accumulates ``grad`` arrays on every tensor that contributed.

The op set is deliberately small: exactly the kernels a densely connected
convolutional detector needs (conv2d via im2col and a single GEMM,
ceil-mode max pooling, batch norm, relu, concatenation, channelwise L2
normalization with a learned scale, smooth-L1 and softmax cross-entropy
losses, plus reshaping plumbing).  There is no broadcasting engine and no
general einsum; keeping the surface this narrow is what makes the finite
difference oracle in `gradcheck` able to cover every op.

Training state is float32.  The same graph code runs in float64 when the
gradient checker drives it, so ops take care to derive working dtypes from
their inputs rather than hard-coding float32.

Determinism: every kernel is a fixed sequence of numpy operations with a
fixed reduction order, so repeated runs on identical inputs produce
bit-identical outputs and gradients.  numpy's BLAS may parallelize the
GEMMs internally; cap threads via the environment (see the CLI) before
importing numpy if you need run-to-run timing stability as well.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import ConfigError, DataError

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference paths)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """A numpy array plus the bookkeeping needed for reverse-mode autodiff.

    Attributes
    ----------
    data : np.ndarray
        The value.  Ops never mutate it.
    grad : np.ndarray or None
        Accumulated gradient of the same shape, filled by ``backward()``.
    requires_grad : bool
        Leaves opt in via the constructor; interior nodes inherit it from
        their inputs.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __add__(self, other):
        return add(self, other)

    def sum(self) -> "Tensor":
        return tsum(self)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)

    def backward(self):
        """Backpropagate from this scalar through the recorded graph."""
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar root, got shape {self.data.shape}")
        order = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward_fn is not None:
                node._backward_fn(node.grad)


def _toposort(root: Tensor) -> list:
    # Iterative post-order; graphs can be a few hundred nodes deep.
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _accum(t: Tensor, g: np.ndarray):
    # Never accumulate in place: siblings may share the incoming buffer.
    t.grad = g if t.grad is None else t.grad + g


def _make(data: np.ndarray, parents: tuple, backward_fn) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


# ---------------------------------------------------------------------------
# convolution


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, padding: int):
    b, c, h, w = x.shape
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    s0, s1, s2, s3 = x.strides
    win = np.lib.stride_tricks.as_strided(
        x,
        shape=(b, c, kh, kw, ho, wo),
        strides=(s0, s1, s2, s3, s2 * stride, s3 * stride),
        writeable=False,
    )
    cols = np.ascontiguousarray(win.transpose(0, 4, 5, 1, 2, 3))
    return cols.reshape(b * ho * wo, c * kh * kw), ho, wo


def _col2im(dcols, xshape, kh, kw, stride, padding, ho, wo):
    b, c, h, w = xshape
    hp, wp = h + 2 * padding, w + 2 * padding
    dxp = np.zeros((b, c, hp, wp), dtype=dcols.dtype)
    d6 = dcols.reshape(b, ho, wo, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    for u in range(kh):
        for v in range(kw):
            # strided slice windows never self-overlap, so += is exact
            dxp[:, :, u : u + stride * ho : stride, v : v + stride * wo : stride] += d6[:, :, u, v]
    if padding:
        return np.ascontiguousarray(dxp[:, :, padding : padding + h, padding : padding + w])
    return dxp


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation, NCHW input and (out, in, kh, kw) weight.

    Output spatial extent is ``floor((H + 2*padding - kh) / stride) + 1``.
    """
    b, c, h, w = x.data.shape
    co, ci, kh, kw = weight.data.shape
    if ci != c:
        raise ConfigError(f"conv2d: weight expects {ci} input channels, got {c}")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ConfigError(
            f"conv2d: kernel {kh}x{kw} larger than padded input {h + 2 * padding}x{w + 2 * padding}"
        )
    cols, ho, wo = _im2col(x.data, kh, kw, stride, padding)
    w2 = weight.data.reshape(co, -1)
    # one gemm per image: blas kernel choice depends on matrix extents, so
    # batching the product would make results depend on how a batch is
    # split, and gradient accumulation needs identical micro-batch math
    rows = ho * wo
    out = np.empty((b * rows, co), dtype=np.result_type(cols.dtype, w2.dtype))
    for i in range(b):
        s = slice(i * rows, (i + 1) * rows)
        out[s] = cols[s] @ w2.T
    out = out.reshape(b, ho, wo, co).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out)

    def backward(g):
        gcols = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(-1, co)
        if weight.requires_grad:
            # parameter gradients reduce across images in float64, so the
            # reduction order (one batch, or the same images in micro-batches)
            # cannot move the optimizer step
            dw = np.zeros_like(w2, dtype=np.float64)
            for i in range(b):
                s = slice(i * rows, (i + 1) * rows)
                dw += gcols[s].T @ cols[s]
            _accum(weight, dw.reshape(weight.data.shape))
        if bias is not None and bias.requires_grad:
            _accum(bias, g.sum(axis=(0, 2, 3), dtype=np.float64))
        if x.requires_grad:
            dcols = np.empty_like(cols, dtype=np.result_type(gcols.dtype, w2.dtype))
            for i in range(b):
                s = slice(i * rows, (i + 1) * rows)
                dcols[s] = gcols[s] @ w2
            _accum(x, _col2im(dcols, x.data.shape, kh, kw, stride, padding, ho, wo))

    parents = (x, weight) if bias is None else (x, weight, bias)
    return _make(out, parents, backward)


# ---------------------------------------------------------------------------
# pooling


def pool_out_extent(extent: int, kernel: int, stride: int) -> int:
    """Ceil-mode output extent; the last window may hang over the edge."""
    n = -((extent - kernel) // -stride) + 1
    if (n - 1) * stride >= extent:
        n -= 1
    return n


def maxpool2d(x: Tensor, kernel: int, stride: int) -> Tensor:
    """Max pooling with ceil-mode output size and edge-clipped windows.

    Ties inside a window resolve to the lowest flat input index, so the
    result does not depend on scan order.
    """
    b, c, h, w = x.data.shape
    if kernel > h or kernel > w:
        raise ConfigError(f"maxpool2d: kernel {kernel} exceeds input extent {h}x{w}")
    ho = pool_out_extent(h, kernel, stride)
    wo = pool_out_extent(w, kernel, stride)
    out = np.full((b, c, ho, wo), -np.inf, dtype=x.data.dtype)
    argmax = np.zeros((b, c, ho, wo), dtype=np.int64)
    for u in range(kernel):
        ni = min(ho, (h - 1 - u) // stride + 1)
        if ni <= 0:
            continue
        for v in range(kernel):
            nj = min(wo, (w - 1 - v) // stride + 1)
            if nj <= 0:
                continue
            cand = x.data[:, :, u::stride, v::stride][:, :, :ni, :nj]
            region = out[:, :, :ni, :nj]
            flat = (np.arange(ni) * stride + u)[:, None] * w + (np.arange(nj) * stride + v)[None, :]
            mask = cand > region
            region[mask] = cand[mask]
            arg_region = argmax[:, :, :ni, :nj]
            arg_region[mask] = np.broadcast_to(flat, cand.shape)[mask]

    def backward(g):
        if not x.requires_grad:
            return
        dx = np.zeros(b * c * h * w, dtype=g.dtype)
        offs = (np.arange(b)[:, None, None, None] * c + np.arange(c)[None, :, None, None]) * (h * w)
        np.add.at(dx, (offs + argmax).ravel(), g.ravel())
        _accum(x, dx.reshape(b, c, h, w))

    return _make(out, (x,), backward)


# ---------------------------------------------------------------------------
# normalization


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel batch normalization over (batch, height, width).

    In training mode, normalizes by batch statistics (biased variance) and
    blends them into `running_mean` / `running_var` in place.  In inference
    mode the running statistics normalize and nothing is updated, which
    also makes the op linear in ``x`` per channel.
    """
    b, c, h, w = x.data.shape
    n = b * h * w
    gam = gamma.data[None, :, None, None]
    if training:
        mu = x.data.mean(axis=(0, 2, 3))
        var = x.data.var(axis=(0, 2, 3))
        inv = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mu[None, :, None, None]) * inv[None, :, None, None]
        running_mean += momentum * (mu - running_mean)
        running_var += momentum * (var - running_var)
    else:
        inv = 1.0 / np.sqrt(running_var + eps)
        xhat = (x.data - running_mean[None, :, None, None]) * inv[None, :, None, None]
    out = gam * xhat + beta.data[None, :, None, None]

    def backward(g):
        # float64 sums for the same reason as conv2d's weight gradient
        if gamma.requires_grad:
            _accum(gamma, (g * xhat).sum(axis=(0, 2, 3), dtype=np.float64))
        if beta.requires_grad:
            _accum(beta, g.sum(axis=(0, 2, 3), dtype=np.float64))
        if x.requires_grad:
            if training:
                dxhat = g * gam
                s1 = dxhat.sum(axis=(0, 2, 3), keepdims=True)
                s2 = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
                dx = (inv[None, :, None, None] / n) * (n * dxhat - s1 - xhat * s2)
            else:
                dx = g * gam * inv[None, :, None, None]
            _accum(x, dx)

    return _make(out, (x, gamma, beta), backward)


def l2_normalize_scale(x: Tensor, scale: Tensor, eps: float = 1e-10) -> Tensor:
    """Scale each spatial position's channel vector to a learned norm.

    Divides the channel vector at every (batch, y, x) by its Euclidean
    norm plus `eps`, then multiplies channelwise by `scale`.  A zero
    vector maps to a zero vector.
    """
    norm = np.sqrt((x.data * x.data).sum(axis=1, keepdims=True))
    denom = norm + eps
    unit = x.data / denom
    out = scale.data[None, :, None, None] * unit

    def backward(g):
        if scale.requires_grad:
            _accum(scale, (g * unit).sum(axis=(0, 2, 3), dtype=np.float64))
        if x.requires_grad:
            sg = scale.data[None, :, None, None] * g
            dot = (sg * x.data).sum(axis=1, keepdims=True)
            safe = np.maximum(norm, np.asarray(1e-30, dtype=norm.dtype))
            dx = sg / denom - x.data * (dot / (safe * denom * denom))
            _accum(x, dx)

    return _make(out, (x, scale), backward)


# ---------------------------------------------------------------------------
# pointwise and shape ops


def relu(x: Tensor) -> Tensor:
    out = np.maximum(x.data, 0)

    def backward(g):
        if x.requires_grad:
            _accum(x, g * (x.data > 0))

    return _make(out, (x,), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ConfigError(f"add: shapes {a.data.shape} and {b.data.shape} differ")

    def backward(g):
        if a.requires_grad:
            _accum(a, g)
        if b.requires_grad:
            _accum(b, g)

    return _make(a.data + b.data, (a, b), backward)


def scale(x: Tensor, c: float) -> Tensor:
    def backward(g):
        if x.requires_grad:
            _accum(x, g * c)

    return _make(x.data * c, (x,), backward)


def tsum(x: Tensor) -> Tensor:
    def backward(g):
        if x.requires_grad:
            _accum(x, np.broadcast_to(g, x.data.shape).astype(x.data.dtype, copy=True))

    return _make(np.asarray(x.data.sum(), dtype=x.data.dtype), (x,), backward)


def reshape(x: Tensor, shape: tuple) -> Tensor:
    def backward(g):
        if x.requires_grad:
            _accum(x, g.reshape(x.data.shape))

    return _make(np.ascontiguousarray(x.data.reshape(shape)), (x,), backward)


def transpose(x: Tensor, axes: tuple) -> Tensor:
    inv = tuple(np.argsort(axes))

    def backward(g):
        if x.requires_grad:
            _accum(x, np.ascontiguousarray(g.transpose(inv)))

    return _make(np.ascontiguousarray(x.data.transpose(axes)), (x,), backward)


def concat(xs: list, axis: int = 1) -> Tensor:
    shapes = [t.data.shape for t in xs]
    ref = list(shapes[0])
    for s in shapes[1:]:
        got = list(s)
        if len(got) != len(ref) or any(g != r for i, (g, r) in enumerate(zip(got, ref)) if i != axis):
            raise ConfigError(f"concat: incompatible shapes {shapes} along axis {axis}")
    out = np.concatenate([t.data for t in xs], axis=axis)
    sizes = [s[axis] for s in shapes]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(xs, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                _accum(t, np.ascontiguousarray(g[tuple(idx)]))

    return _make(out, tuple(xs), backward)


def take_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows of a 2-D tensor; duplicate indices sum in the gradient."""
    idx = np.asarray(idx, dtype=np.int64)

    def backward(g):
        if x.requires_grad:
            dx = np.zeros_like(x.data)
            np.add.at(dx, idx, g)
            _accum(x, dx)

    return _make(x.data[idx], (x,), backward)


# ---------------------------------------------------------------------------
# losses


def smooth_l1_sum(pred: Tensor, target: np.ndarray) -> Tensor:
    """Sum of Huber-style smooth L1 over all elements.

    Quadratic inside the unit interval, linear outside; the gradient is
    the elementwise difference clipped to [-1, 1].
    """
    d = pred.data - target
    a = np.abs(d)
    per = np.where(a < 1.0, 0.5 * d * d, a - 0.5)

    def backward(g):
        if pred.requires_grad:
            _accum(pred, np.clip(d, -1.0, 1.0) * g)

    return _make(np.asarray(per.sum(), dtype=pred.data.dtype), (pred,), backward)


def softmax_cross_entropy_sum(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Sum of per-row softmax cross-entropy for integer labels.

    Uses the max-shift for stability; gradient is softmax minus one-hot.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n, k = logits.data.shape
    if labels.shape != (n,):
        raise DataError(f"labels shape {labels.shape} does not match {n} rows")
    if n and (labels.min() < 0 or labels.max() >= k):
        raise DataError(f"label out of range for {k} classes")
    m = logits.data.max(axis=1, keepdims=True)
    z = logits.data - m
    e = np.exp(z)
    se = e.sum(axis=1, keepdims=True)
    rows = np.arange(n)
    loss = (np.log(se[:, 0]) - z[rows, labels]).sum()

    def backward(g):
        if logits.requires_grad:
            d = e / se
            d[rows, labels] -= 1.0
            _accum(logits, d * g)

    return _make(np.asarray(loss, dtype=logits.data.dtype), (logits,), backward)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Plain numpy row softmax (inference scoring, no graph)."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_rows(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-row cross-entropy as plain numpy (used to rank negatives)."""
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    return lse - z[np.arange(len(labels)), labels]


# ---------------------------------------------------------------------------
# optimizer


class SGD:
    """SGD with classical momentum and coupled L2 weight decay.

    Per step: ``v = momentum*v + (grad + weight_decay*param)`` then
    ``param -= lr*v``.  Velocity buffers live with the optimizer, one per
    parameter, and start at zero.

    Velocity is held in float64 and the parameter update rounds exactly
    once at the write-back.  Together with the float64 gradient reductions
    in the ops, this keeps a step bit-identical whether its gradient came
    from one batch or was accumulated over micro-batches of the same
    images.
    """

    def __init__(self, params: list, lr: float, momentum: float = 0.9, weight_decay: float = 0.0):
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = [np.zeros(p.data.shape, dtype=np.float64) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        for p, v in zip(self.params, self.velocity):
            v *= self.momentum
            if p.grad is not None:
                v += p.grad
            v += self.weight_decay * p.data.astype(np.float64)
            p.data[...] = (p.data - self.lr * v).astype(p.data.dtype)
