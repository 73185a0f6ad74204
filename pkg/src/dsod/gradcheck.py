"""Finite-difference verification of every autodiff op.

Each registered check builds a small float64 problem, runs the analytic
backward pass, then perturbs every input element by +/-h and compares
against the central difference.  Non-loss ops are probed through a
smooth-L1 distance to a fixed random target so that each output element
receives a distinct incoming gradient; a plain sum would let transposed
or permuted gradients slip through.

Inputs are drawn to stay away from the kinks: relu inputs keep a margin
from zero, pooling inputs are distinct by construction, and smooth-L1
residuals avoid the unit boundary.  At h=1e-4 in float64 the central
difference is accurate to roughly 1e-8, so the 1e-4 acceptance threshold
has four orders of headroom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError

THRESHOLD = 1e-4


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    passed: bool


def gradcheck(f, arrays: list, h: float = 1e-4) -> float:
    """Max relative error between analytic and central-difference grads.

    ``f`` maps a list of Tensors to a scalar Tensor.  Arrays are promoted
    to float64.  The relative error denominator is floored at 1e-3 so that
    near-zero gradient elements compare absolutely.
    """
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    inputs = [T.Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = f(inputs)
    out.backward()
    analytic = [
        t.grad if t.grad is not None else np.zeros_like(t.data) for t in inputs
    ]

    worst = 0.0
    for i, base in enumerate(arrays):
        numeric = np.zeros_like(base)
        flat = numeric.reshape(-1)
        with T.no_grad():
            for j in range(base.size):
                probe = [a.copy() for a in arrays]
                pr = probe[i].reshape(-1)
                pr[j] = base.reshape(-1)[j] + h
                up = f([T.Tensor(a) for a in probe]).item()
                pr[j] = base.reshape(-1)[j] - h
                dn = f([T.Tensor(a) for a in probe]).item()
                flat[j] = (up - dn) / (2.0 * h)
        diff = np.abs(analytic[i] - numeric)
        denom = np.maximum(np.abs(analytic[i]) + np.abs(numeric), 1e-3)
        worst = max(worst, float((diff / denom).max()))
    return worst


def _probe(op, rng, *arrays):
    """Wrap a tensor op into a scalar loss with elementwise-distinct grads."""
    with T.no_grad():
        ref = op([T.Tensor(a.astype(np.float64)) for a in arrays]).data
    target = ref + rng.uniform(-0.8, 0.8, size=ref.shape)

    def f(inputs):
        return T.smooth_l1_sum(op(inputs), target)

    return f, list(arrays)


# --- check builders, one per op ------------------------------------------


def _chk_conv2d_s1(rng):
    x = rng.standard_normal((2, 3, 5, 5))
    w = rng.standard_normal((4, 3, 3, 3)) * 0.5
    return _probe(lambda i: T.conv2d(i[0], i[1], stride=1, padding=1), rng, x, w)


def _chk_conv2d_s2(rng):
    x = rng.standard_normal((2, 2, 6, 6))
    w = rng.standard_normal((3, 2, 3, 3)) * 0.5
    return _probe(lambda i: T.conv2d(i[0], i[1], stride=2, padding=0), rng, x, w)


def _chk_conv2d_bias(rng):
    x = rng.standard_normal((1, 2, 4, 4))
    w = rng.standard_normal((3, 2, 1, 1)) * 0.5
    b = rng.standard_normal(3)
    return _probe(lambda i: T.conv2d(i[0], i[1], i[2], stride=1, padding=0), rng, x, w, b)


def _distinct(rng, shape):
    vals = rng.permutation(int(np.prod(shape))).astype(np.float64)
    return (vals * 0.05).reshape(shape)


def _chk_maxpool_s2(rng):
    # odd extent exercises the ceil-mode clipped edge window
    x = _distinct(rng, (2, 2, 5, 5))
    return _probe(lambda i: T.maxpool2d(i[0], 2, 2), rng, x)


def _chk_maxpool_overlap(rng):
    x = _distinct(rng, (1, 2, 4, 4))
    return _probe(lambda i: T.maxpool2d(i[0], 3, 1), rng, x)


def _chk_batchnorm_train(rng):
    x = rng.standard_normal((3, 4, 3, 3))
    g = rng.uniform(0.5, 1.5, 4)
    b = rng.standard_normal(4)

    def op(i):
        rm = np.zeros(4)
        rv = np.ones(4)
        return T.batchnorm(i[0], i[1], i[2], rm, rv, training=True)

    return _probe(op, rng, x, g, b)


def _chk_batchnorm_infer(rng):
    x = rng.standard_normal((2, 3, 4, 4))
    g = rng.uniform(0.5, 1.5, 3)
    b = rng.standard_normal(3)
    rm = rng.standard_normal(3) * 0.3
    rv = rng.uniform(0.5, 2.0, 3)

    def op(i):
        return T.batchnorm(i[0], i[1], i[2], rm.copy(), rv.copy(), training=False)

    return _probe(op, rng, x, g, b)


def _chk_relu(rng):
    mag = rng.uniform(0.1, 1.0, (2, 3, 4, 4))
    x = mag * np.where(rng.random((2, 3, 4, 4)) < 0.5, -1.0, 1.0)
    return _probe(lambda i: T.relu(i[0]), rng, x)


def _chk_l2norm(rng):
    x = rng.standard_normal((2, 5, 3, 3))
    s = rng.uniform(1.0, 3.0, 5)
    return _probe(lambda i: T.l2_normalize_scale(i[0], i[1]), rng, x, s)


def _chk_add(rng):
    a = rng.standard_normal((2, 3, 2, 2))
    b = rng.standard_normal((2, 3, 2, 2))
    return _probe(lambda i: T.add(i[0], i[1]), rng, a, b)


def _chk_concat(rng):
    a = rng.standard_normal((2, 2, 3, 3))
    b = rng.standard_normal((2, 4, 3, 3))
    c = rng.standard_normal((2, 1, 3, 3))
    return _probe(lambda i: T.concat([i[0], i[1], i[2]], axis=1), rng, a, b, c)


def _chk_reshape_transpose(rng):
    x = rng.standard_normal((2, 4, 3, 3))
    return _probe(
        lambda i: T.reshape(T.transpose(i[0], (0, 2, 3, 1)), (2 * 3 * 3, 4)), rng, x
    )


def _chk_take_rows(rng):
    x = rng.standard_normal((8, 5))
    idx = np.array([0, 3, 3, 7, 1])  # duplicate row: grads must sum
    return _probe(lambda i: T.take_rows(i[0], idx), rng, x)


def _chk_smooth_l1(rng):
    # residuals keep clear of the quadratic/linear switch at |d| = 1
    d = rng.uniform(-0.8, 0.8, (6, 4))
    d[0] = rng.uniform(1.2, 2.0, 4)  # one row on the linear side
    x = rng.standard_normal((6, 4))
    target = x - d
    return (lambda i: T.smooth_l1_sum(i[0], target)), [x]


def _chk_softmax_ce(rng):
    x = rng.standard_normal((7, 5))
    labels = rng.integers(0, 5, 7)
    return (lambda i: T.softmax_cross_entropy_sum(i[0], labels)), [x]


def _chk_composite(rng):
    """Conv -> bn -> relu -> pool -> l2norm -> flatten -> both losses."""
    x = rng.standard_normal((2, 2, 6, 6))
    w = rng.standard_normal((4, 2, 3, 3)) * 0.5
    g = rng.uniform(0.5, 1.5, 4)
    b = rng.standard_normal(4)
    s = rng.uniform(1.0, 2.0, 4)
    labels = rng.integers(0, 4, 2 * 2 * 2)
    with T.no_grad():
        rm0 = np.zeros(4)
        rv0 = np.ones(4)
        c = T.conv2d(T.Tensor(x), T.Tensor(w), stride=1, padding=0)
        bn = T.batchnorm(c, T.Tensor(g), T.Tensor(b), rm0, rv0, training=True)
        pooled = T.maxpool2d(T.relu(bn), 2, 2)
        ref = T.l2_normalize_scale(pooled, T.Tensor(s)).data
    target = ref + rng.uniform(-0.5, 0.5, ref.shape)

    def f(i):
        rm = np.zeros(4)
        rv = np.ones(4)
        c = T.conv2d(i[0], i[1], stride=1, padding=0)
        bn = T.batchnorm(c, i[2], i[3], rm, rv, training=True)
        feat = T.l2_normalize_scale(T.maxpool2d(T.relu(bn), 2, 2), i[4])
        loc = T.smooth_l1_sum(feat, target)
        flat = T.reshape(T.transpose(feat, (0, 2, 3, 1)), (2 * 2 * 2, 4))
        ce = T.softmax_cross_entropy_sum(flat, labels)
        return T.add(T.scale(loc, 0.5), T.scale(ce, 0.5))

    return f, [x, w, g, b, s]


CHECKS = {
    "conv2d_s1": _chk_conv2d_s1,
    "conv2d_s2": _chk_conv2d_s2,
    "conv2d_bias": _chk_conv2d_bias,
    "maxpool2d_s2": _chk_maxpool_s2,
    "maxpool2d_overlap": _chk_maxpool_overlap,
    "batchnorm_train": _chk_batchnorm_train,
    "batchnorm_infer": _chk_batchnorm_infer,
    "relu": _chk_relu,
    "l2_normalize_scale": _chk_l2norm,
    "add": _chk_add,
    "concat": _chk_concat,
    "reshape_transpose": _chk_reshape_transpose,
    "take_rows": _chk_take_rows,
    "smooth_l1": _chk_smooth_l1,
    "softmax_cross_entropy": _chk_softmax_ce,
    "composite": _chk_composite,
}


def check_op(name: str, seed: int = 0) -> CheckResult:
    if name not in CHECKS:
        raise ConfigError(f"unknown gradcheck op {name!r}; known: {', '.join(sorted(CHECKS))}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, _op_index(name)]))
    f, arrays = CHECKS[name](rng)
    err = gradcheck(f, arrays)
    return CheckResult(name, err, err < THRESHOLD)


def _op_index(name: str) -> int:
    return sorted(CHECKS).index(name)


def run_all(seed: int = 0) -> list:
    return [check_op(name, seed) for name in sorted(CHECKS)]
