"""Minimal trainable numeric kernel: tape-based reverse-mode autodiff over
numpy arrays, with exactly the operations the span-prediction network needs
(dense, LSTM/BLSTM, softmax, cross-entropy, dropout, context-to-query
attention) plus the ADADELTA update and a finite-difference gradient checker.

Everything runs in double precision; determinism requires single-threaded
use and explicit seeded Generators for dropout and initialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class Tensor:
    """Node of the computation tape.

    `values` is a numpy array; `grad` is filled lazily during backward.
    Leaf tensors created with requires_grad=True are trainable parameters.
    """

    __slots__ = ("values", "grad", "_parents", "_backward", "requires_grad")

    def __init__(self, values, parents=(), backward=None, requires_grad=False):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self) -> None:
        self.grad = None

    def _accum(self, g: np.ndarray) -> None:
        g = _unbroadcast(g, self.values.shape)
        if self.grad is None:
            # copy: g may alias the child's gradient buffer
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    # operator sugar
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return add(self, mul(_as_tensor(other), _as_tensor(-1.0)))

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return mul(_as_tensor(other), self)

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))

    def __getitem__(self, idx):
        return getitem(self, idx)

    def backward(self) -> None:
        backward(self)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the shape of its source."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.values + b.values, (a, b))

    def bw(g):
        if a.requires_grad:
            a._accum(g)
        if b.requires_grad:
            b._accum(g)

    out._backward = bw
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.values * b.values, (a, b))

    def bw(g):
        if a.requires_grad:
            a._accum(g * b.values)
        if b.requires_grad:
            b._accum(g * a.values)

    out._backward = bw
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.values @ b.values, (a, b))
    av, bv = a.values, b.values

    def bw(g):
        if a.requires_grad:
            if av.ndim == 2 and bv.ndim == 2:
                a._accum(g @ bv.T)
            elif av.ndim == 2 and bv.ndim == 1:
                a._accum(np.outer(g, bv))
            elif av.ndim == 1 and bv.ndim == 2:
                a._accum(bv @ g)
            else:  # 1D . 1D
                a._accum(g * bv)
        if b.requires_grad:
            if av.ndim == 2 and bv.ndim == 2:
                b._accum(av.T @ g)
            elif av.ndim == 2 and bv.ndim == 1:
                b._accum(av.T @ g)
            elif av.ndim == 1 and bv.ndim == 2:
                b._accum(np.outer(av, g))
            else:
                b._accum(g * av)

    out._backward = bw
    return out


def getitem(a: Tensor, idx) -> Tensor:
    out = Tensor(a.values[idx], (a,))

    def bw(g):
        if a.requires_grad:
            # accumulate in place; basic indexing never repeats positions
            if a.grad is None:
                a.grad = np.zeros_like(a.values)
            a.grad[idx] += g

    out._backward = bw
    return out


def reshape(a: Tensor, shape) -> Tensor:
    out = Tensor(a.values.reshape(shape), (a,))

    def bw(g):
        if a.requires_grad:
            a._accum(g.reshape(a.values.shape))

    out._backward = bw
    return out


def transpose(a: Tensor) -> Tensor:
    out = Tensor(a.values.T, (a,))

    def bw(g):
        if a.requires_grad:
            a._accum(g.T)

    out._backward = bw
    return out


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.concatenate([t.values for t in tensors], axis=axis), tuple(tensors))
    sizes = [t.values.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(lo, hi)
                t._accum(g[tuple(sl)])

    out._backward = bw
    return out


def stack(tensors: list[Tensor]) -> Tensor:
    out = Tensor(np.stack([t.values for t in tensors]), tuple(tensors))

    def bw(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accum(g[i])

    out._backward = bw
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.values))
    out = Tensor(s, (a,))

    def bw(g):
        if a.requires_grad:
            a._accum(g * s * (1.0 - s))

    out._backward = bw
    return out


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.values)
    out = Tensor(t, (a,))

    def bw(g):
        if a.requires_grad:
            a._accum(g * (1.0 - t * t))

    out._backward = bw
    return out


def tsum(a: Tensor) -> Tensor:
    out = Tensor(a.values.sum(), (a,))

    def bw(g):
        if a.requires_grad:
            a._accum(np.full_like(a.values, float(g)))

    out._backward = bw
    return out


def softmax(logits: Tensor) -> Tensor:
    """Numerically stable softmax over a 1D logit vector."""
    z = logits.values - logits.values.max()
    e = np.exp(z)
    p = e / e.sum()
    out = Tensor(p, (logits,))

    def bw(g):
        if logits.requires_grad:
            logits._accum(p * (g - np.dot(g, p)))

    out._backward = bw
    return out


def softmax_rows(logits: Tensor) -> Tensor:
    """Row-wise softmax over a 2D tensor."""
    z = logits.values - logits.values.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    out = Tensor(p, (logits,))

    def bw(g):
        if logits.requires_grad:
            logits._accum(p * (g - np.sum(g * p, axis=1, keepdims=True)))

    out._backward = bw
    return out


def cross_entropy(probs: Tensor, target: int) -> Tensor:
    """-log p[target], with the probability clamped at 1e-12 from below."""
    p = float(probs.values[target])
    clamped = max(p, 1e-12)
    out = Tensor(-math.log(clamped), (probs,))

    def bw(g):
        if probs.requires_grad and p >= 1e-12:
            full = np.zeros_like(probs.values)
            full[target] = -float(g) / clamped
            probs._accum(full)

    out._backward = bw
    return out


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: zero entries with probability `rate` and scale
    survivors by 1/(1-rate); identity in evaluation mode."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.values.shape) >= rate) / (1.0 - rate)
    return mul(x, Tensor(mask))


def dense_forward(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    return add(matmul(W, x), b)


def backward(loss: Tensor) -> None:
    """Reverse-mode sweep from a scalar loss through the whole tape."""
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack_ = [loss]
    while stack_:
        node = stack_[-1]
        if id(node) in seen:
            stack_.pop()
            continue
        ready = True
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack_.append(p)
                ready = False
        if ready:
            seen.add(id(node))
            stack_.pop()
            topo.append(node)
    loss.grad = np.ones_like(loss.values)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


# ---------------------------------------------------------------------------
# LSTM / BLSTM


@dataclass
class LstmParams:
    """Fused gate parameters: W is (4H, D+H) with gate order i, f, o, g."""

    W: Tensor
    b: Tensor
    hidden: int


def init_lstm(input_dim: int, hidden: int, rng: np.random.Generator) -> LstmParams:
    return LstmParams(
        W=uniform_param((4 * hidden, input_dim + hidden), input_dim + hidden, rng),
        b=uniform_param((4 * hidden,), input_dim + hidden, rng),
        hidden=hidden,
    )


def uniform_param(shape, fan_in: int, rng: np.random.Generator) -> Tensor:
    bound = 1.0 / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def lstm_step(x: Tensor, h_prev: Tensor, c_prev: Tensor, params: LstmParams) -> tuple[Tensor, Tensor]:
    H = params.hidden
    z = add(matmul(params.W, concat([x, h_prev])), params.b)
    i = sigmoid(z[0:H])
    f = sigmoid(z[H : 2 * H])
    o = sigmoid(z[2 * H : 3 * H])
    g = tanh(z[3 * H : 4 * H])
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


@dataclass
class BlstmParams:
    fwd: LstmParams
    bwd: LstmParams


def init_blstm(input_dim: int, hidden: int, rng: np.random.Generator) -> BlstmParams:
    return BlstmParams(init_lstm(input_dim, hidden, rng), init_lstm(input_dim, hidden, rng))


def _lstm_run_matrix(X: Tensor, params: LstmParams, reverse: bool = False) -> list[Tensor]:
    """Unidirectional pass over the rows of X (T x D).

    The input-side product for all timesteps is batched into one matmul;
    only the recurrent product stays sequential.
    """
    T, D = X.shape
    H = params.hidden
    Wx = params.W[:, :D]
    Wh = params.W[:, D:]
    Zx = matmul(X, transpose(Wx))  # T x 4H
    h = Tensor(np.zeros(H))
    c = Tensor(np.zeros(H))
    outputs: list[Tensor | None] = [None] * T
    order = range(T - 1, -1, -1) if reverse else range(T)
    for t in order:
        z = add(add(Zx[t], matmul(Wh, h)), params.b)
        i = sigmoid(z[0:H])
        f = sigmoid(z[H : 2 * H])
        o = sigmoid(z[2 * H : 3 * H])
        g = tanh(z[3 * H : 4 * H])
        c = add(mul(f, c), mul(i, g))
        h = mul(o, tanh(c))
        outputs[t] = h
    return outputs  # type: ignore[return-value]


def blstm_matrix(X: Tensor, params: BlstmParams) -> Tensor:
    """BLSTM over the rows of X; returns a (T, 2*hidden) tensor."""
    fwd = _lstm_run_matrix(X, params.fwd)
    bwd = _lstm_run_matrix(X, params.bwd, reverse=True)
    return concat([stack(fwd), stack(bwd)], axis=1)


def blstm_forward(seq: list[Tensor], params: BlstmParams) -> list[Tensor]:
    """Per timestep concat of the forward pass and the reversed backward pass;
    output width is 2x hidden."""
    M = blstm_matrix(stack(seq), params)
    return [M[t] for t in range(len(seq))]


# ---------------------------------------------------------------------------
# Context-to-query attention


def c2q_attention(context, question, ws: Tensor) -> Tensor:
    """Attend each context vector over the question vectors.

    Scores are s_tj = ws . [h_t; u_j; h_t*u_j] with a single trainable
    weight vector; each context position gets the softmax-weighted sum of
    the question vectors.  Accepts 2D tensors or lists of 1D tensors and
    returns a (T, d) tensor.
    """
    H = stack(context) if isinstance(context, list) else context
    U = stack(question) if isinstance(question, list) else question
    T, d = H.shape
    J = U.shape[0]
    w_h, w_u, w_hu = ws[0:d], ws[d : 2 * d], ws[2 * d : 3 * d]
    # s_tj decomposes into a context term, a question term and a bilinear term
    scores = add(
        add(reshape(matmul(H, w_h), (T, 1)), reshape(matmul(U, w_u), (1, J))),
        matmul(mul(H, w_hu), transpose(U)),
    )
    return matmul(softmax_rows(scores), U)


# ---------------------------------------------------------------------------
# ADADELTA


@dataclass
class AdadeltaState:
    """Per-parameter running averages of squared gradients and updates."""

    lr: float = 0.5
    rho: float = 0.95
    eps: float = 1e-6
    eg2: dict[str, np.ndarray] = field(default_factory=dict)
    edx2: dict[str, np.ndarray] = field(default_factory=dict)


def adadelta_step(params: dict[str, Tensor], state: AdadeltaState) -> None:
    """One ADADELTA update for every parameter, in place; gradients of None
    count as zero (averages still decay)."""
    one_minus_rho = 1.0 - state.rho
    for name, p in params.items():
        eg2 = state.eg2.setdefault(name, np.zeros_like(p.values))
        edx2 = state.edx2.setdefault(name, np.zeros_like(p.values))
        eg2 *= state.rho
        if p.grad is None:
            edx2 *= state.rho
            continue
        g = p.grad
        g2 = np.multiply(g, g)
        g2 *= one_minus_rho
        eg2 += g2
        dx = np.sqrt((edx2 + state.eps) / (eg2 + state.eps))
        dx *= g
        edx2 *= state.rho
        dx2 = np.multiply(dx, dx)
        dx2 *= one_minus_rho
        edx2 += dx2
        dx *= -state.lr
        p.values += dx


def zero_grads(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.zero_grad()


# ---------------------------------------------------------------------------
# Gradient verification


def finite_difference_check(
    loss_fn,
    params: dict[str, Tensor],
    eps: float = 1e-5,
    max_coords_per_tensor: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare analytic gradients against central finite differences.

    loss_fn() must rebuild the graph from the current parameter values and
    return a scalar Tensor, deterministically.  Returns the maximum relative
    error over all checked coordinates.
    """
    zero_grads(params)
    loss = loss_fn()
    backward(loss)
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.values))
        for name, p in params.items()
    }
    worst = 0.0
    for name, p in params.items():
        flat = p.values.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords_per_tensor is not None and flat.size > max_coords_per_tensor:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(flat.size, size=max_coords_per_tensor, replace=False)
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + eps
            up = float(loss_fn().values)
            flat[idx] = orig - eps
            down = float(loss_fn().values)
            flat[idx] = orig
            fd = (up - down) / (2.0 * eps)
            an = analytic[name].reshape(-1)[idx]
            rel = abs(an - fd) / max(abs(an), abs(fd), 1e-6)
            worst = max(worst, rel)
    return worst
