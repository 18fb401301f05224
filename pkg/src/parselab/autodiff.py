"""Reverse-mode automatic differentiation over dense float64 vectors/matrices.

Everything is a 2-D array; column vectors have shape (n, 1). Ops build a
backward graph of Tensor nodes; backward() accumulates gradients into leaf
tensors (parameters and inputs). Gradients accumulate additively across
backward calls until the optimizer consumes them.
"""

import numpy as np


class Tensor:
    """A value in the computation graph.

    grad is None until a backward pass reaches this tensor; None means zero.
    Only leaf tensors (no parents) receive gradient accumulation.
    """

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents=(), backward_fn=None):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"tensors are 2-D, got shape {data.shape}")
        self.data = data
        self.grad = None
        self._parents = parents
        self._backward = backward_fn

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


def tensor(values):
    """Leaf tensor from array-like; lists become column vectors."""
    data = np.asarray(values, dtype=np.float64)
    if data.ndim == 0:
        data = data.reshape(1, 1)
    elif data.ndim == 1:
        data = data.reshape(-1, 1)
    return Tensor(data)


def zeros(rows, cols=1):
    return Tensor(np.zeros((rows, cols)))


def _check_same_shape(a, b, op):
    if a.data.shape != b.data.shape:
        raise ValueError(f"{op}: shape mismatch {a.data.shape} vs {b.data.shape}")


def affine(w, x, b):
    """w @ x + b for w (m,n), x (n,1), b (m,1)."""
    m, n = w.data.shape
    if x.data.shape != (n, 1) or b.data.shape != (m, 1):
        raise ValueError(
            f"affine: W {w.data.shape} incompatible with x {x.data.shape}, b {b.data.shape}"
        )
    out = w.data @ x.data + b.data

    def bwd(g, acc):
        acc[id(w)] += g @ x.data.T
        acc[id(x)] += w.data.T @ g
        acc[id(b)] += g

    return Tensor(out, (w, x, b), bwd)


def add(a, b):
    _check_same_shape(a, b, "add")

    def bwd(g, acc):
        acc[id(a)] += g
        acc[id(b)] += g

    return Tensor(a.data + b.data, (a, b), bwd)


def sub(a, b):
    _check_same_shape(a, b, "sub")

    def bwd(g, acc):
        acc[id(a)] += g
        acc[id(b)] -= g

    return Tensor(a.data - b.data, (a, b), bwd)


def mul(a, b):
    """Elementwise (Hadamard) product."""
    _check_same_shape(a, b, "mul")

    def bwd(g, acc):
        acc[id(a)] += g * b.data
        acc[id(b)] += g * a.data

    return Tensor(a.data * b.data, (a, b), bwd)


def scale(x, k):
    k = float(k)

    def bwd(g, acc):
        acc[id(x)] += g * k

    return Tensor(x.data * k, (x,), bwd)


def tanh_op(x):
    y = np.tanh(x.data)

    def bwd(g, acc):
        acc[id(x)] += g * (1.0 - y * y)

    return Tensor(y, (x,), bwd)


def _sigmoid(a):
    # split form avoids overflow in exp for large |a|
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def sigmoid_op(x):
    y = _sigmoid(x.data)

    def bwd(g, acc):
        acc[id(x)] += g * y * (1.0 - y)

    return Tensor(y, (x,), bwd)


def relu_op(x):
    mask = x.data > 0

    def bwd(g, acc):
        acc[id(x)] += g * mask

    return Tensor(x.data * mask, (x,), bwd)


def concat(xs):
    """Stack column vectors vertically."""
    xs = list(xs)
    if not xs:
        raise ValueError("concat: empty input")
    for x in xs:
        if x.data.shape[1] != 1:
            raise ValueError(f"concat: column vectors only, got {x.data.shape}")
    sizes = [x.data.shape[0] for x in xs]
    offsets = np.cumsum([0] + sizes)

    def bwd(g, acc):
        for x, lo, hi in zip(xs, offsets[:-1], offsets[1:]):
            acc[id(x)] += g[lo:hi]

    return Tensor(np.vstack([x.data for x in xs]), tuple(xs), bwd)


def sum_all(x):
    """Sum of all entries, as a (1,1) scalar."""

    def bwd(g, acc):
        acc[id(x)] += g[0, 0]

    return Tensor(np.array([[x.data.sum()]]), (x,), bwd)


def pick(x, i):
    """Entry i of a column vector, as a (1,1) scalar."""
    if x.data.shape[1] != 1:
        raise ValueError(f"pick: column vector expected, got {x.data.shape}")

    def bwd(g, acc):
        acc[id(x)][i, 0] += g[0, 0]

    return Tensor(x.data[i:i + 1, :].copy(), (x,), bwd)


def lookup_row(table, i):
    """Row i of a (V, d) table as a (d, 1) column vector."""

    def bwd(g, acc):
        acc[id(table)][i, :] += g[:, 0]

    return Tensor(table.data[i:i + 1, :].T.copy(), (table,), bwd)


class LstmCellParams:
    """Input/forget/output/candidate gate weights for one LSTM cell.

    Each gate weight has shape (d_h, d_in + d_h) and acts on [x; h].
    Forget-gate bias starts at 1.0; the others at 0.
    """

    def __init__(self, store, prefix, d_in, d_h):
        self.d_in = d_in
        self.d_h = d_h
        self.wi = store.add(f"{prefix}.Wi", d_h, d_in + d_h)
        self.bi = store.add(f"{prefix}.bi", d_h, 1, init="zeros")
        self.wf = store.add(f"{prefix}.Wf", d_h, d_in + d_h)
        self.bf = store.add(f"{prefix}.bf", d_h, 1, init="ones")
        self.wo = store.add(f"{prefix}.Wo", d_h, d_in + d_h)
        self.bo = store.add(f"{prefix}.bo", d_h, 1, init="zeros")
        self.wg = store.add(f"{prefix}.Wg", d_h, d_in + d_h)
        self.bg = store.add(f"{prefix}.bg", d_h, 1, init="zeros")


def lstm_step(params, state, x):
    """One LSTM step: returns (h', c') from state (h, c) and input x.

    c' = f*c + i*g, h' = o*tanh(c') with sigmoid gates i, f, o and tanh
    candidate g, all computed from [x; h].
    """
    h, c = state
    d_in, d_h = params.d_in, params.d_h
    if x.data.shape != (d_in, 1):
        raise ValueError(f"lstm_step: input shape {x.data.shape}, expected ({d_in}, 1)")
    if h.data.shape != (d_h, 1) or c.data.shape != (d_h, 1):
        raise ValueError(f"lstm_step: state shapes {h.data.shape}/{c.data.shape}, expected ({d_h}, 1)")

    z = np.vstack([x.data, h.data])
    gi = _sigmoid(params.wi.data @ z + params.bi.data)
    gf = _sigmoid(params.wf.data @ z + params.bf.data)
    go = _sigmoid(params.wo.data @ z + params.bo.data)
    gg = np.tanh(params.wg.data @ z + params.bg.data)
    c_new = gf * c.data + gi * gg
    t = np.tanh(c_new)
    h_new = go * t

    parents = (x, h, c, params.wi, params.bi, params.wf, params.bf,
               params.wo, params.bo, params.wg, params.bg)

    def propagate(gh, gc, acc):
        # shared backward for both outputs; gh/gc may be zero arrays
        dao = gh * t * go * (1.0 - go)
        gc_tot = gc + gh * go * (1.0 - t * t)
        daf = gc_tot * c.data * gf * (1.0 - gf)
        dai = gc_tot * gg * gi * (1.0 - gi)
        dag = gc_tot * gi * (1.0 - gg * gg)
        gz = (params.wi.data.T @ dai + params.wf.data.T @ daf
              + params.wo.data.T @ dao + params.wg.data.T @ dag)
        acc[id(x)] += gz[:d_in]
        acc[id(h)] += gz[d_in:]
        acc[id(c)] += gc_tot * gf
        acc[id(params.wi)] += dai @ z.T
        acc[id(params.bi)] += dai
        acc[id(params.wf)] += daf @ z.T
        acc[id(params.bf)] += daf
        acc[id(params.wo)] += dao @ z.T
        acc[id(params.bo)] += dao
        acc[id(params.wg)] += dag @ z.T
        acc[id(params.bg)] += dag

    zero = np.zeros((d_h, 1))

    def bwd_h(g, acc):
        propagate(g, zero, acc)

    def bwd_c(g, acc):
        propagate(zero, g, acc)

    return Tensor(h_new, parents, bwd_h), Tensor(c_new, parents, bwd_c)


def run_lstm(params, xs, direction="forward"):
    """Run an LSTM over a sequence; output is index-aligned with the input.

    forward: out[i] is the state after consuming xs[0..i].
    backward: out[i] is the state after consuming xs[n-1..i].
    """
    xs = list(xs)
    if not xs:
        raise ValueError("run_lstm: empty sequence")
    if direction not in ("forward", "backward"):
        raise ValueError(f"run_lstm: unknown direction {direction!r}")
    h = zeros(params.d_h)
    c = zeros(params.d_h)
    seq = xs if direction == "forward" else reversed(xs)
    out = []
    for x in seq:
        h, c = lstm_step(params, (h, c), x)
        out.append(h)
    if direction == "backward":
        out.reverse()
    return out


def _topo_order(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss):
    """Accumulate d(loss)/d(leaf) into every reachable leaf tensor's grad.

    Repeated calls accumulate additively; the optimizer zeroes grads.
    """
    if loss.data.shape != (1, 1):
        raise ValueError(f"backward: loss must be (1,1), got {loss.data.shape}")
    order = _topo_order(loss)
    acc = {id(t): np.zeros_like(t.data) for t in order}
    acc[id(loss)][0, 0] = 1.0
    for t in reversed(order):
        if t._backward is not None:
            t._backward(acc[id(t)], acc)
    for t in order:
        if not t._parents:
            g = acc[id(t)]
            t.grad = g if t.grad is None else t.grad + g


class ParameterStore:
    """Named trainable tensors plus per-parameter Adam state."""

    def __init__(self, seed=0):
        self._params = {}
        self._adam = {}  # name -> [m, v, step]
        self._rng = np.random.default_rng(seed)

    def add(self, name, rows, cols, init="glorot"):
        if name in self._params:
            raise ValueError(f"duplicate parameter {name!r}")
        if init == "glorot":
            s = np.sqrt(6.0 / (rows + cols))
            data = self._rng.uniform(-s, s, size=(rows, cols))
        elif init == "zeros":
            data = np.zeros((rows, cols))
        elif init == "ones":
            data = np.ones((rows, cols))
        else:
            raise ValueError(f"unknown init {init!r}")
        t = Tensor(data)
        self._params[name] = t
        self._adam[name] = [np.zeros((rows, cols)), np.zeros((rows, cols)), 0]
        return t

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def step_count(self, name):
        return self._adam[name][2]

    def zero_grads(self):
        for t in self._params.values():
            t.grad = None

    def copy_values(self):
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_values(self, values):
        for name, t in self._params.items():
            t.data[...] = values[name]


def adam_step(store, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
    """Adam update with bias correction; zeroes gradients afterward.

    Parameters whose gradient is absent or identically zero are skipped
    (their moments and step count stay put), so an all-zero gradient
    leaves the model unchanged.
    """
    for name, t in store._params.items():
        g = t.grad
        if g is None or not g.any():
            continue
        state = store._adam[name]
        state[2] += 1
        m, v, step = state
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        mhat = m / (1.0 - beta1 ** step)
        vhat = v / (1.0 - beta2 ** step)
        t.data -= lr * mhat / (np.sqrt(vhat) + eps)
    store.zero_grads()
