"""Reverse-mode differentiation over complex tensors, tape per forward pass.

Gradient convention (Wirtinger): the slot attached to a node z holds
dL/d(conj z) for the real scalar loss L, with z and conj(z) treated as
independent variables. For every op y = f(z, conj z) the chain rule is

    slot(z) += slot(y) * conj(dy/dz) + conj(slot(y)) * dy/d(conj z),

which reduces to slot(y) * conj(f'(z)) for holomorphic ops. backward() seeds
the loss slot with 0.5, which is exactly dL/d(conj L) for a real L; with that
seed the slot of every leaf is the true conjugate cogradient, so a descent
step is simply `param -= lr * grad`. Against central finite differences per
real coordinate the slot satisfies grad = (dL/dRe + 1j*dL/dIm) / 2.

Every value is stored complex128; conceptually real quantities (powers,
rates) are complex tensors with zero imaginary part, which keeps the rule set
uniform. One Tape records one forward pass; backward walks it once in reverse
construction order, so gradient accumulation order is fixed and runs are
bit-reproducible.
"""

import numpy as np

_C = np.complex128


class Var:
    """One tape node: a complex ndarray plus adjoint bookkeeping."""

    __slots__ = ("value", "tape", "grad", "_edges")

    def __init__(self, value, tape):
        self.value = np.asarray(value, dtype=_C)
        self.tape = tape
        self.grad = None
        self._edges = ()  # tuple of (parent Var, slot-increment fn)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return "Var(shape=%r)" % (self.value.shape,)


class Tape:
    """Ordered record of one forward pass."""

    def __init__(self):
        self.nodes = []

    def leaf(self, value):
        v = Var(value, self)
        self.nodes.append(v)
        return v

    def _record(self, value, edges):
        v = Var(value, self)
        v._edges = tuple(edges)
        self.nodes.append(v)
        return v

    def backward(self, loss):
        """Propagate adjoints from a real scalar loss to every node."""
        if loss.tape is not self:
            raise ValueError("loss node belongs to a different tape")
        if loss.value.size != 1:
            raise ValueError("loss must be scalar, got shape %r" % (loss.shape,))
        if abs(loss.value.reshape(()).imag) > 1e-9 * (1.0 + abs(loss.value.reshape(()).real)):
            raise ValueError("loss must be real")
        for node in self.nodes:
            node.grad = None
        loss.grad = np.full(loss.value.shape, 0.5, dtype=_C)
        for node in reversed(self.nodes):
            if node.grad is None:
                continue
            for parent, pull in node._edges:
                inc = pull(node.grad)
                if parent.grad is None:
                    parent.grad = np.zeros(parent.value.shape, dtype=_C)
                parent.grad += inc


def _same_tape(*vs):
    t = vs[0].tape
    for v in vs[1:]:
        if v.tape is not t:
            raise ValueError("operands live on different tapes")
    return t


def _same_shape(a, b, op):
    if a.value.shape != b.value.shape:
        raise ValueError("%s: shape mismatch %r vs %r"
                         % (op, a.value.shape, b.value.shape))


def add(a, b):
    t = _same_tape(a, b)
    _same_shape(a, b, "add")
    return t._record(a.value + b.value,
                     [(a, lambda g: g), (b, lambda g: g)])


def sub(a, b):
    t = _same_tape(a, b)
    _same_shape(a, b, "sub")
    return t._record(a.value - b.value,
                     [(a, lambda g: g), (b, lambda g: -g)])


def mul(a, b):
    """Elementwise product (holomorphic in both factors)."""
    t = _same_tape(a, b)
    _same_shape(a, b, "mul")
    av, bv = a.value, b.value
    return t._record(av * bv,
                     [(a, lambda g: g * bv.conj()),
                      (b, lambda g: g * av.conj())])


def div(a, b):
    t = _same_tape(a, b)
    _same_shape(a, b, "div")
    av, bv = a.value, b.value
    return t._record(av / bv,
                     [(a, lambda g: g * (1.0 / bv).conj()),
                      (b, lambda g: g * (-av / (bv * bv)).conj())])


def conj(a):
    return a.tape._record(a.value.conj(), [(a, lambda g: g.conj())])


def scale(a, c):
    """Multiply by a fixed python scalar (not differentiated)."""
    c = complex(c)
    return a.tape._record(a.value * c, [(a, lambda g: g * np.conj(c))])


def matmul(a, b):
    t = _same_tape(a, b)
    av, bv = a.value, b.value
    if av.ndim != 2 or bv.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    return t._record(av @ bv,
                     [(a, lambda g: g @ bv.conj().T),
                      (b, lambda g: av.conj().T @ g)])


def reshape(a, shape):
    old = a.value.shape
    return a.tape._record(a.value.reshape(shape),
                          [(a, lambda g: g.reshape(old))])


def sum_axis(a, axis, keepdims=False):
    """Sum-reduce over the named axis (or axes)."""
    axes = axis if isinstance(axis, tuple) else (axis,)
    val = a.value.sum(axis=axes, keepdims=keepdims)
    shape = a.value.shape

    def pull(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return np.broadcast_to(g, shape)

    return a.tape._record(val, [(a, pull)])


def broadcast_to(a, shape):
    """Explicit broadcast; the adjoint sums over the expanded axes."""
    src = a.value.shape
    val = np.broadcast_to(a.value, shape)
    lead = len(shape) - len(src)
    hot = tuple(range(lead)) + tuple(
        i + lead for i, s in enumerate(src) if s == 1 and shape[i + lead] != 1)

    def pull(g):
        if hot:
            g = g.sum(axis=hot, keepdims=False)
        return g.reshape(src)

    return a.tape._record(val.copy(), [(a, pull)])


def abs2(a):
    """z -> z * conj(z); real-valued output kept in complex storage.

    Non-holomorphic: dy/dz = conj(z) and dy/d(conj z) = z, so the adjoint is
    slot(y)*z + conj(slot(y))*z = 2*Re(slot(y))*z.
    """
    av = a.value
    val = (av.real * av.real + av.imag * av.imag).astype(_C)
    return a.tape._record(val, [(a, lambda g: 2.0 * g.real * av)])


def log1p(a):
    av = a.value
    return a.tape._record(np.log1p(av),
                          [(a, lambda g: g * (1.0 / (1.0 + av)).conj())])


def sqrt(a):
    val = np.sqrt(a.value)
    return a.tape._record(val, [(a, lambda g: g * (0.5 / val).conj())])


def leaky_relu_ri(a, slope=0.1):
    """Leaky rectifier applied to real and imaginary parts independently."""
    av = a.value
    fx = np.where(av.real > 0, 1.0, slope)
    fy = np.where(av.imag > 0, 1.0, slope)
    val = np.where(av.real > 0, av.real, slope * av.real) \
        + 1j * np.where(av.imag > 0, av.imag, slope * av.imag)
    return a.tape._record(val,
                          [(a, lambda g: fx * g.real + 1j * (fy * g.imag))])


def grad_check(fn, arrays, eps=1e-6):
    """Compare backward() against central finite differences.

    fn takes leaf Vars (one per input array, in order) and returns the loss
    Var; arrays are the complex input values. Differences are taken per real
    coordinate; the analytic slot must match (dL/dRe + 1j*dL/dIm)/2. Returns
    the max relative error over all coordinates of all inputs.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps outside the trustworthy range")
    arrays = [np.asarray(x, dtype=_C) for x in arrays]

    def value_at(xs):
        t = Tape()
        leaves = [t.leaf(x) for x in xs]
        return float(fn(*leaves).value.reshape(()).real)

    t = Tape()
    leaves = [t.leaf(x) for x in arrays]
    t.backward(fn(*leaves))
    analytic = [lf.grad if lf.grad is not None
                else np.zeros(lf.value.shape, dtype=_C) for lf in leaves]

    worst = 0.0
    for which, base in enumerate(arrays):
        fd = np.zeros(base.shape, dtype=_C)
        flat = base.reshape(-1)
        for idx in range(flat.size):
            for part, step in ((1.0, eps), (1j, eps)):
                bump = np.zeros_like(flat)
                bump[idx] = part * step
                xs_p = list(arrays)
                xs_m = list(arrays)
                xs_p[which] = (flat + bump).reshape(base.shape)
                xs_m[which] = (flat - bump).reshape(base.shape)
                d = (value_at(xs_p) - value_at(xs_m)) / (2.0 * step)
                fd.reshape(-1)[idx] += 0.5 * d * part
        scale_ref = max(np.abs(fd).max(), np.abs(analytic[which]).max(), 1e-12)
        worst = max(worst, float(np.abs(analytic[which] - fd).max() / scale_ref))
    return worst
