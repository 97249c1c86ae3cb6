"""Tape-based reverse-mode differentiation over channel-time-space arrays.

A :class:`Tensor` wraps a numpy array of shape ``(..., channels, n_t, n_x)``
(an optional leading batch axis is allowed) or, for spectral tensors, a
complex array over retained Fourier modes.  Every primitive records a
closure that maps the output gradient to input gradients.

Complex intermediates follow the real-composition convention: the gradient
stored for a complex tensor ``z`` is ``dL/dRe(z) + 1j * dL/dIm(z)``, and
complex weights are carried as separate real and imaginary parameters.

GELU uses the tanh approximation::

    gelu(x) = 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.fft as sfft

from ._kernels import gelu_backward, gelu_forward
from .errors import InvalidArgumentError
from .spectral import fd_time_matrix, spatial_derivative

_counter = itertools.count()


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward", "_id", "name")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        self.value = np.asarray(value) if np.iscomplexobj(value) else np.asarray(value, dtype=float)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self._id = next(_counter)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.value.reshape(()))

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = g
        else:
            self.grad = self.grad + g

    def __add__(self, other):
        if np.isscalar(other):
            return add_scalar(self, other)
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return add_scalar(self, -other)
        return subtract(self, other)

    def __rsub__(self, other):
        if np.isscalar(other):
            return add_scalar(scale(self, -1.0), other)
        return subtract(other, self)

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return multiply(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(value, parents, backward) -> Tensor:
    out = Tensor(value)
    tracked = tuple(p for p in parents if p.requires_grad)
    if tracked:
        out.requires_grad = True
        out._parents = tracked
        out._backward = backward
    return out


def _same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise InvalidArgumentError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def backward(loss: Tensor, wrt=None):
    """Back-propagate from a scalar ``loss``.

    Nodes are visited once each in reverse creation order.  Returns the
    gradients of ``wrt`` (zeros for tensors with no path to the loss) when
    given, else ``None``.
    """
    if loss.value.size != 1:
        raise InvalidArgumentError(f"backward needs a scalar loss, got shape {loss.shape}")
    nodes = {}
    stack = [loss]
    while stack:
        node = stack.pop()
        if node._id in nodes or not node.requires_grad:
            continue
        nodes[node._id] = node
        stack.extend(node._parents)
    loss.grad = np.ones_like(loss.value)
    for node_id in sorted(nodes, reverse=True):
        node = nodes[node_id]
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    if wrt is None:
        return None
    return [np.zeros_like(t.value) if t.grad is None else t.grad for t in wrt]


# -- elementwise ---------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "add")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g)

    return _node(a.value + b.value, (a, b), bw)


def subtract(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "subtract")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(-g)

    return _node(a.value - b.value, (a, b), bw)


def multiply(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "multiply")

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * b.value)
        if b.requires_grad:
            b._accumulate(g * a.value)

    return _node(a.value * b.value, (a, b), bw)


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _node(a.value * c, (a,), lambda g: a._accumulate(g * c))


def add_scalar(a, c: float) -> Tensor:
    a = as_tensor(a)
    return _node(a.value + c, (a,), lambda g: a._accumulate(g))


def square(a) -> Tensor:
    a = as_tensor(a)
    return _node(a.value * a.value, (a,), lambda g: a._accumulate(2.0 * g * a.value))


def gelu(a) -> Tensor:
    a = as_tensor(a)
    x = np.ascontiguousarray(a.value)
    out, th = gelu_forward(x)
    return _node(out, (a,), lambda g: a._accumulate(gelu_backward(x, th, g)))


def mean(a) -> Tensor:
    a = as_tensor(a)
    n = a.value.size
    return _node(np.asarray(a.value.mean()), (a,), lambda g: a._accumulate(np.full(a.shape, g / n)))


# -- structural ---------------------------------------------------------------

def slice_time(a, level: int) -> Tensor:
    """Keep one time level, preserving rank: ``(..., C, 1, n_x)``."""
    a = as_tensor(a)
    n_t = a.shape[-2]
    if not -n_t <= level < n_t:
        raise InvalidArgumentError(f"time level {level} out of range for n_t={n_t}")
    level %= n_t

    def bw(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[..., level : level + 1, :] = g
        a._accumulate(full)

    return _node(a.value[..., level : level + 1, :].copy(), (a,), bw)


def wrap_difference(a) -> Tensor:
    """``u[..., 0] - u[..., n_x-1]`` as a ``(..., C, n_t, 1)`` tensor."""
    a = as_tensor(a)

    def bw(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        full[..., 0:1] += g
        full[..., -1:] -= g
        a._accumulate(full)

    return _node(a.value[..., 0:1] - a.value[..., -1:], (a,), bw)


def channel_mix(a, weight, bias=None) -> Tensor:
    """1x1 convolution: ``weight`` is ``(c_out, c_in)``, ``bias`` ``(c_out,)``."""
    a, weight = as_tensor(a), as_tensor(weight)
    bias = None if bias is None else as_tensor(bias)
    c_out, c_in = weight.shape
    if a.value.ndim < 3 or a.shape[-3] != c_in:
        raise InvalidArgumentError(f"channel_mix: input {a.shape} does not have {c_in} channels")
    lead = a.shape[:-3]
    spatial = a.shape[-2:]
    x = a.value.reshape(-1, c_in, spatial[0] * spatial[1])
    y = np.matmul(weight.value, x)
    if bias is not None:
        if bias.shape != (c_out,):
            raise InvalidArgumentError(f"channel_mix: bias shape {bias.shape} != ({c_out},)")
        y += bias.value[:, None]
    out_shape = lead + (c_out,) + spatial

    def bw(g):
        gf = g.reshape(-1, c_out, x.shape[-1])
        if a.requires_grad:
            a._accumulate(np.matmul(weight.value.T, gf).reshape(a.shape))
        if weight.requires_grad:
            weight._accumulate(np.matmul(gf, x.transpose(0, 2, 1)).sum(axis=0))
        if bias is not None and bias.requires_grad:
            bias._accumulate(gf.sum(axis=(0, 2)))

    parents = (a, weight) if bias is None else (a, weight, bias)
    return _node(y.reshape(out_shape), parents, bw)


# -- linear differential operators -------------------------------------------

def fd_time(a, dt: float) -> Tensor:
    """Second-order time derivative along the ``n_t`` axis."""
    a = as_tensor(a)
    D = fd_time_matrix(a.shape[-2], float(dt))
    return _node(D @ a.value, (a,), lambda g: a._accumulate(D.T @ g))


def spectral_dx(a, order: int = 1, length_x: float = 2 * math.pi) -> Tensor:
    """Spectral x-derivative; its adjoint is ``(-1)**order`` times itself."""
    a = as_tensor(a)
    sign = -1.0 if order % 2 else 1.0
    return _node(
        spatial_derivative(a.value, order, length_x),
        (a,),
        lambda g: a._accumulate(sign * spatial_derivative(g, order, length_x)),
    )


# -- Fourier layers -----------------------------------------------------------

def _time_rows(n_t: int, modes_t: int) -> np.ndarray:
    return np.concatenate([np.arange(modes_t), np.arange(n_t - modes_t, n_t)])


def check_modes(n_t: int, n_x: int, modes_t: int, modes_x: int):
    if modes_t < 1 or modes_x < 1:
        raise InvalidArgumentError("mode counts must be >= 1")
    if 2 * modes_t > n_t:
        raise InvalidArgumentError(f"modes_t={modes_t} exceeds the time spectrum of n_t={n_t}")
    if modes_x > n_x // 2 + 1:
        raise InvalidArgumentError(f"modes_x={modes_x} exceeds the half spectrum of n_x={n_x}")


def _half_spectrum_weights(n_x: int, modes_x: int) -> np.ndarray:
    """Multiplicity of each retained half-spectrum bin in the full spectrum."""
    k = np.arange(modes_x)
    w = np.full(modes_x, 2.0)
    w[k == 0] = 1.0
    w[2 * k == n_x] = 1.0
    return w


def rfft2_trunc(a, modes_t: int, modes_x: int) -> Tensor:
    """2-D real transform over ``(t, x)`` keeping low modes.

    The x axis keeps bins ``0..modes_x-1`` of the half spectrum; the t axis
    keeps ``modes_t`` non-negative and ``modes_t`` negative frequencies, so
    the result has shape ``(..., C, 2*modes_t, modes_x)``.
    """
    a = as_tensor(a)
    n_t, n_x = a.shape[-2:]
    check_modes(n_t, n_x, modes_t, modes_x)
    rows = _time_rows(n_t, modes_t)
    spec = sfft.rfft2(a.value)[..., rows, :modes_x]
    w = _half_spectrum_weights(n_x, modes_x)

    def bw(g):
        full = np.zeros(a.shape[:-1] + (n_x // 2 + 1,), dtype=complex)
        full[..., rows, :modes_x] = g / w
        a._accumulate(sfft.irfft2(full, s=(n_t, n_x)) * (n_t * n_x))

    return _node(spec, (a,), bw)


def irfft2_pad(z, n_t: int, n_x: int, modes_t: int) -> Tensor:
    """Inverse of :func:`rfft2_trunc`: zero-pad the retained modes and
    transform back to a real ``(..., C, n_t, n_x)`` field."""
    z = as_tensor(z)
    modes_x = z.shape[-1]
    check_modes(n_t, n_x, modes_t, modes_x)
    if z.shape[-2] != 2 * modes_t:
        raise InvalidArgumentError(f"irfft2_pad: expected {2 * modes_t} time modes, got {z.shape[-2]}")
    rows = _time_rows(n_t, modes_t)
    full = np.zeros(z.shape[:-2] + (n_t, n_x // 2 + 1), dtype=complex)
    full[..., rows, :modes_x] = z.value
    w = _half_spectrum_weights(n_x, modes_x) / (n_t * n_x)

    def bw(g):
        z._accumulate(sfft.rfft2(g)[..., rows, :modes_x] * w)

    return _node(sfft.irfft2(full, s=(n_t, n_x)), (z,), bw)


def mode_mix(z, w_re, w_im) -> Tensor:
    """Per-mode complex channel mixing.

    ``out[..., o, m] = sum_i z[..., i, m] * W[i, o, m]`` with
    ``W = w_re + 1j * w_im`` of shape ``(c_in, c_out, m_t, m_x)``.
    """
    z, w_re, w_im = as_tensor(z), as_tensor(w_re), as_tensor(w_im)
    if w_re.shape != w_im.shape:
        raise InvalidArgumentError("mode_mix: real and imaginary weights differ in shape")
    c_in, c_out, m_t, m_x = w_re.shape
    if z.shape[-3:] != (c_in, m_t, m_x):
        raise InvalidArgumentError(f"mode_mix: input {z.shape} incompatible with weights {w_re.shape}")
    lead = z.shape[:-3]
    n_modes = m_t * m_x
    # modes become the batch axis of a stacked matmul
    # contiguous copies let matmul dispatch to BLAS per mode
    zm = np.ascontiguousarray(np.moveaxis(z.value.reshape(-1, c_in, n_modes), 2, 0))  # (M, B, c_in)
    W = (w_re.value + 1j * w_im.value).reshape(c_in, c_out, n_modes)
    Wm = np.ascontiguousarray(np.moveaxis(W, 2, 0))  # (M, c_in, c_out)
    out = np.matmul(zm, Wm)  # (M, B, c_out)
    out_value = np.moveaxis(out, 0, 2).reshape(lead + (c_out, m_t, m_x))

    def bw(g):
        gm = np.ascontiguousarray(np.moveaxis(g.reshape(-1, c_out, n_modes), 2, 0))  # (M, B, c_out)
        if z.requires_grad:
            gz = np.matmul(gm, np.ascontiguousarray(np.conj(np.swapaxes(Wm, 1, 2))))
            z._accumulate(np.moveaxis(gz, 0, 2).reshape(z.shape))
        if w_re.requires_grad or w_im.requires_grad:
            gW = np.matmul(np.ascontiguousarray(np.conj(np.swapaxes(zm, 1, 2))), gm)  # (M, c_in, c_out)
            gW = np.moveaxis(gW, 0, 2).reshape(w_re.shape)
            if w_re.requires_grad:
                w_re._accumulate(gW.real.copy())
            if w_im.requires_grad:
                w_im._accumulate(gW.imag.copy())

    return _node(out_value, (z, w_re, w_im), bw)
