"""Forward and backward passes for the layers of the CNN-LSTM.

All functions work on batched float64 arrays laid out as
``(batch, time, channels)``; an unbatched ``(time, channels)`` input is
accepted where noted and returned unbatched. Every ``*_forward`` returns the
output plus a cache that the matching ``*_backward`` consumes.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import ShapeMismatch


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def relu(z):
    return np.maximum(z, 0.0)


ACTIVATIONS = ("relu", "sigmoid", "tanh", "linear")


def activate(z, kind):
    if kind == "relu":
        return relu(z)
    if kind == "sigmoid":
        return sigmoid(z)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "linear":
        return z
    raise ValueError(f"unknown activation {kind!r}")


def activation_grad(z, a, kind):
    """Derivative of the activation at pre-activation ``z`` (output ``a``)."""
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "linear":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {kind!r}")


def _batched(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    if x.ndim != 3:
        raise ShapeMismatch(f"expected (batch, time, channels), got shape {x.shape}")
    return x, False


# ----------------------------------------------------------------------
# convolution


def conv1d_forward(x, w, b):
    """Valid, stride-1 convolution.

    ``out[n, t, f] = b[f] + sum_{c, j} w[f, c, j] * x[n, t + j, c]``

    Parameters
    ----------
    x : (batch, T, C) or (T, C)
    w : (F, C, k)
    b : (F,)
    """
    xb, single = _batched(x)
    F, C, k = w.shape
    if xb.shape[2] != C:
        raise ShapeMismatch(f"input has {xb.shape[2]} channels, kernel expects {C}")
    if xb.shape[1] < k:
        raise ShapeMismatch(f"input length {xb.shape[1]} < kernel size {k}")
    windows = sliding_window_view(xb, k, axis=1)          # (N, T', C, k)
    out = np.tensordot(windows, w, axes=([2, 3], [1, 2])) + b
    return (out[0] if single else out), xb


def conv1d_backward(grad_out, cache, w):
    """Gradients ``(grad_input, grad_w, grad_b)`` of :func:`conv1d_forward`."""
    xb = cache
    g, single = _batched(grad_out)
    k = w.shape[2]
    windows = sliding_window_view(xb, k, axis=1)
    grad_w = np.tensordot(g, windows, axes=([0, 1], [0, 1]))   # (F, C, k)
    grad_b = g.sum(axis=(0, 1))
    grad_x = np.zeros_like(xb)
    t_out = g.shape[1]
    for j in range(k):
        grad_x[:, j:j + t_out, :] += g @ w[:, :, j]
    return (grad_x[0] if single else grad_x), grad_w, grad_b


# ----------------------------------------------------------------------
# pooling


def maxpool1d_forward(x, size=2, stride=1):
    """Max over windows of ``size`` steps; ties pick the earliest index."""
    xb, single = _batched(x)
    if xb.shape[1] < size:
        raise ShapeMismatch(f"input length {xb.shape[1]} < pool size {size}")
    windows = sliding_window_view(xb, size, axis=1)[:, ::stride]   # (N, T', F, size)
    arg = np.argmax(windows, axis=-1)
    out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
    return (out[0] if single else out), (xb.shape, arg, size, stride)


def maxpool1d_backward(grad_out, cache):
    shape, arg, size, stride = cache
    g, single = _batched(grad_out)
    grad_x = np.zeros(shape)
    t_out = g.shape[1]
    for s in range(size):
        stop = s + (t_out - 1) * stride + 1
        grad_x[:, s:stop:stride, :] += np.where(arg == s, g, 0.0)
    return grad_x[0] if single else grad_x


# ----------------------------------------------------------------------
# dropout


def dropout_forward(x, rate, training, rng=None):
    """Inverted dropout. Returns ``(output, mask)``; ``mask`` is None when inactive."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must lie in [0, 1)")
    if not training or rate == 0.0:
        return x, None
    keep = rng.random(np.shape(x)) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


def dropout_backward(grad_out, mask):
    return grad_out if mask is None else grad_out * mask


# ----------------------------------------------------------------------
# dense


def dense_forward(x, w, b, activation="linear"):
    """``activation(x @ w + b)`` with ``w`` of shape (in, out)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != w.shape[0]:
        raise ShapeMismatch(f"input width {x.shape[-1]} != weight rows {w.shape[0]}")
    z = x @ w + b
    a = activate(z, activation)
    return a, (x, z, a, activation)


def dense_backward(grad_out, cache, w):
    x, z, a, activation = cache
    gz = grad_out * activation_grad(z, a, activation)
    return gz @ w.T, x.T @ gz, gz.sum(axis=0)


# ----------------------------------------------------------------------
# LSTM
#
# Gate blocks are stacked [forget, input, candidate, output] along the first
# axis of W (4H x (H + D)); the columns multiply the concatenation [h_{t-1}, x_t].

GATE_MODES = ("sigmoid", "tanh")


def lstm_forward(x, w, b, output_gate="sigmoid"):
    """Run an LSTM from zero state and return the final hidden state.

    ``output_gate="tanh"`` replaces the sigmoid of the output gate with tanh;
    the other gates are unchanged.

    Parameters
    ----------
    x : (batch, T, D) or (T, D)
    w : (4H, H + D)
    b : (4H,)

    Returns
    -------
    h_T : (batch, H) or (H,)
    cache : per-step gate activations and states for :func:`lstm_backward`
    """
    if output_gate not in GATE_MODES:
        raise ValueError(f"output_gate must be one of {GATE_MODES}")
    xb, single = _batched(x)
    n, T, D = xb.shape
    H = w.shape[0] // 4
    if w.shape != (4 * H, H + D):
        raise ShapeMismatch(f"LSTM weights {w.shape} do not fit input width {D}")
    wh, wx = w[:, :H], w[:, H:]
    xt = np.ascontiguousarray(xb.transpose(1, 0, 2))             # (T, N, D)
    zx = xt @ wx.T + b                                           # (T, N, 4H)
    gates = np.empty((T, n, 4 * H))
    hs = np.zeros((T + 1, n, H))
    cs = np.zeros((T + 1, n, H))
    tcs = np.empty((T, n, H))
    out_act = sigmoid if output_gate == "sigmoid" else np.tanh
    for t in range(T):
        z = zx[t] + hs[t] @ wh.T
        g = gates[t]
        g[:, :2 * H] = sigmoid(z[:, :2 * H])
        g[:, 2 * H:3 * H] = np.tanh(z[:, 2 * H:3 * H])
        g[:, 3 * H:] = out_act(z[:, 3 * H:])
        cs[t + 1] = g[:, :H] * cs[t] + g[:, H:2 * H] * g[:, 2 * H:3 * H]
        tcs[t] = np.tanh(cs[t + 1])
        hs[t + 1] = g[:, 3 * H:] * tcs[t]
    h_last = hs[T]
    cache = (xt, gates, hs, cs, tcs, output_gate, single)
    return (h_last[0] if single else h_last), cache


def lstm_states(cache):
    """``(f, i, c_tilde, c, o, h)`` per step, each of shape (T, batch, H)."""
    _, gates, hs, cs, _, _, _ = cache
    H = hs.shape[2]
    return (gates[..., :H], gates[..., H:2 * H], gates[..., 2 * H:3 * H], cs[1:],
            gates[..., 3 * H:], hs[1:])


def lstm_backward(grad_h_last, cache, w):
    """Backpropagation through time for :func:`lstm_forward`.

    Returns ``(grad_x, grad_w, grad_b)``.
    """
    xt, gates, hs, cs, tcs, output_gate, single = cache
    T, n, D = xt.shape
    H = hs.shape[2]
    wh = w[:, :H]
    dh = np.array(grad_h_last, dtype=np.float64).reshape(n, H)
    dc = np.zeros((n, H))
    dz = np.empty((T, n, 4 * H))
    for t in range(T - 1, -1, -1):
        g = gates[t]
        f, i, cc, o = g[:, :H], g[:, H:2 * H], g[:, 2 * H:3 * H], g[:, 3 * H:]
        tc = tcs[t]
        dc = dc + dh * o * (1.0 - tc * tc)
        d = dz[t]
        d[:, :H] = dc * cs[t] * f * (1.0 - f)
        d[:, H:2 * H] = dc * cc * i * (1.0 - i)
        d[:, 2 * H:3 * H] = dc * i * (1.0 - cc * cc)
        if output_gate == "sigmoid":
            d[:, 3 * H:] = dh * tc * o * (1.0 - o)
        else:
            d[:, 3 * H:] = dh * tc * (1.0 - o * o)
        dc = dc * f
        dh = d @ wh
    flat = dz.reshape(T * n, 4 * H)
    grad_wh = flat.T @ hs[:-1].reshape(T * n, H)
    grad_wx = flat.T @ xt.reshape(T * n, D)
    grad_b = flat.sum(axis=0)
    grad_x = (dz @ w[:, H:]).transpose(1, 0, 2)
    grad_w = np.concatenate([grad_wh, grad_wx], axis=1)
    return (grad_x[0] if single else grad_x), grad_w, grad_b


# ----------------------------------------------------------------------
# losses


def bce_with_logits(logits, targets):
    """Sigmoid head with per-class binary cross-entropy.

    Loss is summed over classes and averaged over the batch. Returns
    ``(loss, grad_logits)``.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if z.shape != y.shape:
        raise ShapeMismatch(f"logits {z.shape} vs targets {y.shape}")
    n = z.shape[0]
    # log(1 + e^z) - y z, written to avoid overflow
    per = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    return float(per.sum() / n), (sigmoid(z) - y) / n


def bce_from_probabilities(probs, targets, clip=1e-12):
    """Binary cross-entropy on sigmoid outputs (reporting helper)."""
    p = np.clip(np.asarray(probs, dtype=np.float64), clip, 1.0 - clip)
    y = np.asarray(targets, dtype=np.float64)
    return float(-(y * np.log(p) + (1.0 - y) * np.log1p(-p)).sum() / p.shape[0])


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, targets):
    """Categorical cross-entropy averaged over the batch; returns ``(loss, grad)``."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if z.shape != y.shape:
        raise ShapeMismatch(f"logits {z.shape} vs targets {y.shape}")
    n = z.shape[0]
    shifted = z - z.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-(y * log_p).sum() / n), (np.exp(log_p) - y) / n


def l2_penalty(weights, lam):
    """``lam * sum ||W||^2`` and the matching gradients ``2 lam W``."""
    weights = list(weights)
    value = lam * sum(float(np.sum(w * w)) for w in weights)
    return value, [2.0 * lam * w for w in weights]
