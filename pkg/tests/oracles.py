"""Slow, independent reference implementations used as test oracles."""

import math
from itertools import combinations

import numpy as np


def naive_kernel(k):
    taps = list(combinations(range(9), 3))[k]
    return [2.0 if j in taps else -1.0 for j in range(9)]


def naive_conv(x, k, d, padded):
    """Explicit double loop over output positions and taps."""
    w = naive_kernel(k)
    x = list(map(float, x))
    n = len(x)
    if padded:
        x = [0.0] * (4 * d) + x + [0.0] * (4 * d)
    m = len(x) - 8 * d
    return [sum(w[j] * x[t + j * d] for j in range(9)) for t in range(m)]


def naive_ppv(conv, bias):
    return sum(1 for v in conv if v > bias) / len(conv)


def conv_taps(X, k, d, padded):
    """Vectorised over series but written tap by tap with explicit weights."""
    w = naive_kernel(k)
    X = np.asarray(X, dtype=np.float64)
    if padded:
        X = np.pad(X, ((0, 0), (4 * d, 4 * d)))
    m = X.shape[1] - 8 * d
    out = np.zeros((X.shape[0], m))
    for j in range(9):
        out += w[j] * X[:, j * d:j * d + m]
    return out


def scalar_lstm_step(x, h, c, w=1.0, u=1.0, b=0.0, output_gate="sigmoid"):
    """One step of a 1-unit LSTM with identical gate weights, in plain floats."""
    sig = lambda z: 1.0 / (1.0 + math.exp(-z))  # noqa: E731
    z = u * h + w * x + b
    f, i, g = sig(z), sig(z), math.tanh(z)
    o = sig(z) if output_gate == "sigmoid" else math.tanh(z)
    c_new = f * c + i * g
    return o * math.tanh(c_new), c_new


def brute_confusion(y_true, y_pred, n_classes):
    counts = [[0] * n_classes for _ in range(n_classes)]
    for t, p in zip(y_true, y_pred):
        counts[t][p] += 1
    return counts


def pairwise_auc(scores, positives):
    """Probability a positive outranks a negative, ties counting one half."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positives, dtype=bool)
    a = s[pos][:, None]
    b = s[~pos][None, :]
    return float(((a > b).sum() + 0.5 * (a == b).sum()) / (a.size * b.size))


def central_difference(f, x, index, eps=1e-6):
    old = x[index]
    x[index] = old + eps
    plus = f()
    x[index] = old - eps
    minus = f()
    x[index] = old
    return (plus - minus) / (2 * eps)


def rel_error(a, b, floor=1e-8):
    return abs(a - b) / max(abs(a), abs(b), floor)


def gradient_descent_ridge(Xc, Y, alpha, steps=20000):
    """Plain gradient descent on ||Xc W - Y||^2 + alpha ||W||^2."""
    W = np.zeros((Xc.shape[1], Y.shape[1]))
    L = 2 * (np.linalg.norm(Xc, 2) ** 2 + alpha)
    for _ in range(steps):
        grad = 2 * (Xc.T @ (Xc @ W - Y) + alpha * W)
        W -= grad / L
    return W


def _kink_signature(cache):
    """ReLU sign patterns and max-pool winners of one forward pass."""
    return (
        cache["z1"] > 0, cache["z2"] > 0, cache["pool"][1],
        cache["dense1"][1] > 0, cache["dense2"][1] > 0,
    )


def network_gradient_errors(params, spec, X, Y, l2=0.0, training=False, seed=0,
                            per_tensor=6, eps=1e-6, pick_seed=0, floor=1e-8):
    """Compare backprop against central differences on sampled entries.

    Entries whose +-eps perturbation flips any ReLU mask or pooling winner are
    skipped (the loss is not differentiable there). Dropout masks are frozen by
    reseeding the generator identically for every evaluation. Returns a list of
    ``(name, index, analytic, numeric, rel_error)``.
    """
    from rockeeg.nn.network import forward, loss_and_grad

    def run():
        rng = np.random.default_rng(seed)
        return loss_and_grad(params, spec, X, Y, l2, training, rng)

    def signature():
        _, cache = forward(params, spec, X, training, np.random.default_rng(seed))
        return _kink_signature(cache)

    _, grads, _ = run()
    pick = np.random.default_rng(pick_seed)
    results = []
    for name, tensor in params.items():
        flat = tensor.reshape(-1)
        count = min(per_tensor, flat.size)
        for pos in pick.choice(flat.size, size=count, replace=False):
            old = flat[pos]
            flat[pos] = old + eps
            plus, sig_plus = run()[0], signature()
            flat[pos] = old - eps
            minus, sig_minus = run()[0], signature()
            flat[pos] = old
            if any(not np.array_equal(a, b) for a, b in zip(sig_plus, sig_minus)):
                continue
            numeric = (plus - minus) / (2 * eps)
            analytic = float(grads[name].reshape(-1)[pos])
            results.append((name, int(pos), analytic, numeric, rel_error(analytic, numeric, floor)))
    return results
