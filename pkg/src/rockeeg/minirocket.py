"""MiniRocket: fixed dilated kernels pooled by proportion of positive values.

The kernel space is the 84 length-9 kernels with weight -1 everywhere except
three taps of +2 (every choice of three taps, in lexicographic order). Each
kernel is paired with a set of dilations that grow exponentially up to the
series length; every (kernel, dilation) *combination* receives one or more
bias thresholds drawn from quantiles of its convolution output on a training
series. A feature is the fraction of convolution outputs strictly greater than
its threshold.

Combination ``c`` uses dilation ``dilations[c // 84]`` and kernel ``c % 84``.
Odd combinations use zero padding (output length equals the input length);
even ones do not (output length ``I - 8 d``).
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import container
from ._validation import check_series
from .exceptions import (
    EmptyOutput,
    EmptyTrainingSet,
    KernelDoesNotFit,
    LengthMismatch,
    SeriesTooShort,
)

KERNEL_LENGTH = 9
N_KERNELS = 84
GOLDEN_FRACTION = (np.sqrt(5.0) - 1.0) / 2.0
PARAMS_KIND = "minirocket-params"
PARAMS_VERSION = 1

#: (84, 3) positions of the +2 taps, lexicographic.
KERNEL_INDICES = np.array(list(combinations(range(KERNEL_LENGTH), 3)), dtype=np.int64)


def kernel_weights():
    """The (84, 9) weight matrix of the kernel set."""
    w = -np.ones((N_KERNELS, KERNEL_LENGTH))
    for k, taps in enumerate(KERNEL_INDICES):
        w[k, taps] = 2.0
    return w


def dilations_for_length(input_length, kernel_length=KERNEL_LENGTH, max_per_kernel=28):
    """Exponentially spaced dilations that keep the kernel inside the series.

    ``max_per_kernel`` exponents are spaced uniformly over
    ``[0, log2((I - 1) / (kernel_length - 1))]``; the floored powers of two are
    de-duplicated, so fewer than ``max_per_kernel`` values may be returned.
    """
    if input_length < kernel_length:
        raise SeriesTooShort(f"series length {input_length} < kernel length {kernel_length}")
    if max_per_kernel < 1:
        raise ValueError("max_per_kernel must be >= 1")
    span = kernel_length - 1
    top = np.log2((input_length - 1) / span)
    exps = np.linspace(0.0, top, int(max_per_kernel))
    d = np.floor(2.0 ** exps).astype(np.int64)
    d = np.minimum(d, (input_length - 1) // span)
    return np.unique(d).tolist()


def _convolve_many(X, kernel_index, dilation, padded):
    """Convolve every row of ``X`` with one kernel.

    Uses ``sum_j w_j x_j = 3 (x_a + x_b + x_c) - sum_j x_j`` for the taps
    ``a, b, c`` carrying +2.
    """
    n, length = X.shape
    d = int(dilation)
    half = 4 * d
    if not padded and 2 * half >= length:
        raise KernelDoesNotFit(f"dilation {d} does not fit a series of length {length}")
    Xp = np.zeros((n, length + 2 * half))
    Xp[:, half:half + length] = X
    taps = [Xp[:, j * d:j * d + length] for j in range(KERNEL_LENGTH)]
    total = taps[0].copy()
    for t in taps[1:]:
        total += t
    a, b, c = KERNEL_INDICES[kernel_index]
    out = 3.0 * (taps[a] + taps[b] + taps[c]) - total
    return out if padded else out[:, half:length - half]


def convolve_dilated(x, kernel_index, dilation, padded=False):
    """Dilated cross-correlation of one series with kernel ``kernel_index``.

    ``out[t] = sum_j w[j] * x[t + j * dilation]``. Without padding the output
    has ``len(x) - 8 * dilation`` entries; with padding the series is extended
    by ``4 * dilation`` zeros on each side and the output has ``len(x)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x must be a non-empty 1-D sequence")
    if not 0 <= kernel_index < N_KERNELS:
        raise IndexError(f"kernel index {kernel_index} out of range")
    if dilation < 1:
        raise ValueError("dilation must be >= 1")
    return _convolve_many(x[None, :], kernel_index, dilation, padded)[0]


def ppv(conv_output, bias):
    """Fraction of entries strictly greater than ``bias``."""
    c = np.asarray(conv_output, dtype=np.float64)
    if c.size == 0:
        raise EmptyOutput("cannot pool an empty convolution output")
    return np.count_nonzero(c > bias) / c.size


@dataclass(frozen=True, eq=False)
class MiniRocketParams:
    """Fitted transform: one ``(kernel, dilation, padded, bias)`` per feature."""

    kernel_index: np.ndarray
    dilation: np.ndarray
    padded: np.ndarray
    bias: np.ndarray
    input_length: int
    max_dilations_per_kernel: int
    seed: int
    requested_features: int

    @property
    def feature_count(self):
        return int(self.bias.shape[0])

    def assignments(self):
        return list(zip(self.kernel_index.tolist(), self.dilation.tolist(),
                        self.padded.astype(bool).tolist(), self.bias.tolist()))

    def __eq__(self, other):
        if not isinstance(other, MiniRocketParams):
            return NotImplemented
        same_arrays = all(np.array_equal(getattr(self, f), getattr(other, f))
                          for f in ("kernel_index", "dilation", "padded", "bias"))
        return same_arrays and (self.input_length, self.max_dilations_per_kernel, self.seed,
                                self.requested_features) == (
            other.input_length, other.max_dilations_per_kernel, other.seed,
            other.requested_features)

    def to_bytes(self):
        manifest = {
            "format": "rockeeg-minirocket",
            "version": PARAMS_VERSION,
            "feature_count": self.feature_count,
            "requested_features": self.requested_features,
            "max_dilations_per_kernel": self.max_dilations_per_kernel,
            "input_length": self.input_length,
            "seed": self.seed,
        }
        arrays = {"kernel_index": self.kernel_index, "dilation": self.dilation,
                  "padded": self.padded.astype(np.int64), "bias": self.bias}
        return container.dumps(PARAMS_KIND, manifest, arrays)

    @classmethod
    def from_bytes(cls, blob):
        _, m, a = container.loads(blob, kind=PARAMS_KIND)
        if m["version"] != PARAMS_VERSION:
            raise ValueError(f"unsupported params version {m['version']}")
        params = cls(a["kernel_index"], a["dilation"], a["padded"].astype(bool), a["bias"],
                     m["input_length"], m["max_dilations_per_kernel"], m["seed"],
                     m["requested_features"])
        if params.feature_count != m["feature_count"]:
            raise ValueError("feature table length does not match manifest")
        return params

    def save(self, path):
        container.write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def allocate_features(n_features, n_combinations):
    """Biases per combination: ``n_features // n_combinations`` each, with the
    remainder going one apiece to the lowest-index combinations."""
    base, rem = divmod(int(n_features), int(n_combinations))
    counts = np.full(n_combinations, base, dtype=np.int64)
    counts[:rem] += 1
    return counts


def quantile_positions(n):
    """``(i * phi) mod 1`` for ``i = 1..n`` with phi the golden-ratio fraction."""
    return (np.arange(1, n + 1) * GOLDEN_FRACTION) % 1.0


def fit_minirocket(X, n_features=10_000, max_dilations_per_kernel=28, seed=0):
    """Choose dilations, padding and bias thresholds from training series.

    For each combination one training series is drawn with
    ``numpy.random.default_rng(seed)`` and its unpadded convolution output is
    summarised at :func:`quantile_positions` by linear interpolation.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyTrainingSet("training set is empty")
    n, length = X.shape
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    dilations = dilations_for_length(length, max_per_kernel=max_dilations_per_kernel)
    n_comb = N_KERNELS * len(dilations)
    counts = allocate_features(n_features, n_comb)
    rng = np.random.default_rng(seed)
    kidx, dil, pad, bias = [], [], [], []
    for c in range(n_comb):
        h = int(counts[c])
        if h == 0:
            continue
        d = dilations[c // N_KERNELS]
        k = c % N_KERNELS
        row = int(rng.integers(n))
        out = _convolve_many(X[row:row + 1], k, d, padded=False)[0]
        bias.extend(np.quantile(out, quantile_positions(h)).tolist())
        kidx.extend([k] * h)
        dil.extend([d] * h)
        pad.extend([c % 2 == 1] * h)
    return MiniRocketParams(
        np.array(kidx, dtype=np.int64), np.array(dil, dtype=np.int64),
        np.array(pad, dtype=bool), np.array(bias, dtype=np.float64),
        length, int(max_dilations_per_kernel), int(seed), int(n_features))


def _groups(params):
    """Contiguous runs of features sharing (kernel, dilation, padding)."""
    k, d, p = params.kernel_index, params.dilation, params.padded
    if k.size == 0:
        return []
    change = np.flatnonzero((k[1:] != k[:-1]) | (d[1:] != d[:-1]) | (p[1:] != p[:-1])) + 1
    starts = np.concatenate([[0], change])
    stops = np.concatenate([change, [k.size]])
    return [(int(k[s]), int(d[s]), bool(p[s]), s, e) for s, e in zip(starts, stops)]


def _transform_block(X, params, groups):
    n, length = X.shape
    out = np.empty((n, params.feature_count))
    by_dilation = {}
    for g in groups:
        by_dilation.setdefault(g[1], []).append(g)
    for d, gs in by_dilation.items():
        half = 4 * d
        Xp = np.zeros((n, length + 2 * half))
        Xp[:, half:half + length] = X
        taps = [Xp[:, j * d:j * d + length] for j in range(KERNEL_LENGTH)]
        total = taps[0].copy()
        for t in taps[1:]:
            total += t
        for k, _, padded, start, stop in gs:
            a, b, c = KERNEL_INDICES[k]
            C = 3.0 * (taps[a] + taps[b] + taps[c]) - total
            if not padded:
                C = C[:, half:length - half]
            m = C.shape[1]
            for j in range(start, stop):
                out[:, j] = np.count_nonzero(C > params.bias[j], axis=1) / m
    return out


def transform_minirocket(X, params, n_jobs=None, chunk_size=64):
    """PPV features of shape (n_series, params.feature_count).

    Work is split by series; each series is computed independently, so the
    result is bitwise the same for any ``n_jobs``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D (n_series, length)")
    if X.shape[1] != params.input_length:
        raise LengthMismatch(
            f"series length {X.shape[1]} != fitted length {params.input_length}")
    groups = _groups(params)
    if n_jobs in (None, 1) or X.shape[0] <= chunk_size:
        return _transform_block(X, params, groups)
    chunks = [X[i:i + chunk_size] for i in range(0, X.shape[0], chunk_size)]
    parts = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_transform_block)(c, params, groups) for c in chunks)
    return np.vstack(parts)


class MiniRocket(TransformerMixin, BaseEstimator):
    """MiniRocket feature transform.

    Parameters
    ----------
    n_features : int, default=10000
        Number of PPV features produced.
    max_dilations_per_kernel : int, default=28
        Upper bound on distinct dilations per kernel (32 is the customary
        alternative).
    random_state : int, default=0
        Seed for the choice of training series used to fit each bias.
    n_jobs : int or None, default=None
        Threads used by :meth:`transform`.

    Attributes
    ----------
    params_ : MiniRocketParams
    n_features_out_ : int
    """

    def __init__(self, n_features=10_000, max_dilations_per_kernel=28, random_state=0,
                 n_jobs=None):
        self.n_features = n_features
        self.max_dilations_per_kernel = max_dilations_per_kernel
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_series(X, min_length=KERNEL_LENGTH)
        self.params_ = fit_minirocket(X, self.n_features, self.max_dilations_per_kernel,
                                      _seed(self.random_state))
        self.n_features_out_ = self.params_.feature_count
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_series(X, expected_length=self.params_.input_length)
        return transform_minirocket(X, self.params_, n_jobs=self.n_jobs)

    @classmethod
    def from_params(cls, params, n_jobs=None):
        est = cls(params.requested_features, params.max_dilations_per_kernel, params.seed, n_jobs)
        est.params_ = params
        est.n_features_out_ = params.feature_count
        est.n_features_in_ = params.input_length
        return est


def _seed(random_state):
    if random_state is None:
        return 0
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    raise TypeError("random_state must be an int (a fixed seed keeps the transform reproducible)")
