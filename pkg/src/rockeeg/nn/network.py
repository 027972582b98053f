"""The 13-layer CNN-LSTM: spec, forward/backward, training and persistence.

Layer stack::

     1 Input          (T, 1)
     2 Conv1D         16 filters, k=3, valid, ReLU
     3 Conv1D         32 filters, k=3, valid, ReLU
     4 Dropout        0.5
     5 MaxPool1D      size 2, stride 1
     6 Flatten        (sequence interface, see below)
     7 LSTM           100 units, final hidden state
     8 Dropout        0.5
     9 Dense          100, ReLU
    10 Dropout        0.25
    11 Dense          50, ReLU
    12 Dropout        0.25
    13 Dense          4, sigmoid

The LSTM reads the pooled feature map as a sequence of ``T - 5`` steps of
``filters[-1]`` features. ``lstm_reshape=(steps, features)`` instead flattens
the map row-major and re-reads it with the given geometry.
"""

import csv
import io
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .. import container
from .._validation import check_labels, check_series, split_dataset
from ..exceptions import NonFiniteLoss, ShapeChainInvalid, ShapeMismatch
from . import layers as L
from .optim import AdamConfig, adam_step

STATE_KIND = "cnnlstm-state"
HEADS = ("sigmoid", "softmax")


@dataclass(frozen=True)
class NetworkSpec:
    input_length: int = 1280
    input_channels: int = 1
    conv_filters: tuple = (16, 32)
    kernel_size: int = 3
    pool_size: int = 2
    pool_stride: int = 1
    lstm_units: int = 100
    dense_units: tuple = (100, 50)
    n_classes: int = 4
    dropout: tuple = (0.5, 0.5, 0.25, 0.25)
    output_gate: str = "sigmoid"
    head: str = "sigmoid"
    lstm_reshape: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "conv_filters", tuple(int(f) for f in self.conv_filters))
        object.__setattr__(self, "dense_units", tuple(int(u) for u in self.dense_units))
        object.__setattr__(self, "dropout", tuple(float(p) for p in self.dropout))
        if self.lstm_reshape is not None:
            object.__setattr__(self, "lstm_reshape", tuple(int(v) for v in self.lstm_reshape))
        if len(self.conv_filters) != 2 or len(self.dense_units) != 2 or len(self.dropout) != 4:
            raise ShapeChainInvalid("the stack has two conv, two hidden dense and four dropout layers")
        if self.output_gate not in L.GATE_MODES:
            raise ValueError(f"output_gate must be one of {L.GATE_MODES}")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}")
        if any(not 0.0 <= p < 1.0 for p in self.dropout):
            raise ValueError("dropout rates must lie in [0, 1)")

    @classmethod
    def full(cls, input_length=1280, **overrides):
        return cls(input_length=input_length, **overrides)

    @classmethod
    def scaled(cls, input_length=1280, lstm_steps=25, **overrides):
        """Reduced widths and light dropout for desk-scale experiments.

        The pooled map is re-read as ``lstm_steps`` wide steps when the sizes
        divide evenly, which trains far faster than a 1000-step recurrence.
        """
        base = dict(conv_filters=(8, 16), lstm_units=16, dense_units=(32, 16),
                    dropout=(0.1, 0.1, 0.1, 0.1))
        base.update(overrides)
        spec = cls(input_length=input_length, **base)
        size = spec.pooled_length() * spec.conv_filters[-1]
        if "lstm_reshape" not in overrides and lstm_steps and size % lstm_steps == 0:
            spec = replace(spec, lstm_reshape=(lstm_steps, size // lstm_steps))
        return spec

    def pooled_length(self):
        t = self.input_length - 2 * (self.kernel_size - 1)
        return (t - self.pool_size) // self.pool_stride + 1

    def lstm_input(self):
        """``(steps, features)`` seen by the LSTM."""
        steps, feats = self.pooled_length(), self.conv_filters[-1]
        if self.lstm_reshape is None:
            return steps, feats
        s, f = self.lstm_reshape
        if s * f != steps * feats:
            raise ShapeChainInvalid(
                f"cannot reshape {steps}x{feats} pooled features into {s}x{f}")
        return s, f

    def layer_shapes(self):
        """``[(name, output_shape), ...]`` for all 13 layers (batch axis omitted)."""
        k = self.kernel_size
        t1 = self.input_length - k + 1
        t2 = t1 - k + 1
        if t2 < self.pool_size:
            raise ShapeChainInvalid(f"input length {self.input_length} too short for the stack")
        f1, f2 = self.conv_filters
        tp = self.pooled_length()
        d1, d2 = self.dense_units
        return [
            ("input", (self.input_length, self.input_channels)),
            ("conv1", (t1, f1)),
            ("conv2", (t2, f2)),
            ("dropout1", (t2, f2)),
            ("maxpool", (tp, f2)),
            ("flatten", self.lstm_input()),
            ("lstm", (self.lstm_units,)),
            ("dropout2", (self.lstm_units,)),
            ("dense1", (d1,)),
            ("dropout3", (d1,)),
            ("dense2", (d2,)),
            ("dropout4", (d2,)),
            ("output", (self.n_classes,)),
        ]

    def param_shapes(self):
        """Trainable tensors in declaration order."""
        self.layer_shapes()
        f1, f2 = self.conv_filters
        k, H = self.kernel_size, self.lstm_units
        _, d_in = self.lstm_input()
        d1, d2 = self.dense_units
        return [
            ("conv1.w", (f1, self.input_channels, k)), ("conv1.b", (f1,)),
            ("conv2.w", (f2, f1, k)), ("conv2.b", (f2,)),
            ("lstm.w", (4 * H, H + d_in)), ("lstm.b", (4 * H,)),
            ("dense1.w", (H, d1)), ("dense1.b", (d1,)),
            ("dense2.w", (d1, d2)), ("dense2.b", (d2,)),
            ("output.w", (d2, self.n_classes)), ("output.b", (self.n_classes,)),
        ]


def weight_names(spec):
    return [name for name, _ in spec.param_shapes() if name.endswith(".w")]


def init_params(spec, rng):
    """Seeded initial weights.

    Conv and hidden dense layers: uniform in +-sqrt(6 / fan_in) (ReLU fan-in
    scaling). Output layer: +-sqrt(3 / fan_in). LSTM: uniform in
    +-1/sqrt(H). Biases are zero except the LSTM forget gate, which starts at 1.
    """
    params = {}
    H = spec.lstm_units
    for name, shape in spec.param_shapes():
        if name.endswith(".b"):
            p = np.zeros(shape)
            if name == "lstm.b":
                p[:H] = 1.0
        elif name == "lstm.w":
            lim = 1.0 / math.sqrt(H)
            p = rng.uniform(-lim, lim, size=shape)
        else:
            fan_in = int(np.prod(shape[1:])) if name.startswith("conv") else shape[0]
            gain = 3.0 if name == "output.w" else 6.0
            lim = math.sqrt(gain / fan_in)
            p = rng.uniform(-lim, lim, size=shape)
        params[name] = p
    return params


def forward(params, spec, X, training=False, rng=None):
    """Logits of shape (batch, n_classes) and the cache for :func:`backward`.

    ``X`` has shape (batch, input_length) or (batch, input_length, channels).
    Dropout is active only when ``training`` is true, drawing masks from ``rng``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, :, None]
    if X.ndim != 3 or X.shape[1:] != (spec.input_length, spec.input_channels):
        raise ShapeMismatch(
            f"expected input (batch, {spec.input_length}, {spec.input_channels}), got {X.shape}")
    p = spec.dropout
    c = {}
    z1, c["conv1"] = L.conv1d_forward(X, params["conv1.w"], params["conv1.b"])
    a1 = L.relu(z1)
    z2, c["conv2"] = L.conv1d_forward(a1, params["conv2.w"], params["conv2.b"])
    a2 = L.relu(z2)
    c["z1"], c["z2"] = z1, z2
    d1, c["drop1"] = L.dropout_forward(a2, p[0], training, rng)
    pooled, c["pool"] = L.maxpool1d_forward(d1, spec.pool_size, spec.pool_stride)
    n = X.shape[0]
    steps, feats = spec.lstm_input()
    seq = pooled.reshape(n, steps, feats)
    c["pooled_shape"] = pooled.shape
    h, c["lstm"] = L.lstm_forward(seq, params["lstm.w"], params["lstm.b"], spec.output_gate)
    d2, c["drop2"] = L.dropout_forward(h, p[1], training, rng)
    e1, c["dense1"] = L.dense_forward(d2, params["dense1.w"], params["dense1.b"], "relu")
    d3, c["drop3"] = L.dropout_forward(e1, p[2], training, rng)
    e2, c["dense2"] = L.dense_forward(d3, params["dense2.w"], params["dense2.b"], "relu")
    d4, c["drop4"] = L.dropout_forward(e2, p[3], training, rng)
    logits, c["output"] = L.dense_forward(d4, params["output.w"], params["output.b"], "linear")
    return logits, c


def backward(params, spec, cache, grad_logits):
    """Gradients of a scalar loss w.r.t. every parameter, given dLoss/dlogits."""
    c = cache
    g = {}
    gx, g["output.w"], g["output.b"] = L.dense_backward(grad_logits, c["output"], params["output.w"])
    gx = L.dropout_backward(gx, c["drop4"])
    gx, g["dense2.w"], g["dense2.b"] = L.dense_backward(gx, c["dense2"], params["dense2.w"])
    gx = L.dropout_backward(gx, c["drop3"])
    gx, g["dense1.w"], g["dense1.b"] = L.dense_backward(gx, c["dense1"], params["dense1.w"])
    gx = L.dropout_backward(gx, c["drop2"])
    gx, g["lstm.w"], g["lstm.b"] = L.lstm_backward(gx, c["lstm"], params["lstm.w"])
    gx = gx.reshape(c["pooled_shape"])
    gx = L.maxpool1d_backward(gx, c["pool"])
    gx = L.dropout_backward(gx, c["drop1"])
    gx = gx * (c["z2"] > 0)
    gx, g["conv2.w"], g["conv2.b"] = L.conv1d_backward(gx, c["conv2"], params["conv2.w"])
    gx = gx * (c["z1"] > 0)
    _, g["conv1.w"], g["conv1.b"] = L.conv1d_backward(gx, c["conv1"], params["conv1.w"])
    return {name: g[name] for name, _ in spec.param_shapes()}


def data_loss(spec, logits, targets):
    if spec.head == "sigmoid":
        return L.bce_with_logits(logits, targets)
    return L.softmax_cross_entropy(logits, targets)


def loss_and_grad(params, spec, X, Y, l2=0.0, training=False, rng=None):
    """Total loss (data term + ``l2 * sum ||W||^2``) and parameter gradients."""
    logits, cache = forward(params, spec, X, training, rng)
    loss, g_logits = data_loss(spec, logits, Y)
    grads = backward(params, spec, cache, g_logits)
    if l2:
        names = weight_names(spec)
        penalty, pgrads = L.l2_penalty((params[n] for n in names), l2)
        loss += penalty
        for n, pg in zip(names, pgrads):
            grads[n] = grads[n] + pg
    return loss, grads, logits


def output_scores(spec, logits):
    return L.sigmoid(logits) if spec.head == "sigmoid" else L.softmax(logits)


# ----------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    epochs: int = 100
    l2: float = 0.01
    seed: int = 0
    eval_batch_size: int = 256

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.learning_rate < 0 or self.l2 < 0:
            raise ValueError("learning_rate and l2 must be non-negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam decay rates must lie in [0, 1)")

    @classmethod
    def full(cls, **overrides):
        return cls(**overrides)

    @classmethod
    def large_batch(cls, **overrides):
        base = dict(batch_size=400, epochs=100)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def scaled(cls, **overrides):
        """Companion to :meth:`NetworkSpec.scaled`."""
        base = dict(learning_rate=1e-3, batch_size=16, epochs=30, l2=1e-4)
        base.update(overrides)
        return cls(**base)

    def adam(self):
        return AdamConfig(self.learning_rate, self.beta1, self.beta2, self.epsilon)


@dataclass
class NetworkState:
    spec: NetworkSpec
    params: dict
    moments: dict = field(default_factory=dict)
    step: int = 0
    config: TrainConfig = field(default_factory=TrainConfig)

    def to_bytes(self):
        spec = asdict(self.spec)
        manifest = {
            "format": "rockeeg-cnnlstm",
            "version": 1,
            "spec": spec,
            "config": asdict(self.config),
            "step": self.step,
            "layers": [{"name": n, "shape": list(s)} for n, s in self.spec.param_shapes()],
        }
        arrays = {}
        for name, _ in self.spec.param_shapes():
            arrays[name] = self.params[name]
        for name, _ in self.spec.param_shapes():
            if name in self.moments:
                m, v = self.moments[name]
                arrays[f"adam.m.{name}"] = m
                arrays[f"adam.v.{name}"] = v
        return container.dumps(STATE_KIND, manifest, arrays)

    @classmethod
    def from_bytes(cls, blob):
        _, m, a = container.loads(blob, kind=STATE_KIND)
        spec_fields = m["spec"]
        for key in ("conv_filters", "dense_units", "dropout"):
            spec_fields[key] = tuple(spec_fields[key])
        if spec_fields.get("lstm_reshape") is not None:
            spec_fields["lstm_reshape"] = tuple(spec_fields["lstm_reshape"])
        spec = NetworkSpec(**spec_fields)
        params = {n: a[n] for n, _ in spec.param_shapes()}
        moments = {n: (a[f"adam.m.{n}"], a[f"adam.v.{n}"])
                   for n, _ in spec.param_shapes() if f"adam.m.{n}" in a}
        return cls(spec, params, moments, m["step"], TrainConfig(**m["config"]))

    def save(self, path):
        container.write_bytes(path, self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


HISTORY_FIELDS = ("epoch", "train_loss", "val_loss", "train_acc", "val_acc")


def evaluate(state, X, y, l2=None, batch_size=256):
    """Eval-mode ``(loss, accuracy)``; ``loss`` includes the L2 term."""
    spec = state.spec
    l2 = state.config.l2 if l2 is None else l2
    Y = np.eye(spec.n_classes)[y]
    total, correct = 0.0, 0
    for s in range(0, X.shape[0], batch_size):
        logits, _ = forward(state.params, spec, X[s:s + batch_size])
        loss, _ = data_loss(spec, logits, Y[s:s + batch_size])
        total += loss * logits.shape[0]
        correct += int(np.sum(np.argmax(logits, axis=1) == y[s:s + batch_size]))
    penalty, _ = L.l2_penalty((state.params[n] for n in weight_names(spec)), l2)
    return total / X.shape[0] + penalty, correct / X.shape[0]


def train(spec, X, y, config=None, X_val=None, y_val=None, state=None, callback=None):
    """Mini-batch Adam training with per-epoch reshuffling.

    Weight initialisation and the shuffling/dropout stream are both derived
    from ``config.seed``, so identical inputs give bit-identical weights.

    Returns
    -------
    (NetworkState, history) where history is a list of dicts keyed by
    :data:`HISTORY_FIELDS`; losses and accuracies are measured in evaluation
    mode after each epoch (``val_*`` are NaN without validation data).
    """
    config = config or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    spec.layer_shapes()
    if X.shape[1] != spec.input_length:
        raise ShapeChainInvalid(f"samples have length {X.shape[1]}, spec expects {spec.input_length}")
    init_seq, train_seq = np.random.SeedSequence(config.seed).spawn(2)
    if state is None:
        state = NetworkState(spec, init_params(spec, np.random.default_rng(init_seq)),
                             config=config)
    else:
        state = replace(state, config=config)
    rng = np.random.default_rng(train_seq)
    Y = np.eye(spec.n_classes)[y]
    adam = config.adam()
    history = []
    n = X.shape[0]
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for b, s in enumerate(range(0, n, config.batch_size)):
            idx = order[s:s + config.batch_size]
            loss, grads, _ = loss_and_grad(state.params, spec, X[idx], Y[idx], config.l2,
                                           training=True, rng=rng)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"non-finite loss at epoch {epoch}, batch {b}", batch_index=b)
            state.step += 1
            state.params, state.moments = adam_step(state.params, grads, state.moments,
                                                    adam, state.step)
        tr_loss, tr_acc = evaluate(state, X, y, config.l2, config.eval_batch_size)
        if X_val is not None:
            va_loss, va_acc = evaluate(state, np.asarray(X_val, dtype=np.float64),
                                       np.asarray(y_val, dtype=np.int64), config.l2,
                                       config.eval_batch_size)
        else:
            va_loss = va_acc = float("nan")
        row = dict(zip(HISTORY_FIELDS, (epoch, tr_loss, va_loss, tr_acc, va_acc)))
        history.append(row)
        if callback is not None:
            callback(row)
    return state, history


def predict_scores(state, X, batch_size=256):
    """Head outputs (sigmoid or softmax) in evaluation mode."""
    X = np.asarray(X, dtype=np.float64)
    out = []
    for s in range(0, X.shape[0], batch_size):
        logits, _ = forward(state.params, state.spec, X[s:s + batch_size])
        out.append(output_scores(state.spec, logits))
    return np.vstack(out)


def predict(state, X, batch_size=256):
    """``(scores, classes)``; the class is the arg-max of the head outputs."""
    scores = predict_scores(state, X, batch_size)
    return scores, np.argmax(scores, axis=1)


def history_csv(history):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HISTORY_FIELDS)
    for row in history:
        writer.writerow([row["epoch"]] + [repr(float(row[k])) for k in HISTORY_FIELDS[1:]])
    return buf.getvalue()


# ----------------------------------------------------------------------
# estimator


class CNNLSTMClassifier(ClassifierMixin, BaseEstimator):
    """Scikit-learn wrapper around :func:`train` / :func:`predict`.

    Parameters mirror :class:`NetworkSpec` and :class:`TrainConfig`.
    ``input_scaling="global"`` rescales inputs by the training mean and
    standard deviation before they reach layer 1; ``"none"`` feeds raw values.
    """

    def __init__(self, conv_filters=(16, 32), kernel_size=3, lstm_units=100,
                 dense_units=(100, 50), dropout=(0.5, 0.5, 0.25, 0.25), output_gate="sigmoid",
                 head="sigmoid", lstm_reshape=None, learning_rate=1e-5, batch_size=64,
                 epochs=100, l2=0.01, input_scaling="global", random_state=0):
        self.conv_filters = conv_filters
        self.kernel_size = kernel_size
        self.lstm_units = lstm_units
        self.dense_units = dense_units
        self.dropout = dropout
        self.output_gate = output_gate
        self.head = head
        self.lstm_reshape = lstm_reshape
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.l2 = l2
        self.input_scaling = input_scaling
        self.random_state = random_state

    def _scale(self, X):
        return (X - self.input_mean_) / self.input_scale_

    def fit(self, X, y=None, X_val=None, y_val=None):
        X, y = split_dataset(X, y)
        X = check_series(X)
        y = check_labels(y, X.shape[0])
        self.classes_, codes = np.unique(y, return_inverse=True)
        if self.input_scaling == "global":
            self.input_mean_ = float(X.mean())
            self.input_scale_ = float(X.std()) or 1.0
        elif self.input_scaling == "none":
            self.input_mean_, self.input_scale_ = 0.0, 1.0
        else:
            raise ValueError("input_scaling must be 'global' or 'none'")
        spec = NetworkSpec(
            input_length=X.shape[1], conv_filters=self.conv_filters,
            kernel_size=self.kernel_size, lstm_units=self.lstm_units,
            dense_units=self.dense_units, n_classes=len(self.classes_), dropout=self.dropout,
            output_gate=self.output_gate, head=self.head, lstm_reshape=self.lstm_reshape)
        config = TrainConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                             epochs=self.epochs, l2=self.l2, seed=int(self.random_state or 0))
        val = (None, None)
        if X_val is not None:
            X_val = check_series(X_val, expected_length=X.shape[1])
            lookup = {c: i for i, c in enumerate(self.classes_.tolist())}
            val = (self._scale(X_val), np.array([lookup[v] for v in np.asarray(y_val).tolist()]))
        self.state_, self.history_ = train(spec, self._scale(X), codes, config, *val)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        """Head outputs (independent sigmoids unless ``head="softmax"``)."""
        check_is_fitted(self, "state_")
        X = check_series(X, expected_length=self.state_.spec.input_length)
        return predict_scores(self.state_, self._scale(X))

    def decision_function(self, X):
        return self.predict_proba(X)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
