"""Uniform fit / score / persist wrappers around the two classifier families."""

import numpy as np

from . import container
from .linear import RidgeModel, StandardizerState, apply_standardizer, decision_scores, \
    fit_ridge, fit_standardizer
from .exceptions import ContainerError
from .minirocket import MiniRocketParams, fit_minirocket, transform_minirocket
from .nn.network import NetworkState, history_csv, predict_scores, train

MINIROCKET_KIND = "minirocket-model"
CNNLSTM_KIND = "cnnlstm-model"


def derive_seed(seed, *keys):
    """A 32-bit seed derived from ``seed`` and integer ``keys`` (e.g. a fold index)."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


def _prefixed(prefix, arrays):
    return {f"{prefix}.{k}": v for k, v in arrays.items()}


def _unprefixed(prefix, arrays):
    n = len(prefix) + 1
    return {k[n:]: v for k, v in arrays.items() if k.startswith(prefix + ".")}


class MiniRocketModel:
    """Transform, standardize, then one-hot ridge."""

    pipeline = "minirocket"

    def __init__(self, params, scaler, ridge):
        self.params, self.scaler, self.ridge = params, scaler, ridge
        self.history = None

    @classmethod
    def fit(cls, config, train_set, val_set=None):
        X, y = train_set.X, train_set.y
        params = fit_minirocket(X, config.n_features, config.max_dilations, seed=config.seed)
        F = transform_minirocket(X, params)
        scaler = fit_standardizer(F)
        ridge = fit_ridge(apply_standardizer(scaler, F), y, config.alpha_grid(),
                          n_classes=train_set.class_count)
        return cls(params, scaler, ridge)

    def scores(self, X):
        F = apply_standardizer(self.scaler, transform_minirocket(np.asarray(X), self.params))
        return decision_scores(self.ridge, F)

    def summary(self):
        return {"pipeline": self.pipeline, "feature_count": self.params.feature_count,
                "chosen_alpha": self.ridge.chosen_alpha}

    def to_bytes(self):
        _, pm, pa = container.loads(self.params.to_bytes())
        _, rm, ra = container.loads(self.ridge.to_bytes())
        arrays = {**_prefixed("params", pa), **_prefixed("ridge", ra),
                  "scaler.mean": self.scaler.mean, "scaler.scale": self.scaler.scale}
        return container.dumps(MINIROCKET_KIND, {"params": pm, "ridge": rm}, arrays)

    @classmethod
    def from_bytes(cls, blob):
        _, m, a = container.loads(blob, kind=MINIROCKET_KIND)
        params = MiniRocketParams.from_bytes(
            container.dumps("minirocket-params", m["params"], _unprefixed("params", a)))
        ridge = RidgeModel.from_bytes(
            container.dumps("ridge-model", m["ridge"], _unprefixed("ridge", a)))
        return cls(params, StandardizerState(a["scaler.mean"], a["scaler.scale"]), ridge)


class CnnLstmModel:
    """Globally rescaled inputs fed to the CNN-LSTM."""

    pipeline = "cnnlstm"

    def __init__(self, state, mean=0.0, scale=1.0, history=None):
        self.state, self.mean, self.scale = state, float(mean), float(scale)
        self.history = history

    @classmethod
    def fit(cls, config, train_set, val_set=None):
        X = train_set.X
        if config.input_scaling == "global":
            mean, scale = float(X.mean()), float(X.std()) or 1.0
        else:
            mean, scale = 0.0, 1.0
        spec = config.network_spec(X.shape[1], train_set.class_count)
        val = (None, None)
        if val_set is not None:
            val = ((val_set.X - mean) / scale, val_set.y)
        state, history = train(spec, (X - mean) / scale, train_set.y, config.train_config(),
                               *val)
        return cls(state, mean, scale, history)

    def scores(self, X):
        return predict_scores(self.state, (np.asarray(X, dtype=np.float64) - self.mean) / self.scale)

    def summary(self):
        spec = self.state.spec
        return {"pipeline": self.pipeline, "steps": self.state.step,
                "lstm_input": list(spec.lstm_input()),
                "parameters": int(sum(p.size for p in self.state.params.values()))}

    def history_csv(self):
        return history_csv(self.history or [])

    def to_bytes(self):
        _, m, a = container.loads(self.state.to_bytes())
        m["input_scaling"] = {"mean": self.mean, "scale": self.scale}
        return container.dumps(CNNLSTM_KIND, m, a)

    @classmethod
    def from_bytes(cls, blob):
        from .nn.network import STATE_KIND

        _, m, a = container.loads(blob, kind=CNNLSTM_KIND)
        scaling = m.pop("input_scaling")
        state = NetworkState.from_bytes(container.dumps(STATE_KIND, m, a))
        return cls(state, scaling["mean"], scaling["scale"])


MODELS = {"minirocket": MiniRocketModel, "cnnlstm": CnnLstmModel}


def fit_model(config, train_set, val_set=None):
    return MODELS[config.pipeline].fit(config, train_set, val_set)


def load_model(path):
    kind = container.peek_kind(path)
    kinds = {MINIROCKET_KIND: MiniRocketModel, CNNLSTM_KIND: CnnLstmModel}
    if kind not in kinds:
        raise ContainerError(f"{path} is not a model file (kind {kind!r})")
    with open(path, "rb") as fh:
        return kinds[kind].from_bytes(fh.read())
