"""Run configuration: defaults, ``key = value`` files and command-line overrides.

Precedence, lowest to highest: built-in defaults, the config file, then
explicit command-line flags. ``data_dir`` falls back to ``$ROCKEEG_DATA_DIR``
when neither the file nor a flag sets it.
"""

import dataclasses
import os
import typing
from dataclasses import dataclass, fields

from .exceptions import RockEEGError

DATA_DIR_ENV = "ROCKEEG_DATA_DIR"
PIPELINES = ("minirocket", "cnnlstm")
SPLITS = ("kfold", "ratio")
MODES = ("even", "paper-literal")
PRESETS = ("full", "scaled")

# cnnlstm fields whose default depends on ``cnn_preset``; None means "take the preset"
_PRESET_FIELDS = ("conv_filters", "lstm_units", "dense_units", "dropout", "lstm_reshape",
                  "learning_rate", "batch_size", "epochs", "l2")


class ConfigError(RockEEGError, ValueError):
    pass


@dataclass
class RunConfig:
    # data
    data_dir: str | None = None
    dataset: str | None = None
    subjects: tuple | None = None
    runs: tuple = (4, 6, 8, 10, 12, 14)
    pairs: str = "FC5-FC6,FC3-FC4,FC1-FC2,C5-C6,C3-C4,C1-C2,CP5-CP6,CP3-CP4,CP1-CP2"
    trials_per_class: int | None = None
    # preprocessing and epoching
    band_low: float = 8.0
    band_high: float = 30.0
    apply_car: bool = True
    target_rate: float | None = None
    filter_order: int = 4
    epoch_offset: float = 0.0
    epoch_duration: float = 4.0
    # evaluation scheme
    pipeline: str = "minirocket"
    split: str = "kfold"
    folds: int = 10
    mode: str = "even"
    ratios: tuple = (5, 2, 3)
    # minirocket + ridge
    n_features: int = 10_000
    max_dilations: int = 28
    alphas: tuple = (1e-3, 1e3, 10.0)    # logspace(lo, hi, count) bounds
    # cnnlstm
    cnn_preset: str = "full"
    conv_filters: tuple | None = None
    lstm_units: int | None = None
    dense_units: tuple | None = None
    dropout: tuple | None = None
    lstm_reshape: tuple | None = None
    output_gate: str = "sigmoid"
    head: str = "sigmoid"
    input_scaling: str = "global"
    learning_rate: float | None = None
    batch_size: int | None = None
    epochs: int | None = None
    l2: float | None = None
    # run
    seed: int = 0
    out: str = "rockeeg-out"
    strict: bool = False
    plots: bool = True

    def validate(self):
        for name, allowed in (("pipeline", PIPELINES), ("split", SPLITS), ("mode", MODES),
                              ("cnn_preset", PRESETS)):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if len(self.ratios) != 3:
            raise ConfigError("ratios needs three parts (train:val:test)")
        if len(self.alphas) != 3:
            raise ConfigError("alphas is 'low,high,count'")
        return self

    def resolved(self):
        """A copy with preset-dependent fields filled in and ``data_dir`` resolved."""
        from .nn.network import NetworkSpec, TrainConfig

        out = dataclasses.replace(self)
        if out.data_dir is None:
            out.data_dir = os.environ.get(DATA_DIR_ENV)
        if out.cnn_preset == "scaled":
            spec, train = NetworkSpec.scaled(), TrainConfig.scaled()
        else:
            spec, train = NetworkSpec.full(), TrainConfig.full()
        for name in _PRESET_FIELDS:
            if getattr(out, name) is None:
                src = spec if hasattr(spec, name) else train
                setattr(out, name, getattr(src, name))
        if self.lstm_reshape is None and out.cnn_preset == "scaled":
            # the preset's reshape is tied to a 1280-sample input; recomputed at fit time
            out.lstm_reshape = "auto"
        return out.validate()

    def network_spec(self, input_length, n_classes):
        from .nn.network import NetworkSpec

        kw = dict(conv_filters=self.conv_filters, lstm_units=self.lstm_units,
                  dense_units=self.dense_units, dropout=self.dropout,
                  output_gate=self.output_gate, head=self.head, n_classes=n_classes)
        if self.lstm_reshape == "auto":
            return NetworkSpec.scaled(input_length=input_length, **kw)
        return NetworkSpec(input_length=input_length, lstm_reshape=self.lstm_reshape, **kw)

    def train_config(self):
        from .nn.network import TrainConfig

        return TrainConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                           epochs=self.epochs, l2=self.l2, seed=self.seed)

    def alpha_grid(self):
        import numpy as np

        lo, hi, count = self.alphas
        return tuple(np.logspace(np.log10(lo), np.log10(hi), int(count)).tolist())

    def to_text(self):
        lines = ["# resolved rockeeg run configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


def format_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _base_type(annotation):
    args = [a for a in typing.get_args(annotation) if a is not type(None)]
    return args[0] if args else annotation


def _scalar(text, kind, key):
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def parse_value(key, text):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    if text.lower() in ("none", "") and key != "pairs":
        return None
    kind = _base_type(_TYPES[key])
    try:
        if kind is tuple:
            if key == "lstm_reshape" and text == "auto":
                return "auto"
            items = [t.strip() for t in text.replace(":", ",").split(",") if t.strip()]
            numeric = float if key in ("alphas", "dropout") else int
            return tuple(numeric(t) for t in items)
        return _scalar(text, kind, key)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from None


def parse_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = parse_value(key.replace("-", "_"), value)
    return values


def load_config(path=None, overrides=None):
    """Defaults, then ``path`` (if given), then ``overrides``; returns the resolved config."""
    values = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_text(fh.read()))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = parse_value(key, value) if isinstance(value, str) and \
                _base_type(_TYPES.get(key)) is not str else value
    return RunConfig(**values).resolved()
