"""A small NumPy CNN-LSTM with hand-written backpropagation."""

from .network import (
    CNNLSTMClassifier,
    NetworkSpec,
    NetworkState,
    TrainConfig,
    backward,
    forward,
    history_csv,
    init_params,
    loss_and_grad,
    predict,
    predict_scores,
    train,
)
from .optim import AdamConfig, adam_step

__all__ = [
    "AdamConfig", "CNNLSTMClassifier", "NetworkSpec", "NetworkState", "TrainConfig",
    "adam_step", "backward", "forward", "history_csv", "init_params", "loss_and_grad",
    "predict", "predict_scores", "train",
]
