"""EEG motor-imagery classification with MiniRocket features and a NumPy CNN-LSTM."""

from .dataset import Dataset, LabeledSample, build_dataset, kfold_by_trial, ratio_split
from .linear import RidgeClassifierLOO, Standardizer, make_minirocket_classifier
from .minirocket import MiniRocket, MiniRocketParams, fit_minirocket, transform_minirocket
from .nn import CNNLSTMClassifier, NetworkSpec, TrainConfig

__version__ = "0.1.0"

__all__ = [
    "CNNLSTMClassifier", "Dataset", "LabeledSample", "MiniRocket", "MiniRocketParams",
    "NetworkSpec", "RidgeClassifierLOO", "Standardizer", "TrainConfig", "build_dataset",
    "fit_minirocket", "kfold_by_trial", "make_minirocket_classifier", "ratio_split",
    "transform_minirocket",
]
