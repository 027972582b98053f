"""Seeded synthetic datasets for smoke tests and benchmarks."""

import numpy as np

from .dataset import Dataset

TONE_FREQUENCIES = (9.0, 13.0, 21.0, 27.0)


def tone_dataset(n_per_class, length=1280, rate=160.0, frequencies=TONE_FREQUENCIES,
                 snr_db=0.0, jitter_hz=0.5, seed=0, trial_offset=0):
    """Noisy narrow-band tones, one class per centre frequency.

    Each sample is ``sin(2 pi f t + phase)`` with ``f`` drawn uniformly within
    ``jitter_hz`` of its class frequency and a random phase, plus white
    Gaussian noise scaled so that signal power / noise power equals
    ``10 ** (snr_db / 10)``. Samples are ordered class-major.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length) / rate
    noise_std = np.sqrt(0.5 / 10 ** (snr_db / 10))
    X, y = [], []
    for label, f0 in enumerate(frequencies):
        f = f0 + rng.uniform(-jitter_hz, jitter_hz, size=n_per_class)
        phase = rng.uniform(0, 2 * np.pi, size=n_per_class)
        clean = np.sin(2 * np.pi * f[:, None] * t + phase[:, None])
        X.append(clean + rng.normal(0.0, noise_std, size=clean.shape))
        y.extend([label] * n_per_class)
    n = len(y)
    return Dataset(np.vstack(X), np.array(y), subject_id=np.ones(n, dtype=np.int64),
                   trial_id=np.arange(trial_offset, trial_offset + n),
                   class_count=len(frequencies),
                   class_names=tuple(f"{f:g}Hz" for f in frequencies))


def tone_task(n_train=400, n_test=100, length=1280, rate=160.0, seed=0, **kwargs):
    """Independent train and test tone datasets with balanced classes."""
    k = len(kwargs.get("frequencies", TONE_FREQUENCIES))
    train_seq, test_seq = np.random.SeedSequence(seed).spawn(2)
    train = tone_dataset(n_train // k, length, rate, seed=train_seq, **kwargs)
    test = tone_dataset(n_test // k, length, rate, seed=test_seq,
                        trial_offset=len(train), **kwargs)
    return train, test


def alternating_dataset(n_per_class, length=32, noise=0.1, seed=0):
    """Two classes: a constant level versus a +-1 alternating sequence.

    Class 0 is ``c + noise`` with ``c`` uniform in [-1, 1]; class 1 is
    ``a * (-1) ** t + noise`` with ``a`` uniform in [0.5, 1.5].
    """
    rng = np.random.default_rng(seed)
    level = rng.uniform(-1, 1, size=(n_per_class, 1)) * np.ones(length)
    amp = rng.uniform(0.5, 1.5, size=(n_per_class, 1))
    alt = amp * (-1.0) ** np.arange(length)
    X = np.vstack([level, alt]) + rng.normal(0, noise, size=(2 * n_per_class, length))
    y = np.repeat([0, 1], n_per_class)
    n = 2 * n_per_class
    return Dataset(X, y, subject_id=np.ones(n, dtype=np.int64), trial_id=np.arange(n),
                   class_count=2, class_names=("constant", "alternating"))
