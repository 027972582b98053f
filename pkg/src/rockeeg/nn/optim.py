"""Adam optimizer."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def adam_step(params, grads, moments, config, step):
    """One bias-corrected Adam update.

    Parameters
    ----------
    params, grads : dict of name -> ndarray
    moments : dict of name -> (m, v), or empty for the first step
    config : AdamConfig (or anything with learning_rate/beta1/beta2/epsilon)
    step : int
        1-based step index used for bias correction.

    Returns
    -------
    (new_params, new_moments)
    """
    if step < 1:
        raise ValueError("Adam steps are numbered from 1")
    lr, b1, b2, eps = config.learning_rate, config.beta1, config.beta2, config.epsilon
    c1 = 1.0 - b1 ** step
    c2 = 1.0 - b2 ** step
    new_params, new_moments = {}, {}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        m, v = moments.get(name, (np.zeros_like(p), np.zeros_like(p)))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_params[name] = p - lr * (m / c1) / (np.sqrt(v / c2) + eps)
        new_moments[name] = (m, v)
    return new_params, new_moments
