"""Signal conditioning: re-referencing, band selection and decimation."""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal as sps

from .exceptions import (
    BandOutOfRange,
    SignalTooShort,
    SingleChannel,
    UpsamplingUnsupported,
)

NATIVE_RATE = 160.0


@dataclass(frozen=True)
class PreprocessConfig:
    """Options for :func:`preprocess`.

    ``filter_order`` is the order of the band-pass design (even); the filter is
    run forward and backward, so the effective magnitude response is squared.
    """

    band_low: float = 8.0
    band_high: float = 30.0
    apply_car: bool = True
    target_rate: float | None = None
    filter_order: int = 4

    def __post_init__(self):
        if self.filter_order < 2 or self.filter_order % 2:
            raise ValueError("filter_order must be an even integer >= 2")
        if not 0 < self.band_low < self.band_high:
            raise BandOutOfRange("need 0 < band_low < band_high")
        if self.target_rate is not None and self.target_rate <= 0:
            raise ValueError("target_rate must be positive")

    def operative_rate(self, native_rate):
        return native_rate if self.target_rate is None else self.target_rate


def common_average_reference(signals):
    """Subtract the instantaneous cross-channel mean from every channel.

    Parameters
    ----------
    signals : array-like of shape (n_channels, n_times)

    Returns
    -------
    ndarray of the same shape, whose column means are zero.
    """
    x = np.asarray(signals, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise SingleChannel("common average reference needs at least two channels")
    return x - x.mean(axis=0, keepdims=True)


def _bandpass_sos(low, high, rate, order):
    nyquist = rate / 2.0
    if not 0 < low < high < nyquist:
        raise BandOutOfRange(f"band {low}-{high} Hz invalid for Nyquist {nyquist} Hz")
    if order < 2 or order % 2:
        raise ValueError("order must be an even integer >= 2")
    # a band-pass design of order N has N/2 poles per edge
    return sps.butter(order // 2, [low, high], btype="bandpass", fs=rate, output="sos")


def bandpass(x, low=8.0, high=30.0, rate=NATIVE_RATE, order=4, axis=-1):
    """Zero-phase Butterworth band-pass.

    Second-order sections are applied forward then backward, with the edges
    padded by mirror reflection.
    """
    x = np.asarray(x, dtype=np.float64)
    sos = _bandpass_sos(low, high, rate, order)
    n = x.shape[axis]
    if n <= 3 * order:
        raise SignalTooShort(f"signal of length {n} is too short for order {order}")
    padlen = min(n - 1, 3 * (2 * sos.shape[0] + 1))
    return sps.sosfiltfilt(sos, x, axis=axis, padtype="even", padlen=padlen)


def _antialias_filter(up, down, half_width=10, beta=5.0):
    ratio = max(up, down)
    taps = 2 * half_width * ratio + 1
    return sps.firwin(taps, 1.0 / ratio, window=("kaiser", beta))


def resample(x, from_rate, to_rate, axis=-1):
    """Rational-factor decimation with an anti-alias FIR filter.

    The output has ``round(n * to_rate / from_rate)`` samples. Every polyphase
    branch of the filter is normalised to unit gain at 0 Hz, and the input is
    extended with its edge values, so a constant signal maps to the same
    constant.
    """
    x = np.asarray(x, dtype=np.float64)
    if from_rate <= 0 or to_rate <= 0:
        raise ValueError("sampling rates must be positive")
    if to_rate > from_rate:
        raise UpsamplingUnsupported(f"cannot resample {from_rate} Hz up to {to_rate} Hz")
    if to_rate == from_rate:
        return x.copy()
    frac = Fraction(to_rate).limit_denominator(10**6) / Fraction(from_rate).limit_denominator(10**6)
    up, down = frac.numerator, frac.denominator
    n = x.shape[axis]
    n_out = int(np.floor(n * up / down + 0.5))

    h = _antialias_filter(up, down)
    delay = (h.size - 1) // 2
    n_pad = h.size // up + 2
    # prepend zeros so the filter delay plus padding lands on an output sample
    shift = (-(n_pad * up + delay)) % down
    h = np.concatenate([np.zeros(shift), h])
    for phase in range(up):
        h[phase::up] /= h[phase::up].sum()
    first = (n_pad * up + delay + shift) // down

    xm = np.moveaxis(x, axis, -1)
    padded = np.pad(xm, [(0, 0)] * (xm.ndim - 1) + [(n_pad, n_pad)], mode="edge")
    y = sps.upfirdn(h, padded, up, down, axis=-1)
    y = y[..., first:first + n_out]
    return np.moveaxis(y, -1, axis)


def preprocess(data, rate, config=None):
    """Resample (optional), band-pass, then common-average-reference.

    Parameters
    ----------
    data : array of shape (n_channels, n_times)
    rate : float
        Sampling rate of ``data``.
    config : PreprocessConfig, optional

    Returns
    -------
    (processed, operative_rate)
    """
    config = config or PreprocessConfig()
    x = np.asarray(data, dtype=np.float64)
    if config.target_rate is not None and config.target_rate != rate:
        x = resample(x, rate, config.target_rate, axis=-1)
        rate = config.target_rate
    x = bandpass(x, config.band_low, config.band_high, rate, config.filter_order, axis=-1)
    if config.apply_car:
        x = common_average_reference(x)
    return x, rate
