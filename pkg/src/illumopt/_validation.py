"""Input checks shared by the estimator layer and the command line."""

import numbers
import os

import numpy as np

from .exceptions import ConfigurationError


def check_scalar(value, name, kind=numbers.Real, low=None, high=None, low_inclusive=True,
                 high_inclusive=True):
    """Validate a scalar parameter and return it unchanged.

    Raises :class:`ConfigurationError` naming ``name`` when the value has the
    wrong type or falls outside ``[low, high]`` (bounds optional, inclusivity
    per flag).
    """
    if isinstance(value, bool) or not isinstance(value, kind):
        raise ConfigurationError(f"{name} must be {kind.__name__}, got {type(value).__name__}")
    if low is not None and (value < low or (value == low and not low_inclusive)):
        raise ConfigurationError(f"{name}={value!r} is below its lower bound {low}")
    if high is not None and (value > high or (value == high and not high_inclusive)):
        raise ConfigurationError(f"{name}={value!r} is above its upper bound {high}")
    return value


def check_measurement_stack(X, n_leds=None, n_pixels=None):
    """Coerce single-LED measurement spectra to a complex ``(L, M, S)`` array.

    A single ``(M, S)`` matrix is promoted to a stack of one.
    """
    X = np.asarray(X)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise ValueError(f"expected an (L, M, S) measurement stack, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("measurement stack is empty")
    if n_pixels is not None and X.shape[1] != n_pixels:
        raise ValueError(f"measurements have {X.shape[1]} pixels, the grid has {n_pixels}")
    if n_leds is not None and X.shape[2] != n_leds:
        raise ValueError(f"measurements have {X.shape[2]} LEDs, the array has {n_leds}")
    X = X.astype(complex, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError("measurement stack contains non-finite values")
    return X


def check_phase_stack(y, shape, n_samples=None):
    """Coerce ground-truth phases to a real ``(L,) + shape`` array."""
    y = np.asarray(y, dtype=float)
    if y.shape == tuple(shape):
        y = y[None]
    if y.shape[1:] != tuple(shape):
        raise ValueError(f"phase images must have shape {tuple(shape)}, got {y.shape[1:]}")
    if n_samples is not None and len(y) != n_samples:
        raise ValueError(f"{len(y)} phase images for {n_samples} measurement stacks")
    if not np.all(np.isfinite(y)):
        raise ValueError("phase images contain non-finite values")
    return y


def check_design_shape(weights, n_leds, n_measurements=None):
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] != n_leds:
        raise ValueError(f"design must have {n_leds} rows, got shape {weights.shape}")
    if n_measurements is not None and weights.shape[1] != n_measurements:
        raise ValueError(f"design has {weights.shape[1]} measurements, expected {n_measurements}")
    return weights


def effective_threads(n_threads):
    """``None`` or a non-positive count means one thread per available core."""
    if n_threads is None or n_threads <= 0:
        return os.cpu_count() or 1
    return int(n_threads)
