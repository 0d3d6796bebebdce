"""Small data generators shared by several test modules."""

import numpy as np


def smooth_phase(shape, rng, cutoff=0.15):
    """Random real image with spectrum confined below ``cutoff`` cycles/pixel."""
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    spec = np.fft.fft2(rng.standard_normal(shape)) * (np.hypot(fy, fx) < cutoff)
    img = np.fft.ifft2(spec).real
    return img / np.abs(img).max()
