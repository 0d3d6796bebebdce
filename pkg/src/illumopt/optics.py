"""Measurement formation for an LED-array microscope.

All arrays live on a ``grid_h x grid_w`` grid with the DC sample at index
``[0, 0]`` (numpy FFT ordering). The forward transform is unnormalized and
the inverse carries ``1/(H*W)``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .exceptions import ConfigurationError, DegenerateMeasurementError


def fft2(x):
    return sfft.fft2(x, workers=1)


def ifft2(x):
    return sfft.ifft2(x, workers=1)


@dataclass(frozen=True)
class OpticalSystem:
    """Imaging geometry. Lengths are in micrometres."""

    wavelength_um: float = 0.532
    camera_pixel_um: float = 6.5
    magnification: float = 20.0
    na_objective: float = 0.25
    grid_h: int = 64
    grid_w: int = 64

    def __post_init__(self):
        if self.wavelength_um <= 0 or self.camera_pixel_um <= 0:
            raise ConfigurationError("wavelength_um and camera_pixel_um must be positive")
        if self.magnification <= 0:
            raise ConfigurationError("magnification must be positive")
        if not 0 < self.na_objective < 1:
            raise ConfigurationError("na_objective must lie in (0, 1)")
        if int(self.grid_h) < 1 or int(self.grid_w) < 1:
            raise ConfigurationError("grid dimensions must be at least 1")
        if self.cutoff >= self.nyquist:
            raise ConfigurationError(
                f"pupil cutoff {self.cutoff:.4f} cyc/um is not inside the frequency grid "
                f"(Nyquist {self.nyquist:.4f} cyc/um)"
            )

    @property
    def shape(self):
        return (int(self.grid_h), int(self.grid_w))

    @property
    def pixel_um(self):
        """Effective object-plane pixel size."""
        return self.camera_pixel_um / self.magnification

    @property
    def nyquist(self):
        return 1.0 / (2.0 * self.pixel_um)

    @property
    def cutoff(self):
        """Coherent pupil cutoff frequency in cycles/um."""
        return self.na_objective / self.wavelength_um

    def frequencies(self):
        """Return ``(fy, fx)`` 2-D frequency grids in cycles/um, DC at origin."""
        fy = sfft.fftfreq(self.grid_h, self.pixel_um)
        fx = sfft.fftfreq(self.grid_w, self.pixel_um)
        return np.meshgrid(fy, fx, indexing="ij")

    def snap(self, na_x, na_y):
        """Nearest grid bin ``(iy, ix)`` to an illumination direction, plus snap distance.

        ``ix`` and ``iy`` are signed bin offsets; take them modulo the grid size
        to index arrays.
        """
        df_y = 1.0 / (self.grid_h * self.pixel_um)
        df_x = 1.0 / (self.grid_w * self.pixel_um)
        uy, ux = na_y / self.wavelength_um, na_x / self.wavelength_um
        iy, ix = int(np.round(uy / df_y)), int(np.round(ux / df_x))
        dist = float(np.hypot(uy - iy * df_y, ux - ix * df_x))
        return iy, ix, dist

    def to_dict(self):
        return {
            "wavelength_um": self.wavelength_um,
            "camera_pixel_um": self.camera_pixel_um,
            "magnification": self.magnification,
            "na_objective": self.na_objective,
            "grid_h": int(self.grid_h),
            "grid_w": int(self.grid_w),
        }


@dataclass(frozen=True)
class LedArray:
    """Illumination directions as ``(na_x, na_y)`` direction cosines."""

    leds: tuple = field(default_factory=tuple)

    def __post_init__(self):
        leds = tuple((float(x), float(y)) for x, y in self.leds)
        if len(set(leds)) != len(leds):
            raise ConfigurationError("LED directions must be distinct")
        object.__setattr__(self, "leds", leds)

    def __len__(self):
        return len(self.leds)

    def __iter__(self):
        return iter(self.leds)

    def __getitem__(self, i):
        return self.leds[i]

    def as_array(self):
        return np.array(self.leds, dtype=float).reshape(-1, 2)

    def illumination_na(self):
        a = self.as_array()
        return np.hypot(a[:, 0], a[:, 1])

    def check_brightfield(self, system):
        """Raise unless every LED is brightfield both as given and once snapped."""
        for s, (na_x, na_y) in enumerate(self.leds):
            if np.hypot(na_x, na_y) > system.na_objective:
                raise ConfigurationError(f"LED {s} at NA {np.hypot(na_x, na_y):.4f} is not brightfield")
            iy, ix, _ = system.snap(na_x, na_y)
            fy, fx = system.frequencies()
            if np.hypot(fy[iy % system.grid_h, 0], fx[0, ix % system.grid_w]) > system.cutoff:
                raise ConfigurationError(f"LED {s} leaves the pupil after snapping to the grid")
        bins = [system.snap(*led)[:2] for led in self.leds]
        if len(set(bins)) != len(bins):
            raise ConfigurationError("two LEDs snap to the same grid frequency; use a finer grid")

    def snapped(self, system):
        """Per-LED ``(iy, ix)`` bins and snap distances (cycles/um)."""
        out = [system.snap(*led) for led in self.leds]
        bins = np.array([(iy, ix) for iy, ix, _ in out], dtype=int).reshape(-1, 2)
        dist = np.array([d for _, _, d in out], dtype=float)
        return bins, dist


@dataclass(frozen=True, eq=False)
class ComplexObject:
    """Thin sample ``o = exp(j*phase - absorption)``."""

    phase: np.ndarray
    absorption: np.ndarray = None

    def __post_init__(self):
        phase = np.asarray(self.phase, dtype=float)
        absorption = np.zeros_like(phase) if self.absorption is None else np.asarray(self.absorption, dtype=float)
        if absorption.shape != phase.shape:
            raise ValueError("phase and absorption must share a grid")
        if np.any(absorption < 0):
            raise ValueError("absorption must be non-negative")
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "absorption", absorption)

    def transmission(self):
        return np.exp(1j * self.phase - self.absorption)


def build_ideal_pupil(system):
    """Binary disc of radius ``na_objective / wavelength_um``, DC at origin."""
    fy, fx = system.frequencies()
    return (np.hypot(fy, fx) <= system.cutoff).astype(np.complex128)


def led_field(led, system):
    """Tilted plane wave ``exp(j 2 pi u . r)`` at the LED's snapped grid frequency."""
    iy, ix, _ = system.snap(*led)
    h, w = system.shape
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    # integer bins keep the field exactly periodic on the grid
    return np.exp(2j * np.pi * ((iy * rows) % h / h + (ix * cols) % w / w))


def simulate_intensity(obj, led, pupil, system):
    """Full nonlinear intensity ``|p * (s . o)|^2`` for one LED."""
    field_ = led_field(led, system) * obj.transmission()
    return np.abs(ifft2(pupil * fft2(field_))) ** 2


def _shifted(pupil, iy, ix):
    """Return ``(P(u + u0), P(u0 - u))`` as arrays indexed by ``u``."""
    h, w = pupil.shape
    rows = np.arange(h)
    cols = np.arange(w)
    plus = pupil[np.ix_((rows + iy) % h, (cols + ix) % w)]
    minus = pupil[np.ix_((iy - rows) % h, (ix - cols) % w)]
    return plus, minus


def wotf_single(led, pupil, system):
    """Phase transfer function of a single LED.

    Uses the shifted-pupil form ``i (P*(u0) P(u+u0) - P(u0) P*(u0-u))`` of the
    correlation definition. With this normalization the flattened measurement
    spectrum is ``h * phase_hat`` to first order.
    """
    iy, ix, _ = system.snap(*led)
    h, w = pupil.shape
    p0 = pupil[iy % h, ix % w]
    plus, minus = _shifted(pupil, iy, ix)
    return 1j * (np.conj(p0) * plus - p0 * np.conj(minus))


def wotf_absorption_single(led, pupil, system):
    iy, ix, _ = system.snap(*led)
    h, w = pupil.shape
    p0 = pupil[iy % h, ix % w]
    plus, minus = _shifted(pupil, iy, ix)
    return -(np.conj(p0) * plus + p0 * np.conj(minus))


def wotf_bank(leds, pupil, system):
    """Stack single-LED WOTFs as the columns of an ``M x S`` matrix."""
    cols = [wotf_single(led, pupil, system).ravel() for led in leds]
    return np.stack(cols, axis=1) if cols else np.zeros((pupil.size, 0), complex)


def wotf_multi(bank, weights):
    """Weighted sum of single-LED WOTFs. ``bank`` is ``(M, S)`` or ``(S, H, W)``."""
    weights = np.asarray(weights, dtype=float)
    bank = np.asarray(bank)
    if bank.ndim == 2:
        if bank.shape[1] != weights.shape[0]:
            raise ValueError(f"bank has {bank.shape[1]} LEDs, weights have {weights.shape[0]}")
        return bank @ weights
    if bank.shape[0] != weights.shape[0]:
        raise ValueError(f"bank has {bank.shape[0]} LEDs, weights have {weights.shape[0]}")
    return np.tensordot(weights, bank, axes=(0, 0))


def synth_measurement(Y, weights):
    """Multi-LED measurement spectrum ``Y @ c`` from single-LED spectra."""
    Y = np.asarray(Y)
    weights = np.asarray(weights, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != weights.shape[0]:
        raise ValueError(f"Y of shape {Y.shape} does not match {weights.shape[0]} weights")
    return Y @ weights


def flatten_measurement(y):
    """Background-normalize an intensity image: ``(y - mean) / mean``."""
    y = np.asarray(y, dtype=float)
    m = y.mean()
    if not m > 0:
        raise DegenerateMeasurementError(f"cannot flatten an image with mean {m!r}")
    return (y - m) / m


def apply_weak_object_model(obj, led, pupil, system):
    """First-order (weak object) intensity for one LED."""
    iy, ix, _ = system.snap(*led)
    h, w = pupil.shape
    background = np.abs(pupil[iy % h, ix % w]) ** 2
    spec = wotf_single(led, pupil, system) * fft2(obj.phase)
    if np.any(obj.absorption):
        spec = spec + wotf_absorption_single(led, pupil, system) * fft2(obj.absorption)
    return background + ifft2(spec).real


_SYSTEM_KEYS = ("wavelength_um", "camera_pixel_um", "magnification", "na_objective", "grid_h", "grid_w")


def optics_from_config(d):
    """Build ``(OpticalSystem, LedArray or None)`` from a JSON-style mapping.

    Recognized keys are the :class:`OpticalSystem` fields plus ``leds``, a list
    of ``[na_x, na_y]`` pairs. Missing system fields keep their defaults.
    """
    if not isinstance(d, dict):
        raise ConfigurationError("optics config must be a JSON object")
    unknown = set(d) - set(_SYSTEM_KEYS) - {"leds"}
    if unknown:
        raise ConfigurationError(f"unknown optics config keys: {sorted(unknown)}")
    try:
        system = OpticalSystem(**{k: d[k] for k in _SYSTEM_KEYS if k in d})
        leds = LedArray(d["leds"]) if d.get("leds") is not None else None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed optics config: {exc}") from exc
    if leds is not None:
        leds.check_brightfield(system)
    return system, leds
