"""Synthetic training data and reconstruction metrics."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, SchemaError
from .io import load_array, read_json, save_array, write_json
from .learn import TrainingPair
from .optics import (
    ComplexObject,
    LedArray,
    OpticalSystem,
    build_ideal_pupil,
    fft2,
    flatten_measurement,
    ifft2,
    simulate_intensity,
)

logger = logging.getLogger(__name__)

PSNR_CAP_DB = 300.0


def make_led_layout(count, na_objective, fill=0.92):
    """Concentric-ring LED layout inside ``fill * na_objective``.

    Ring ``i`` holds roughly ``6 i`` LEDs so areal density stays near uniform.
    Every ring has an even count and starts on the x axis, so the layout is
    exactly mirror-symmetric about both axes. An odd ``count`` adds a centre LED.
    """
    count = int(count)
    if count < 1:
        raise ConfigurationError("need at least one LED")
    remaining = count - (count % 2)
    n_rings = 0
    while 3 * n_rings * (n_rings + 1) < remaining:
        n_rings += 1
    leds = [(0.0, 0.0)] if count % 2 else []
    if n_rings:
        share = np.arange(1, n_rings + 1, dtype=float)
        sizes = [max(2, 2 * int(round(remaining * w / share.sum() / 2))) for w in share]
        sizes[-1] += remaining - sum(sizes)
        if sizes[-1] < 2:
            raise ConfigurationError(f"cannot lay out {count} LEDs on rings")
        for i, n in enumerate(sizes, start=1):
            radius = fill * na_objective * i / n_rings
            leds.extend(_mirrored_ring(radius, n))
    return LedArray(leds)


def _mirrored_ring(radius, n):
    """``n`` (even) points on a ring, built in one quadrant and mirrored."""
    pts = set()
    for j in range(n // 4 + 1):
        theta = 2.0 * np.pi * j / n
        if theta > np.pi / 2 + 1e-12:
            break
        x, y = radius * np.cos(theta), radius * np.sin(theta)
        if j == 0:
            y = 0.0
        if abs(theta - np.pi / 2) < 1e-12:
            x = 0.0
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                pts.add((sx * x + 0.0, sy * y + 0.0))
    pts = sorted(pts, key=lambda p: np.arctan2(p[1], p[0]) % (2 * np.pi))
    if len(pts) != n:
        raise ConfigurationError(f"ring of {n} LEDs is not mirror-symmetric")
    return pts


def band_limited_field(shape, band, rng, slope=0.0):
    """Real Gaussian random field whose spectrum is zero outside ``band``.

    ``band`` is ``(low, high)`` in cycles/pixel of radial frequency; the DC
    sample is always dropped. Inside the band the amplitude falls off as
    ``|f| ** -slope`` (``slope=1`` mimics natural images).
    """
    lo, hi = band
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    rad = np.hypot(fy, fx)
    keep = (rad >= lo) & (rad <= hi) & (rad > 0)
    envelope = np.zeros(shape)
    envelope[keep] = rad[keep] ** -slope
    spec = fft2(rng.standard_normal(shape)) * envelope
    return ifft2(spec).real


def _shapes(shape, rng, n_shapes):
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    img = np.zeros(shape)
    for _ in range(n_shapes):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        ry, rx = rng.uniform(0.08, 0.3) * h, rng.uniform(0.08, 0.3) * w
        height = rng.uniform(-1.0, 1.0)
        if rng.random() < 0.5:
            inside = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
        else:
            inside = (np.abs(yy - cy) <= ry / 2) & (np.abs(xx - cx) <= rx / 2)
        img[inside] += height
    return img


def generate_phase_targets(count, shape, seed, amplitude_rad=1.0, band=(0.0, 0.25),
                           field_weight=0.8, slope=1.0, n_shapes=(2, 6)):
    """Procedural zero-mean phase maps with peak ``|phase| == amplitude_rad``.

    Each map mixes a band-limited random field and a few piecewise-constant
    ellipses/rectangles. Map ``i`` depends only on ``(seed, i)``.
    """
    if not amplitude_rad > 0:
        raise ValueError("amplitude_rad must be positive")
    children = np.random.SeedSequence(seed).spawn(count)
    out = []
    for ss in children:
        rng = np.random.default_rng(ss)
        fld = band_limited_field(shape, band, rng, slope)
        fld /= max(np.abs(fld).max(), 1e-300)
        blobs = _shapes(shape, rng, int(rng.integers(n_shapes[0], n_shapes[1] + 1)))
        blobs /= max(np.abs(blobs).max(), 1e-300)
        phase = field_weight * fld + (1.0 - field_weight) * blobs
        phase = phase - phase.mean()
        peak = np.abs(phase).max()
        if peak == 0:
            phase = fld
            peak = np.abs(phase).max()
        out.append(phase / peak * amplitude_rad)
    return out


def simulate_single_led_stack(phase, leds, pupil, system, noise_std=0.0, rng=None):
    """Nonlinear single-LED measurements of a pure phase object.

    Returns the ``M x S`` matrix whose column ``s`` is the spectrum of the
    flattened intensity image under LED ``s``.
    """
    obj = ComplexObject(phase)
    cols = []
    for led in leds:
        y = simulate_intensity(obj, led, pupil, system)
        if noise_std > 0:
            y = y + noise_std * rng.standard_normal(y.shape)
        cols.append(fft2(flatten_measurement(y)).ravel())
    return np.stack(cols, axis=1)


def psnr_db(estimate, truth):
    """PSNR with the dynamic range of ``truth`` as peak; capped at 300 dB."""
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch {estimate.shape} vs {truth.shape}")
    peak = truth.max() - truth.min()
    if not peak > 0:
        raise ValueError("PSNR is undefined for a constant ground truth")
    mse = np.mean((estimate - truth) ** 2)
    if mse == 0:
        return PSNR_CAP_DB
    return float(min(PSNR_CAP_DB, 10.0 * np.log10(peak**2 / mse)))


def l2_error(estimate, truth):
    return float(np.linalg.norm(np.asarray(estimate) - np.asarray(truth)))


@dataclass
class DatasetConfig:
    wavelength_um: float = 0.532
    camera_pixel_um: float = 6.5
    magnification: float = 20.0
    na_objective: float = 0.25
    grid_h: int = 64
    grid_w: int = 64
    n_leds: int = 37
    leds: list = None
    n_train: int = 40
    n_test: int = 10
    amplitude_rad: float = 1.0
    band: tuple = (0.0, 0.25)
    field_weight: float = 0.8
    slope: float = 1.0
    noise_std: float = 0.0
    seed: int = 0

    @classmethod
    def full_scale(cls, **overrides):
        base = dict(grid_h=95, grid_w=95, n_leds=69, n_train=90, n_test=10)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown dataset config keys: {sorted(unknown)}")
        d = dict(d)
        if "band" in d:
            d["band"] = tuple(d["band"])
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["band"] = list(self.band)
        return d

    def system(self):
        return OpticalSystem(self.wavelength_um, self.camera_pixel_um, self.magnification,
                             self.na_objective, self.grid_h, self.grid_w)

    def led_array(self):
        if self.leds is not None:
            return LedArray(self.leds)
        return make_led_layout(self.n_leds, self.na_objective)


@dataclass
class Dataset:
    pairs: list
    train: list
    test: list
    system: OpticalSystem
    leds: LedArray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.train) & set(self.test):
            raise ValueError("train and test splits overlap")
        n = len(self.pairs)
        if any(not 0 <= i < n for i in list(self.train) + list(self.test)):
            raise ValueError("split index out of range")

    def split(self, name):
        idx = {"train": self.train, "test": self.test}[name]
        return [self.pairs[i] for i in idx]


def build_dataset(config=None, n_threads=1):
    """Generate a dataset; a pure function of ``config`` (seed included)."""
    config = config or DatasetConfig()
    system = config.system()
    leds = config.led_array()
    leds.check_brightfield(system)
    pupil = build_ideal_pupil(system)
    total = config.n_train + config.n_test
    if config.n_train < 1:
        raise ConfigurationError("need at least one training pair")
    phases = generate_phase_targets(total, system.shape, config.seed, config.amplitude_rad,
                                    config.band, config.field_weight, config.slope)
    noise_seeds = np.random.SeedSequence([config.seed, 1]).spawn(total)

    def one(i):
        rng = np.random.default_rng(noise_seeds[i])
        Y = simulate_single_led_stack(phases[i], leds, pupil, system, config.noise_std, rng)
        return TrainingPair(Y, phases[i])

    if n_threads is None or n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            pairs = list(pool.map(one, range(total)))
    else:
        pairs = [one(i) for i in range(total)]
    train = list(range(config.n_train))
    test = list(range(config.n_train, total))
    return Dataset(pairs, train, test, system, leds, {"config": config.to_dict(), "seed": config.seed})


def save_dataset(dataset, out_dir):
    """Write a dataset as ``manifest.json`` plus per-pair array files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i, pair in enumerate(dataset.pairs):
        stem = f"pair_{i:04d}"
        save_array(out / f"{stem}_Y", pair.Y, "fourier")
        save_array(out / f"{stem}_phase", pair.phase, "spatial")
        files.append({"Y": f"{stem}_Y", "phase": f"{stem}_phase"})
    manifest = {
        "format": "illumopt-dataset/1",
        "system": dataset.system.to_dict(),
        "leds": [list(l) for l in dataset.leds],
        "splits": {"train": list(dataset.train), "test": list(dataset.test)},
        "pairs": files,
        "provenance": dataset.provenance,
    }
    write_json(out / "dataset.json", manifest)
    return out


def load_dataset(path):
    path = Path(path)
    meta = read_json(path / "dataset.json")
    try:
        system = OpticalSystem(**meta["system"])
        leds = LedArray(meta["leds"])
        pairs = []
        for entry in meta["pairs"]:
            Y, _ = load_array(path / entry["Y"])
            phase, _ = load_array(path / entry["phase"])
            pairs.append(TrainingPair(Y, phase))
        return Dataset(pairs, meta["splits"]["train"], meta["splits"]["test"], system, leds,
                       meta.get("provenance", {}))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}/dataset.json is malformed: {exc}") from exc
