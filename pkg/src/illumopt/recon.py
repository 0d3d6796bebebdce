"""Unrolled accelerated proximal gradient phase recovery with anisotropic TV.

The data term is diagonal in Fourier space, so iterates are kept as spectra
(``H x W`` complex arrays, DC at origin). The TV proximal step runs on the
spatial image.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, DivergenceError
from .optics import fft2, ifft2

ACCELERATIONS = ("fista-momentum", "as-written")


@dataclass(frozen=True)
class ReconConfig:
    n_iters: int = 40
    alpha: float = 0.2
    tau: float = 1e-3
    acceleration: str = "fista-momentum"
    record_tape: bool = False

    def __post_init__(self):
        if int(self.n_iters) < 1:
            raise ConfigurationError("n_iters must be >= 1")
        if not self.alpha > 0:
            raise ConfigurationError("alpha must be positive")
        if self.tau < 0:
            raise ConfigurationError("tau must be non-negative")
        if self.acceleration not in ACCELERATIONS:
            raise ConfigurationError(f"acceleration must be one of {ACCELERATIONS}")

    @classmethod
    def from_dict(cls, d):
        keys = {"n_iters", "alpha", "tau", "acceleration", "record_tape"}
        unknown = set(d) - keys
        if unknown:
            raise ConfigurationError(f"unknown recon config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return {"n_iters": int(self.n_iters), "alpha": self.alpha, "tau": self.tau,
                "acceleration": self.acceleration}


def mu_schedule(n):
    """Acceleration parameter after ``n`` steps of ``mu <- (1 + sqrt(1 + 4 mu^2)) / 2``, ``mu(0) = 1``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    mu = 1.0
    for _ in range(n):
        mu = (1.0 + np.sqrt(1.0 + 4.0 * mu * mu)) / 2.0
    return mu


def combination_weights(n_iters, acceleration="fista-momentum"):
    """Weights ``a[n]`` with ``s(n) = a[n] phi(n-1) + (1 - a[n]) phi(n-2)``.

    Index 0 is unused; entries run to ``n_iters + 2`` so the backward pass can
    read one layer past the end.
    """
    mu = np.empty(n_iters + 3)
    mu[0] = 1.0
    for n in range(1, n_iters + 3):
        mu[n] = (1.0 + np.sqrt(1.0 + 4.0 * mu[n - 1] ** 2)) / 2.0
    if acceleration == "as-written":
        a = mu.copy()
    elif acceleration == "fista-momentum":
        a = np.ones_like(mu)
        a[1:] = 1.0 + (mu[:-1] - 1.0) / mu[1:]
    else:
        raise ConfigurationError(f"unknown acceleration {acceleration!r}")
    a[0] = np.nan
    return a


def gradient_step(s, measurements, wotfs, alpha):
    """``z = s + (alpha/K) sum_k conj(h_k) (y_k - h_k s)``."""
    measurements = np.asarray(measurements)
    wotfs = np.asarray(wotfs)
    K = len(wotfs)
    if K == 0:
        raise ValueError("need at least one measurement")
    if len(measurements) != K:
        raise ValueError(f"{len(measurements)} measurements for {K} transfer functions")
    acc = np.zeros_like(s, dtype=complex)
    for y, h in zip(measurements, wotfs):
        acc += np.conj(h) * (y - h * s)
    return s + (alpha / K) * acc


def _pair_groups(n):
    """Vertex-disjoint groups of circular neighbour pairs along an axis of length ``n``.

    Together the groups cover every circular edge ``(i, i+1 mod n)`` once.
    """
    if n < 2:
        return []
    if n == 2:
        # both circular edges join the same two samples
        return [(np.array([0]), np.array([1])), (np.array([1]), np.array([0]))]
    if n % 2 == 0:
        first = np.arange(0, n, 2)
        return [(first, first + 1), (first + 1, (first + 2) % n)]
    first = np.arange(0, n - 1, 2)
    return [(first, first + 1), (first + 1, first + 2), (np.array([n - 1]), np.array([0]))]


def tv_groups(shape):
    """All ``(axis, first, second)`` pair groups used by :func:`prox_tv`."""
    return [(axis, a, b) for axis in (0, 1) for a, b in _pair_groups(shape[axis])]


def _group_weights(shape):
    """Averaging weight and threshold multiplier of each pair group.

    Each axis's prox is approximated by averaging the prox of its ``m`` groups at
    ``m`` times the threshold; the two axes are then averaged. An axis without
    edges contributes the identity, which gets weight ``identity_weight``.
    """
    weights, scales = [], []
    identity_weight = 0.0
    for axis in (0, 1):
        m = len(_pair_groups(shape[axis]))
        if m == 0:
            identity_weight += 0.5
            continue
        weights += [0.5 / m] * m
        scales += [m] * m
    return weights, scales, identity_weight


@dataclass
class ProxMask:
    """Active/inactive soft-threshold indicators, one boolean array per pair group."""

    shape: tuple
    active: list = field(default_factory=list)
    identity: bool = False


def _take(x, axis, idx):
    return x[idx, :] if axis == 0 else x[:, idx]


def _put(x, axis, idx, values):
    if axis == 0:
        x[idx, :] = values
    else:
        x[:, idx] = values


def prox_tv_spatial(x, threshold):
    """Averaged per-axis anisotropic TV prox on a real image.

    Along one axis the neighbour pairs split into ``m`` vertex-disjoint groups,
    each with a closed-form prox (soft-threshold the pair difference, keep the
    pair mean). The axis prox is ``(1/m) sum_g prox_{m * threshold * TV_g}(x)``
    and the result is the mean of the two axis outputs.
    """
    x = np.asarray(x, dtype=float)
    groups = tv_groups(x.shape)
    if threshold == 0 or not groups:
        return x.copy(), ProxMask(x.shape, [np.ones(len(a), bool) for _, a, _ in groups], identity=True)
    weights, scales, identity_weight = _group_weights(x.shape)
    out = identity_weight * x
    active = []
    for (axis, ia, ib), wt, m in zip(groups, weights, scales):
        lam2 = 2.0 * m * threshold
        a = _take(x, axis, ia)
        b = _take(x, axis, ib)
        d = b - a
        mean = 0.5 * (a + b)
        act = np.abs(d) > lam2
        d_new = np.where(act, d - lam2 * np.sign(d), 0.0)
        g = x.copy()
        _put(g, axis, ia, mean - 0.5 * d_new)
        _put(g, axis, ib, mean + 0.5 * d_new)
        out += wt * g
        active.append(act)
    return out, ProxMask(x.shape, active)


def prox_tv_spatial_adjoint(g, mask):
    """Apply the (symmetric) Jacobian of :func:`prox_tv_spatial` to ``g``."""
    g = np.asarray(g, dtype=float)
    if mask.identity:
        return g.copy()
    groups = tv_groups(g.shape)
    weights, _, identity_weight = _group_weights(g.shape)
    out = identity_weight * g
    for (axis, ia, ib), act, wt in zip(groups, mask.active, weights):
        a = _take(g, axis, ia)
        b = _take(g, axis, ib)
        mean = 0.5 * (a + b)
        t = g.copy()
        _put(t, axis, ia, np.where(act, a, mean))
        _put(t, axis, ib, np.where(act, b, mean))
        out += wt * t
    return out


def prox_tv(z, threshold):
    """TV proximal step on a spectrum. Returns ``(phi_hat, mask)``.

    The real part of the spatial image is regularized; any imaginary part is
    passed through unchanged.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    x = ifft2(z)
    xr, mask = prox_tv_spatial(x.real, threshold)
    if mask.identity:
        return np.array(z, dtype=complex, copy=True), mask
    return fft2(xr + 1j * x.imag), mask


def prox_tv_adjoint(r, mask):
    """Backpropagate a spectrum-domain gradient through :func:`prox_tv`."""
    if mask.identity:
        return np.array(r, dtype=complex, copy=True)
    g = ifft2(r)
    return fft2(prox_tv_spatial_adjoint(g.real, mask) + 1j * g.imag)


@dataclass
class ReconTape:
    """Per-layer forward state needed by the backward pass (index 0 is layer 1)."""

    s: list = field(default_factory=list)
    z: list = field(default_factory=list)
    phi: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    weights: np.ndarray = None
    alpha: float = None
    threshold: float = None
    design_hash: str = None

    def __len__(self):
        return len(self.s)


@dataclass
class PhaseEstimate:
    spectrum: np.ndarray

    @property
    def image(self):
        x = ifft2(self.spectrum)
        scale = max(np.abs(x.real).max(), np.finfo(float).tiny)
        residue = np.abs(x.imag).max() / scale
        if residue > 1e-9:
            raise ValueError(f"reconstruction is not real (relative imaginary residue {residue:.2e})")
        return x.real


def apgd_recover(measurements, wotfs, config=ReconConfig()):
    """Run exactly ``config.n_iters`` APGD layers from zero.

    Parameters
    ----------
    measurements, wotfs : array_like, shape (K, H, W)
        Measurement spectra and their multi-LED transfer functions.
    config : ReconConfig

    Returns
    -------
    estimate : PhaseEstimate
    tape : ReconTape or None
        Populated only when ``config.record_tape`` is set.
    """
    measurements = np.asarray(measurements, dtype=complex)
    wotfs = np.asarray(wotfs, dtype=complex)
    if measurements.ndim != 3 or measurements.shape != wotfs.shape:
        raise ValueError("measurements and wotfs must both have shape (K, H, W)")
    K = len(wotfs)
    if K < 1:
        raise ValueError("need at least one measurement")
    N = int(config.n_iters)
    alpha = float(config.alpha)
    threshold = alpha * config.tau
    a = combination_weights(N, config.acceleration)

    tape = ReconTape(weights=a, alpha=alpha, threshold=threshold) if config.record_tape else None
    prev = np.zeros(measurements.shape[1:], complex)
    cur = np.zeros_like(prev)
    for n in range(1, N + 1):
        s = a[n] * cur + (1.0 - a[n]) * prev
        z = gradient_step(s, measurements, wotfs, alpha)
        phi, mask = prox_tv(z, threshold)
        if not np.all(np.isfinite(phi)):
            raise DivergenceError(n)
        if tape is not None:
            tape.s.append(s)
            tape.z.append(z)
            tape.phi.append(phi)
            tape.masks.append(mask)
        prev, cur = cur, phi
    return PhaseEstimate(cur), tape


def data_fidelity(phi_hat, measurements, wotfs):
    """``(1/2K) sum_k ||y_k - h_k phi||^2``."""
    measurements = np.asarray(measurements)
    K = len(measurements)
    return sum(0.5 * np.sum(np.abs(y - h * phi_hat) ** 2) for y, h in zip(measurements, wotfs)) / K
