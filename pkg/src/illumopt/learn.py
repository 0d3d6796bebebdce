"""Learning LED illumination weights through the unrolled reconstruction.

Shapes used throughout: ``Y`` and ``H`` are ``(M, S)`` complex matrices whose
columns are flattened ``H x W`` spectra (single-LED measurements and WOTFs),
``C`` is the ``(S, K)`` design.
"""

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConfigurationError,
    ConstraintViolationError,
    DegenerateDesignError,
    DivergenceError,
    SchemaError,
    StaleTapeError,
)
from .io import read_json, write_json
from .optics import fft2
from .recon import ReconConfig, apgd_recover, prox_tv_adjoint

logger = logging.getLogger(__name__)

FEASIBILITY_ATOL = 1e-12


@dataclass
class DesignMatrix:
    """LED weights ``C`` (S x K) and the forbidden-LED masks (True = forced off)."""

    weights: np.ndarray
    masks: np.ndarray = None

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError("weights must be an S x K matrix")
        if self.masks is None:
            self.masks = np.zeros(self.weights.shape, bool)
        self.masks = np.array(self.masks, dtype=bool)
        if self.masks.shape != self.weights.shape:
            raise ValueError("masks must match the weights' shape")

    @property
    def S(self):
        return self.weights.shape[0]

    @property
    def K(self):
        return self.weights.shape[1]

    def violations(self, atol=FEASIBILITY_ATOL):
        """Human-readable list of constraint violations (empty when feasible)."""
        C, m = self.weights, self.masks
        out = []
        for s, k in zip(*np.nonzero(~np.isfinite(C))):
            out.append(f"weights[{s}][{k}] is not finite")
        for s, k in zip(*np.nonzero(C < 0)):
            out.append(f"weights[{s}][{k}] = {C[s, k]!r} is negative")
        for s, k in zip(*np.nonzero(m & (C != 0))):
            out.append(f"weights[{s}][{k}] = {C[s, k]!r} is nonzero but masked")
        for k, total in enumerate(C.sum(axis=0)):
            if not abs(total - 1.0) <= atol:
                out.append(f"column {k} sums to {total!r}, not 1")
        return out

    def is_feasible(self, atol=FEASIBILITY_ATOL):
        return not self.violations(atol)

    def content_hash(self):
        return hashlib.sha256(np.ascontiguousarray(self.weights).tobytes()).hexdigest()

    def to_dict(self):
        return {
            "S": self.S,
            "K": self.K,
            "weights": self.weights.tolist(),
            "masks": self.masks.astype(int).tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or not {"S", "K", "weights", "masks"} <= set(d):
            raise SchemaError("design JSON needs keys S, K, weights, masks")
        try:
            weights = np.array(d["weights"], dtype=float)
            masks = np.array(d["masks"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"design arrays are malformed: {exc}") from exc
        S, K = d["S"], d["K"]
        if weights.shape != (S, K):
            raise SchemaError(f"weights have shape {weights.shape}, header says S={S}, K={K}")
        if masks.shape != (S, K) or not np.all((masks == 0) | (masks == 1)):
            raise SchemaError(f"masks must be a 0/1 matrix of shape ({S}, {K})")
        return cls(weights, masks.astype(bool))

    def save(self, path):
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        return cls.from_dict(read_json(path))


@dataclass(frozen=True)
class LearnConfig:
    learn_rate: float = 1e-2
    n_updates: int = 200
    batch_fraction: float = 0.1
    momentum_schedule: str = "accelerated"
    beta: float = 0.5
    rng_seed: int = 0
    reproject: bool = True
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.learn_rate < 0:
            raise ConfigurationError("learn_rate must be non-negative")
        if int(self.n_updates) < 0:
            raise ConfigurationError("n_updates must be non-negative")
        if not 0 < self.batch_fraction <= 1:
            raise ConfigurationError("batch_fraction must lie in (0, 1]")
        if self.momentum_schedule not in ("accelerated", "constant"):
            raise ConfigurationError("momentum_schedule must be 'accelerated' or 'constant'")
        if not 0 < self.beta <= 1:
            raise ConfigurationError("beta must lie in (0, 1]")

    def batch_size(self, n_pairs):
        return max(1, min(n_pairs, int(round(self.batch_fraction * n_pairs))))

    def momentum(self, t):
        if self.momentum_schedule == "constant":
            return self.beta
        return (t + 1.0) / (t + 4.0)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown learn config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class TrainingPair:
    """Single-LED spectra ``Y`` (M x S) and the true phase image."""

    Y: np.ndarray
    phase: np.ndarray
    phase_hat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=complex)
        self.phase = np.asarray(self.phase, dtype=float)
        if self.Y.ndim != 2 or self.Y.shape[0] != self.phase.size:
            raise ValueError(f"Y of shape {self.Y.shape} does not match a phase image of {self.phase.shape}")
        self.phase_hat = fft2(self.phase)


def project_constraints(C, masks):
    """Clamp negatives, zero masked LEDs, then scale every column to unit sum.

    Columns that already satisfy all three constraints are returned untouched,
    which makes the projection exactly idempotent.
    """
    C = np.array(C, dtype=float)
    masks = np.asarray(masks, dtype=bool)
    if masks.shape != C.shape:
        raise ValueError("masks must match C")
    out = C.copy()
    for k in range(C.shape[1]):
        col = C[:, k]
        if np.all(col >= 0) and not np.any(col[masks[:, k]]) and abs(col.sum() - 1.0) <= FEASIBILITY_ATOL:
            continue
        col = np.where(col < 0, 0.0, col)
        col = np.where(masks[:, k], 0.0, col)
        total = col.sum()
        if not total > 0:
            raise DegenerateDesignError(f"design column {k} has no positive admissible weight")
        out[:, k] = col / total
    return out


def _check_inputs(C, Y, H):
    C = np.asarray(C, dtype=float)
    if C.ndim != 2:
        raise ValueError("C must be an S x K matrix")
    if Y.shape != H.shape or Y.shape[1] != C.shape[0]:
        raise ValueError(f"Y {Y.shape}, H {H.shape} and C {C.shape} are inconsistent")
    return C


def forward(C, Y, H, shape, config, record_tape=False):
    """Synthesize measurements for design ``C`` and reconstruct.

    Returns ``(phi_hat, tape)``; the tape carries a hash of ``C``.
    """
    C = _check_inputs(C, np.asarray(Y), np.asarray(H))
    K = C.shape[1]
    yk = (Y @ C).T.reshape((K,) + tuple(shape))
    hk = (H @ C).T.reshape((K,) + tuple(shape))
    cfg = ReconConfig(config.n_iters, config.alpha, config.tau, config.acceleration, record_tape)
    est, tape = apgd_recover(yk, hk, cfg)
    if tape is not None:
        tape.design_hash = hashlib.sha256(np.ascontiguousarray(C).tobytes()).hexdigest()
    return est.spectrum, tape


def loss(C, pair, H, config):
    """Squared l2 phase error of the reconstruction for one training pair.

    Evaluated on spectra with the unitary (Parseval) scaling, so it equals
    ``0.5 * ||phi - phi_true||^2`` on the spatial images.
    """
    phi, _ = forward(C, pair.Y, H, pair.phase.shape, config)
    return 0.5 * float(np.sum(np.abs(phi - pair.phase_hat) ** 2)) / phi.size


def backprop_example(tape, residual, C, Y, H):
    """Analytic gradient of the single-example loss with respect to ``C``.

    Parameters
    ----------
    tape : ReconTape
        Recorded by :func:`forward` with the same ``C``.
    residual : ndarray, shape (H, W)
        Loss gradient with respect to the output spectrum ``phi_hat(N)``;
        ``(phi_hat(N) - phase_hat) / M`` for :func:`loss`.
    C, Y, H : ndarray
        Design (S x K), single-LED spectra and WOTF bank (both M x S).

    Returns
    -------
    G : ndarray, shape (S, K)
    """
    C = _check_inputs(C, Y, H)
    if tape is None or not len(tape):
        raise ValueError("backprop needs a recorded tape")
    if tape.design_hash != hashlib.sha256(np.ascontiguousarray(C).tobytes()).hexdigest():
        raise StaleTapeError("tape was recorded with a different design matrix")
    shape = residual.shape
    K = C.shape[1]
    N = len(tape)
    a = tape.weights
    alpha = tape.alpha
    hk = (H @ C).T.reshape((K,) + shape)
    yk = (Y @ C).T.reshape((K,) + shape)
    damp = 1.0 - (alpha / K) * np.sum(np.abs(hk) ** 2, axis=0)

    # v[n] = dF/ds(n); layers N+1 and N+2 do not exist
    v_next = np.zeros(shape, complex)
    v_next2 = np.zeros(shape, complex)
    sum_b = np.zeros(shape, complex)
    sum_bs = np.zeros(shape, complex)
    for n in range(N, 0, -1):
        r = a[n + 1] * v_next + (1.0 - a[n + 2]) * v_next2
        if n == N:
            r = r + residual
        b = prox_tv_adjoint(r, tape.masks[n - 1])
        v = damp * b
        # per-layer C-partials are linear in conj(b) and conj(b) * s; accumulate those
        cb = np.conj(b)
        sum_b += cb
        sum_bs += cb * tape.s[n - 1]
        v_next2, v_next = v_next, v

    sum_b = sum_b.ravel()
    sum_bs = sum_bs.ravel()
    G = np.empty(C.shape)
    conjH = np.conj(H)
    for k in range(K):
        h = hk[k].ravel()
        y = yk[k].ravel()
        via_wotf_conj = (y * sum_b - h * sum_bs) @ conjH
        via_measurement = (np.conj(h) * sum_b) @ Y
        via_wotf = (np.conj(h) * sum_bs) @ H
        g = (alpha / K) * (via_wotf_conj + via_measurement - via_wotf)
        G[:, k] = g.real
    return G


def loss_and_grad(C, pair, H, config):
    phi, tape = forward(C, pair.Y, H, pair.phase.shape, config, record_tape=True)
    residual = phi - pair.phase_hat
    value = 0.5 * float(np.sum(np.abs(residual) ** 2)) / phi.size
    return value, backprop_example(tape, residual / phi.size, C, pair.Y, H)


def finite_diff_gradient(C, pair, H, config, step=1e-6):
    """Central-difference gradient of :func:`loss` over every entry of ``C``."""
    if not step > 0:
        raise ValueError("step must be positive")
    C = np.array(C, dtype=float)
    G = np.zeros_like(C)
    for idx in np.ndindex(C.shape):
        Cp = C.copy()
        Cm = C.copy()
        Cp[idx] += step
        Cm[idx] -= step
        G[idx] = (loss(Cp, pair, H, config) - loss(Cm, pair, H, config)) / (2.0 * step)
    return G


def batch_loss_and_grad(C, pairs, H, config, n_threads=1):
    """Per-example losses and gradients, evaluated concurrently, returned in input order."""
    work = lambda p: loss_and_grad(C, p, H, config)  # noqa: E731
    if n_threads is None or n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(work, pairs))
    else:
        results = [work(p) for p in pairs]
    losses = [r[0] for r in results]
    grads = [r[1] for r in results]
    return losses, grads


def _fixed_order_sum(arrays):
    total = np.zeros_like(arrays[0])
    for a in arrays:
        total = total + a
    return total


@dataclass
class TrainResult:
    design: DesignMatrix
    loss_history: list
    wall_times: list
    batches: list


def pbld_train(pairs, C0, H, recon_config, learn_config, masks=None, n_threads=1, callback=None):
    """Projected, momentum-accelerated gradient descent on the design.

    Parameters
    ----------
    pairs : sequence of TrainingPair
    C0 : DesignMatrix or ndarray
        Feasible starting design.
    H : ndarray, shape (M, S)
        Single-LED WOTF bank.
    recon_config : ReconConfig
    learn_config : LearnConfig
    masks : ndarray, optional
        Forbidden-LED masks; taken from ``C0`` when it is a DesignMatrix.
    n_threads : int
        Examples of a batch are evaluated on this many threads.
    callback : callable, optional
        Called as ``callback(t, C, mean_batch_loss)`` after every update.

    Returns
    -------
    TrainResult
    """
    if isinstance(C0, DesignMatrix):
        masks = C0.masks if masks is None else masks
        C0 = C0.weights
    masks = np.zeros(np.shape(C0), bool) if masks is None else np.asarray(masks, bool)
    pairs = list(pairs)
    if not pairs:
        raise ConfigurationError("training set is empty")
    start = DesignMatrix(C0, masks)
    bad = start.violations()
    if bad:
        raise ConstraintViolationError("initial design is infeasible: " + "; ".join(bad[:5]))

    C = start.weights.copy()
    rng = np.random.default_rng(learn_config.rng_seed)
    L = len(pairs)
    batch = learn_config.batch_size(L)
    gamma = learn_config.learn_rate
    history, times, batches = [], [], []
    t0 = time.perf_counter()
    for t in range(int(learn_config.n_updates)):
        idx = np.sort(rng.choice(L, size=batch, replace=False))
        try:
            losses, grads = batch_loss_and_grad(C, [pairs[i] for i in idx], H, recon_config, n_threads)
        except DivergenceError as exc:
            raise DivergenceError(exc.layer, f"update {t}: {exc}") from exc
        G = _fixed_order_sum(grads)
        try:
            C_step = project_constraints(C - (gamma / batch) * G, masks)
            C_new = C + learn_config.momentum(t) * (C_step - C)
            if learn_config.reproject:
                C_new = project_constraints(C_new, masks)
        except DegenerateDesignError as exc:
            raise DegenerateDesignError(f"update {t}: {exc}") from exc
        C = C_new
        mean_loss = float(np.mean(losses))
        history.append(mean_loss)
        times.append(time.perf_counter() - t0)
        batches.append(idx.tolist())
        logger.debug("update %d: mean batch loss %.6g", t, mean_loss)
        if callback is not None:
            callback(t, C, mean_loss)
    return TrainResult(DesignMatrix(C, masks), history, times, batches)
