"""scikit-learn style estimators over the simulation, reconstruction and learning code.

Data conventions
----------------
X : ndarray, shape (L, M, S)
    Per sample, the spectra of the flattened single-LED measurements, one
    column per LED (``M = grid_h * grid_w``).
y : ndarray, shape (L, grid_h, grid_w)
    Ground-truth phase images in radians.

``transform`` returns the multiplexed measurement spectra ``(L, K, H, W)`` a
design would record, ``predict`` returns reconstructed phase images and
``score`` the mean PSNR in dB.
"""

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_measurement_stack,
    check_phase_stack,
    check_scalar,
    effective_threads,
)
from .baselines import (
    design_annular,
    design_qdpc,
    design_random,
    initial_design,
    load_external_design,
    semicircle_names,
)
from .dataset import make_led_layout, psnr_db
from .exceptions import ConfigurationError
from .learn import LearnConfig, TrainingPair, forward, pbld_train
from .optics import LedArray, OpticalSystem, build_ideal_pupil, ifft2, wotf_bank
from .recon import ACCELERATIONS, ReconConfig

BASELINE_KINDS = ("qdpc", "annular", "random", "file")


class _IlluminationDesignBase(TransformerMixin, BaseEstimator):
    """Shared optics setup, transform/predict/score for a fitted ``design_``."""

    def _recon_config(self):
        check_scalar(self.n_iters, "n_iters", numbers.Integral, low=1)
        check_scalar(self.alpha, "alpha", low=0, low_inclusive=False)
        check_scalar(self.tau, "tau", low=0)
        if self.acceleration not in ACCELERATIONS:
            raise ConfigurationError(f"acceleration must be one of {ACCELERATIONS}")
        return ReconConfig(self.n_iters, self.alpha, self.tau, self.acceleration)

    def _optics(self):
        system = self.system if self.system is not None else OpticalSystem()
        if not isinstance(system, OpticalSystem):
            raise ConfigurationError("system must be an OpticalSystem")
        if self.leds is None:
            leds = make_led_layout(37, system.na_objective)
        else:
            leds = self.leds if isinstance(self.leds, LedArray) else LedArray(self.leds)
        leds.check_brightfield(system)
        return system, leds

    def _setup(self):
        check_scalar(self.n_measurements, "n_measurements", numbers.Integral)
        semicircle_names(self.n_measurements)
        self._recon_config()
        self.system_, self.leds_ = self._optics()
        self.wotf_bank_ = wotf_bank(self.leds_, build_ideal_pupil(self.system_), self.system_)
        self.n_leds_ = len(self.leds_)

    def _check_X(self, X):
        check_is_fitted(self, "design_")
        return check_measurement_stack(X, self.n_leds_, self.wotf_bank_.shape[0])

    def transform(self, X):
        """Multiplexed measurement spectra, shape ``(L, K, H, W)``."""
        X = self._check_X(X)
        C = self.design_.weights
        shape = self.system_.shape
        return np.stack([(Y @ C).T.reshape((C.shape[1],) + shape) for Y in X])

    def predict(self, X):
        """Reconstructed phase images, shape ``(L, H, W)``."""
        X = self._check_X(X)
        config = self._recon_config()
        shape = self.system_.shape
        out = []
        for Y in X:
            phi_hat, _ = forward(self.design_.weights, Y, self.wotf_bank_, shape, config)
            out.append(ifft2(phi_hat).real)
        return np.stack(out)

    def score(self, X, y):
        """Mean PSNR (dB) of the reconstructions against ``y``."""
        estimates = self.predict(X)
        y = check_phase_stack(y, self.system_.shape, len(estimates))
        return float(np.mean([psnr_db(e, t) for e, t in zip(estimates, y)]))


class LearnedIlluminationDesign(_IlluminationDesignBase):
    """Learn LED weights by gradient descent through the unrolled reconstruction.

    Parameters
    ----------
    system : OpticalSystem, optional
        Defaults to ``OpticalSystem()``.
    leds : LedArray or sequence of (na_x, na_y), optional
        Defaults to a 37-LED ring layout.
    n_measurements : int
        Number of coded measurements ``K`` (2, 3 or 4).
    n_iters, alpha, tau, acceleration
        Unrolled solver settings.
    learn_rate, n_updates, batch_fraction, momentum_schedule, beta, reproject
        Training settings, see :class:`~illumopt.learn.LearnConfig`.
    init_perturb : float
        Relative random perturbation of the uniform starting design.
    random_state : int
        Seeds batch sampling and the optional perturbation.
    n_jobs : int
        Threads for per-example gradients; ``None`` or ``<= 0`` uses all cores.

    Attributes
    ----------
    design_ : DesignMatrix
    loss_history_ : list of float
        Mean batch loss after every update.
    wotf_bank_ : ndarray, shape (M, S)
    """

    def __init__(self, system=None, leds=None, n_measurements=4, n_iters=40, alpha=0.2, tau=1e-3,
                 acceleration="fista-momentum", learn_rate=1e-2, n_updates=200, batch_fraction=0.1,
                 momentum_schedule="accelerated", beta=0.5, reproject=True, init_perturb=0.0,
                 random_state=0, n_jobs=1):
        self.system = system
        self.leds = leds
        self.n_measurements = n_measurements
        self.n_iters = n_iters
        self.alpha = alpha
        self.tau = tau
        self.acceleration = acceleration
        self.learn_rate = learn_rate
        self.n_updates = n_updates
        self.batch_fraction = batch_fraction
        self.momentum_schedule = momentum_schedule
        self.beta = beta
        self.reproject = reproject
        self.init_perturb = init_perturb
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _learn_config(self):
        check_scalar(self.n_updates, "n_updates", numbers.Integral, low=0)
        check_scalar(self.random_state, "random_state", numbers.Integral)
        return LearnConfig(self.learn_rate, self.n_updates, self.batch_fraction,
                           self.momentum_schedule, self.beta, self.random_state, self.reproject)

    def fit(self, X, y, callback=None):
        self._setup()
        recon = self._recon_config()
        learn = self._learn_config()
        X = check_measurement_stack(X, self.n_leds_, self.wotf_bank_.shape[0])
        y = check_phase_stack(y, self.system_.shape, len(X))
        pairs = [TrainingPair(Y, phase) for Y, phase in zip(X, y)]
        start = initial_design(self.leds_, self.n_measurements, self.init_perturb, self.random_state)
        result = pbld_train(pairs, start, self.wotf_bank_, recon, learn,
                            n_threads=effective_threads(self.n_jobs), callback=callback)
        self.initial_design_ = start
        self.design_ = result.design
        self.loss_history_ = result.loss_history
        self.train_result_ = result
        return self


class BaselineIlluminationDesign(_IlluminationDesignBase):
    """Fixed reference design; ``fit`` only builds it and ignores the data.

    ``kind`` is one of ``"qdpc"``, ``"annular"``, ``"random"`` or ``"file"``
    (reads ``path``).
    """

    def __init__(self, system=None, leds=None, n_measurements=4, kind="qdpc", ring_fraction=0.8,
                 path=None, random_state=0, n_iters=40, alpha=0.2, tau=1e-3,
                 acceleration="fista-momentum"):
        self.system = system
        self.leds = leds
        self.n_measurements = n_measurements
        self.kind = kind
        self.ring_fraction = ring_fraction
        self.path = path
        self.random_state = random_state
        self.n_iters = n_iters
        self.alpha = alpha
        self.tau = tau
        self.acceleration = acceleration

    def fit(self, X=None, y=None):
        if self.kind not in BASELINE_KINDS:
            raise ConfigurationError(f"kind must be one of {BASELINE_KINDS}, got {self.kind!r}")
        self._setup()
        K = self.n_measurements
        if self.kind == "qdpc":
            named = design_qdpc(self.leds_, K)
        elif self.kind == "annular":
            named = design_annular(self.leds_, K, self.system_.na_objective, self.ring_fraction)
        elif self.kind == "random":
            named = design_random(self.leds_, K, self.random_state)
        else:
            if self.path is None:
                raise ConfigurationError("kind='file' needs a path")
            named = load_external_design(self.path, n_leds=self.n_leds_)
            if named.design.K != K:
                raise ConfigurationError(f"{self.path} has K={named.design.K}, expected {K}")
        self.name_ = named.name
        self.design_ = named.design
        return self
