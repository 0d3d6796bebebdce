"""Finite-difference verification of the analytic design gradient."""

import itertools
from dataclasses import dataclass

import numpy as np

from .learn import TrainingPair, finite_diff_gradient, loss, loss_and_grad, project_constraints
from .optics import fft2
from .recon import ReconConfig

DEFAULT_TOL = 1e-5
DEFAULT_STEP = 1e-6
# entries smaller than this fraction of the largest finite-difference entry are
# compared against that floor instead of their own magnitude
RELATIVE_FLOOR = 1e-3


@dataclass
class GradcheckResult:
    index: int
    shape: tuple
    S: int
    K: int
    n_iters: int
    tau: float
    acceleration: str
    max_rel_error: float
    n_excluded: int
    passed: bool

    def row(self):
        return {
            "instance": self.index,
            "grid": f"{self.shape[0]}x{self.shape[1]}",
            "S": self.S,
            "K": self.K,
            "N": self.n_iters,
            "tau": self.tau,
            "acceleration": self.acceleration,
            "max_rel_error": self.max_rel_error,
            "excluded": self.n_excluded,
            "passed": self.passed,
        }


def relative_errors(G, fd, floor=RELATIVE_FLOOR):
    """Entrywise ``|G - fd| / max(|fd|, floor * max|fd|)``."""
    G = np.asarray(G, dtype=float)
    fd = np.asarray(fd, dtype=float)
    scale = np.max(np.abs(fd))
    if scale == 0:
        return np.abs(G - fd)
    return np.abs(G - fd) / np.maximum(np.abs(fd), floor * scale)


def random_instance(rng, shape, S, K, n_iters, tau, acceleration="fista-momentum", alpha=0.2):
    """Random small problem: design, training pair, WOTF bank and recon config."""
    M = shape[0] * shape[1]
    H = 0.5 * (rng.standard_normal((M, S)) + 1j * rng.standard_normal((M, S)))
    phase = rng.standard_normal(shape)
    Y = H * fft2(phase).ravel()[:, None]
    Y = Y + 0.05 * np.sqrt(M) * (rng.standard_normal((M, S)) + 1j * rng.standard_normal((M, S)))
    C = project_constraints(rng.random((S, K)) + 0.1, np.zeros((S, K), bool))
    config = ReconConfig(n_iters=n_iters, alpha=alpha, tau=tau, acceleration=acceleration)
    return C, TrainingPair(Y, phase), H, config


def default_suite(n_instances=20):
    """Instance parameters cycling through K in {1,2,4}, N in {1,3,10}, tau in {0, 1e-3}."""
    grids = [(8, 8), (16, 16), (5, 7), (1, 6), (12, 9)]
    combos = list(itertools.product((1, 2, 4), (1, 3, 10), (0.0, 1e-3)))
    out = []
    for i in range(n_instances):
        K, N, tau = combos[i % len(combos)]
        shape = grids[i % len(grids)]
        S = 3 + i % 6
        out.append(dict(shape=shape, S=max(S, K), K=K, n_iters=N, tau=tau))
    return out


def check_instance(C, pair, H, config, step=DEFAULT_STEP, tol=DEFAULT_TOL, corrupt=None):
    """Compare analytic and central-difference gradients for one instance.

    Entries whose error exceeds ``tol`` are re-differenced at ``step / 10``;
    if the quotient moves by more than ``tol`` (relative) the loss is not
    smooth there (a soft-threshold kink) and the entry is excluded.

    Returns
    -------
    max_rel_error : float
        Over the entries that were not excluded.
    n_excluded : int
    """
    _, G = loss_and_grad(C, pair, H, config)
    if corrupt is not None:
        G = corrupt(G)
    fd = finite_diff_gradient(C, pair, H, config, step)
    err = relative_errors(G, fd)
    scale = max(np.max(np.abs(fd)), np.finfo(float).tiny)
    keep = np.ones(C.shape, bool)
    for idx in zip(*np.nonzero(err > tol)):
        Cp = np.array(C, dtype=float)
        Cm = Cp.copy()
        Cp[idx] += step / 10
        Cm[idx] -= step / 10
        fine = (loss(Cp, pair, H, config) - loss(Cm, pair, H, config)) / (2 * step / 10)
        if abs(fine - fd[idx]) > tol * max(abs(fine), RELATIVE_FLOOR * scale):
            keep[idx] = False
    max_err = float(err[keep].max()) if keep.any() else 0.0
    return max_err, int((~keep).sum())


def run_gradcheck(n_instances=20, seed=0, tol=DEFAULT_TOL, step=DEFAULT_STEP, corrupt=None,
                  acceleration="fista-momentum"):
    """Run the randomized suite and return one :class:`GradcheckResult` per instance."""
    rng = np.random.default_rng(seed)
    results = []
    for i, params in enumerate(default_suite(n_instances)):
        C, pair, H, config = random_instance(rng, acceleration=acceleration, **params)
        err, excluded = check_instance(C, pair, H, config, step, tol, corrupt)
        results.append(GradcheckResult(i, params["shape"], params["S"], params["K"], params["n_iters"],
                                       params["tau"], acceleration, err, excluded, err <= tol))
    return results
