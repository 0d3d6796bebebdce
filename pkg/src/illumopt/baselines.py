"""Reference illumination designs: half-circle qDPC, annular, random, and file intake."""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, ConstraintViolationError, SchemaError
from .learn import DesignMatrix, project_constraints
from .io import read_json

# outward normal of each allowed semicircle, in (na_x, na_y)
SEMICIRCLES = {
    "top": (0.0, 1.0),
    "bottom": (0.0, -1.0),
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
}
SEMICIRCLE_ORDER = {
    1: ("top",),
    2: ("top", "bottom"),
    3: ("top", "bottom", "left"),
    4: ("top", "bottom", "left", "right"),
}
_ON_AXIS_TOL = 1e-12


@dataclass
class NamedDesign:
    name: str
    design: DesignMatrix


def semicircle_names(K):
    try:
        return SEMICIRCLE_ORDER[K]
    except KeyError:
        raise ConfigurationError(f"K must be one of {sorted(SEMICIRCLE_ORDER)}, got {K}") from None


def semicircle_masks(leds, K):
    """Forbidden-LED masks (S x K, True = off) for the K semicircle assignment.

    A semicircle is closed: LEDs on its dividing diameter are allowed.
    """
    pos = np.asarray(leds.as_array() if hasattr(leds, "as_array") else leds, dtype=float).reshape(-1, 2)
    masks = np.zeros((len(pos), K), bool)
    for k, name in enumerate(semicircle_names(K)):
        normal = np.array(SEMICIRCLES[name])
        masks[:, k] = pos @ normal < -_ON_AXIS_TOL
    return masks


def uniform_design(allowed, masks, what):
    C = allowed.astype(float)
    for k in range(C.shape[1]):
        if not C[:, k].any():
            raise ConfigurationError(f"{what}: measurement {k} has no LED to turn on")
    return DesignMatrix(C / C.sum(axis=0), masks)


def design_qdpc(leds, K=4):
    """Every LED of the k-th half-circle on at equal brightness."""
    masks = semicircle_masks(leds, K)
    return NamedDesign("qdpc", uniform_design(~masks, masks, "qDPC"))


def design_annular(leds, K, na_objective, ring_fraction=0.8):
    """Half-circles restricted to LEDs with illumination NA >= ring_fraction * na_objective.

    ``ring_fraction = 0`` reproduces :func:`design_qdpc`.
    """
    if not 0 <= ring_fraction < 1:
        raise ConfigurationError("ring_fraction must lie in [0, 1)")
    masks = semicircle_masks(leds, K)
    na = leds.illumination_na()
    ring = na >= ring_fraction * na_objective
    if not ring.any():
        raise ConfigurationError("annular design: no LED inside the ring")
    masks = masks | ~ring[:, None]
    return NamedDesign("annular-approx", uniform_design(~masks, masks, "annular design"))


def design_random(leds, K, seed=0):
    """Uniform [0, 1) weights inside each semicircle, projected onto the constraints."""
    masks = semicircle_masks(leds, K)
    rng = np.random.default_rng(seed)
    C = rng.random(masks.shape)
    return NamedDesign("random", DesignMatrix(project_constraints(C, masks), masks))


def initial_design(leds, K, perturb=0.0, seed=0):
    """Uniform weights over each allowed semicircle, optionally perturbed, then projected."""
    masks = semicircle_masks(leds, K)
    C = (~masks).astype(float)
    if perturb:
        C = C * (1.0 + perturb * np.random.default_rng(seed).random(C.shape))
    return DesignMatrix(project_constraints(C, masks), masks)


def load_external_design(path, n_leds=None, name=None):
    """Read and validate a design JSON; violations raise rather than being repaired."""
    design = DesignMatrix.from_dict(read_json(path))
    if n_leds is not None and design.S != n_leds:
        raise SchemaError(f"design has S={design.S} LEDs, expected {n_leds}")
    bad = design.violations()
    if bad:
        raise ConstraintViolationError(f"{path}: " + "; ".join(bad))
    return NamedDesign(name or str(path), design)
