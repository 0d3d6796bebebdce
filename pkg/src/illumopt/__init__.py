"""Learned coded-illumination design for quantitative phase microscopy.

Simulate LED-array phase measurements, reconstruct phase with an unrolled
accelerated proximal gradient solver, and learn the LED weights of each
measurement by differentiating reconstruction error through the solver.
"""

from .baselines import NamedDesign, design_annular, design_qdpc, design_random, load_external_design
from .dataset import Dataset, DatasetConfig, build_dataset, load_dataset, psnr_db, save_dataset
from .estimators import BaselineIlluminationDesign, LearnedIlluminationDesign
from .exceptions import IllumoptError
from .learn import DesignMatrix, LearnConfig, TrainingPair, pbld_train, project_constraints
from .optics import LedArray, OpticalSystem, build_ideal_pupil, wotf_bank, wotf_single
from .recon import ReconConfig, apgd_recover, prox_tv

__version__ = "0.1.0"

__all__ = [
    "BaselineIlluminationDesign",
    "Dataset",
    "DatasetConfig",
    "DesignMatrix",
    "IllumoptError",
    "LearnConfig",
    "LearnedIlluminationDesign",
    "LedArray",
    "NamedDesign",
    "OpticalSystem",
    "ReconConfig",
    "TrainingPair",
    "apgd_recover",
    "build_dataset",
    "build_ideal_pupil",
    "design_annular",
    "design_qdpc",
    "design_random",
    "load_dataset",
    "load_external_design",
    "pbld_train",
    "project_constraints",
    "prox_tv",
    "psnr_db",
    "save_dataset",
    "wotf_bank",
    "wotf_single",
]
