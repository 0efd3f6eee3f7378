"""Anisotropic randomized-smoothing certification.

Ellipsoid (Gaussian), generalized cross-polytope (uniform) and Gaussian-mixture
certificates, their geometry and volumes, and per-sample optimization of the
smoothing parameters by volume maximization.
"""

from .certify import Certificate, CertifyConfig, certify, certify_dataset
from .errors import (AncerError, ConfigError, DataError, DomainError, FormatError,
                     InputShapeError, NumericError, ParseError, SpecKindError, StageError)
from .experiment import ExperimentConfig, run_experiment
from .nn_core import Classifier, Dataset, load_model, save_model, train_classifier
from .optimize import OptimizerConfig, optimize_ancer, optimize_isotropic, soft_gap
from .regions import Region, is_superior, log_volume, proxy_radius
from .smoothing import SmoothingSpec

__version__ = "0.1.0"

__all__ = [
    "AncerError", "Certificate", "CertifyConfig", "Classifier", "ConfigError", "DataError",
    "Dataset", "DomainError", "ExperimentConfig", "FormatError", "InputShapeError",
    "NumericError", "OptimizerConfig", "ParseError", "Region", "SmoothingSpec", "SpecKindError",
    "StageError", "certify", "certify_dataset", "is_superior", "load_model", "log_volume",
    "optimize_ancer", "optimize_isotropic", "proxy_radius", "run_experiment", "save_model",
    "soft_gap", "train_classifier",
]
