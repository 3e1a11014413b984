"""Speaker identification from lip features.

Feature extractors (PCA, FastICA) feed one of three classifiers
(backpropagation MLP, RBF network, LVQ1). ``experiment`` wires them into
train/evaluate/compare runs; ``cli`` exposes them on the command line.
"""

from .errors import InvalidInputError, NumericError, ParseError, StageError
from .numerics import eig_sym, covariance, solve_least_squares
from .corpus import Dataset, load_csv, generate_synthetic, split_stratified
from .pca import pca_fit, pca_transform
from .ica import ica_fit, ica_transform, fast_ica, whiten
from .bp import bp_init, bp_forward, bp_backward, bp_train, bp_predict
from .rbf import rbf_train, rbf_predict
from .lvq import lvq_train, lvq_predict, lvq1_step
from .experiment import ExperimentConfig, SyntheticConfig, run_experiment, compare_all

__all__ = [
    "InvalidInputError", "NumericError", "ParseError", "StageError",
    "eig_sym", "covariance", "solve_least_squares",
    "Dataset", "load_csv", "generate_synthetic", "split_stratified",
    "pca_fit", "pca_transform", "ica_fit", "ica_transform", "fast_ica", "whiten",
    "bp_init", "bp_forward", "bp_backward", "bp_train", "bp_predict",
    "rbf_train", "rbf_predict", "lvq_train", "lvq_predict", "lvq1_step",
    "ExperimentConfig", "SyntheticConfig", "run_experiment", "compare_all",
]
__version__ = "0.1.0"
