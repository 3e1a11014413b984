"""Principal component feature extraction.

The basis is the top-m eigenvectors of the training covariance. When the
input dimension exceeds the sample count (flattened images) the N x N Gram
matrix is decomposed instead and its eigenvectors are mapped back.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .numerics import covariance, eig_sym, sign_normalize_columns

CLAMP_RATIO = 1e-12
# Largest matrix the automatic choice hands to the Jacobi solver.
JACOBI_MAX_DIM = 64


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return self.basis.shape[0]

    @property
    def m(self):
        return self.basis.shape[1]


def _features_of(data):
    x = data.features if hasattr(data, "features") else data
    return np.asarray(x, dtype=np.float64)


def _eig_method(dim, eig_method):
    if eig_method == "auto":
        return "jacobi" if dim <= JACOBI_MAX_DIM else "lapack"
    return eig_method


def pca_fit(train, m, eig_method="auto"):
    """Fit an m-component PCA model on an N x n feature matrix or Dataset.

    ``eig_method`` is ``"jacobi"``, ``"lapack"``, or ``"auto"`` (Jacobi up
    to JACOBI_MAX_DIM, LAPACK above).
    """
    x = _features_of(train)
    if x.ndim != 2:
        raise InvalidInputError("training data must be an N x n matrix")
    n_samples, n = x.shape
    if n_samples < 2:
        raise InvalidInputError(f"PCA needs at least 2 samples, got {n_samples}")
    if not (1 <= m <= min(n, n_samples - 1)):
        raise InvalidInputError(
            f"components m={m} must be in [1, min(n={n}, N-1={n_samples - 1})]"
        )

    meta = {"method": "covariance"}
    if n > n_samples:
        mean, values, basis = _snapshot(x, m, _eig_method(n_samples, eig_method))
        meta["method"] = "snapshot"
    else:
        mean, cov = covariance(x.T)
        eig = eig_sym(cov, method=_eig_method(n, eig_method))
        values = eig.eigenvalues[:m]
        basis = eig.eigenvectors[:, :m]

    values = values.copy()
    top = values[0] if values.size else 0.0
    clamped = (values < CLAMP_RATIO * top) | (values < 0)
    values[clamped] = 0.0
    if np.any(clamped):
        meta["clamped_components"] = [int(k) for k in np.flatnonzero(clamped)]
    if top <= 0.0:
        meta["warning"] = "degenerate training data: all samples identical"
    return PcaModel(mean, basis, values, meta)


def _snapshot(x, m, method):
    n_samples, n = x.shape
    mean = x.mean(axis=0)
    xc = x - mean
    gram = xc @ xc.T / (n_samples - 1)
    gram = 0.5 * (gram + gram.T)
    eig = eig_sym(gram, method=method)
    values = eig.eigenvalues[:m]
    u = eig.eigenvectors[:, :m]
    basis = np.zeros((n, m))
    top = values[0]
    for k in range(m):
        if top > 0 and values[k] > CLAMP_RATIO * top:
            basis[:, k] = xc.T @ u[:, k] / np.sqrt((n_samples - 1) * values[k])
    # Null directions have no data support; fill them with a deterministic
    # orthonormal complement of the supported columns.
    missing = np.flatnonzero(~np.any(basis, axis=0))
    if missing.size:
        basis = _complete_basis(basis, missing)
    return mean, values, sign_normalize_columns(basis)


def _complete_basis(basis, missing):
    basis = basis.copy()
    n = basis.shape[0]
    axis = 0
    for k in missing:
        while axis < n:
            cand = np.zeros(n)
            cand[axis] = 1.0
            axis += 1
            cand -= basis @ (basis.T @ cand)
            norm = np.linalg.norm(cand)
            if norm > 1e-8:
                basis[:, k] = cand / norm
                break
    return basis


def _as_rows(model, samples):
    x = _features_of(samples)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.n:
        raise InvalidInputError(f"expected dimension {model.n}, got {x.shape[1]}")
    return x, single


def pca_transform(model, samples):
    """y = W^T (x - mean) for a vector, an N x n matrix, or a Dataset."""
    x, single = _as_rows(model, samples)
    y = (x - model.mean) @ model.basis
    return y[0] if single else y


def pca_reconstruct(model, y):
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != model.m:
        raise InvalidInputError(f"expected code dimension {model.m}, got {y.shape[1]}")
    xhat = y @ model.basis.T + model.mean
    return xhat[0] if single else xhat


def reconstruction_error(model, samples):
    """Residual variance: sum of squared reconstruction errors / (N - 1).

    Uses the covariance normalization so that on the training set it equals
    the sum of discarded eigenvalues.
    """
    x, _ = _as_rows(model, samples)
    resid = x - pca_reconstruct(model, pca_transform(model, x))
    return float(np.sum(resid * resid) / (x.shape[0] - 1))
