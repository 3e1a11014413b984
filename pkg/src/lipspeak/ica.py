"""Independent component features: PCA whitening to m dimensions followed by
a deflationary FastICA rotation with the tanh contrast.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, NumericError
from .pca import CLAMP_RATIO, pca_fit, _features_of

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 200
DEFAULT_RESTARTS = 3


@dataclass(frozen=True)
class WhiteningTransform:
    mean: np.ndarray
    matrix: np.ndarray  # m x n, diag(lambda^-1/2) W^T

    def apply(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.matrix.shape[1]:
            raise InvalidInputError(f"expected dimension {self.matrix.shape[1]}, got {x.shape[1]}")
        return (x - self.mean) @ self.matrix.T


@dataclass(frozen=True)
class IcaModel:
    whitening: WhiteningTransform
    rotation: np.ndarray
    convergence_iters: tuple = ()
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return self.whitening.matrix.shape[1]

    @property
    def m(self):
        return self.rotation.shape[0]


def whiten(train, m):
    x = _features_of(train)
    n_samples, n = x.shape
    if not (1 <= m <= min(n, n_samples - 1)):
        raise InvalidInputError(
            f"components m={m} must be in [1, min(n={n}, N-1={n_samples - 1})]"
        )
    model = pca_fit(x, m)
    values = model.eigenvalues
    top = values[0]
    usable = int(np.sum(values > CLAMP_RATIO * top)) if top > 0 else 0
    if usable < m:
        raise InvalidInputError(
            f"data rank too low to whiten to m={m}: usable rank is {usable}"
        )
    matrix = model.basis.T / np.sqrt(values)[:, None]
    return WhiteningTransform(model.mean, matrix)


def fast_ica(z, seed=0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, restarts=DEFAULT_RESTARTS):
    """Deflationary FastICA on whitened data ``z`` (m x N, one sample per column).

    A component that fails to converge is retried from a fresh random start
    up to ``restarts`` times. Returns ``(rotation, iterations)``; rows of
    ``rotation`` are orthonormal and each is sign-flipped so its
    largest-magnitude entry is positive.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise InvalidInputError("whitened data must be an m x N matrix")
    if tol <= 0:
        raise InvalidInputError(f"tol must be > 0, got {tol}")
    m, n_samples = z.shape
    cov = np.cov(z)
    if np.max(np.abs(np.atleast_2d(cov) - np.eye(m))) > 1e-3:
        raise InvalidInputError("input to fast_ica is not whitened (cov != I within 1e-3)")

    rng = np.random.default_rng(seed)
    rotation = np.zeros((m, m))
    iters = []
    for k in range(m):
        total = 0
        for _ in range(1 + restarts):
            w, used, delta = _one_unit(z, rng, rotation[:k], tol, max_iter)
            total += used
            if w is not None:
                break
        else:
            raise NumericError(
                f"FastICA component {k} did not converge in {max_iter} iterations "
                f"({restarts} restarts, final delta {delta:.3e})"
            )
        rotation[k] = w
        iters.append(total)

    idx = np.argmax(np.abs(rotation), axis=1)
    signs = np.where(rotation[np.arange(m), idx] < 0, -1.0, 1.0)
    return rotation * signs[:, None], tuple(iters)


def _one_unit(z, rng, accepted, tol, max_iter):
    """One deflation component from a random start on the unit sphere.

    The first quarter of the budget runs the plain fixed-point update. If
    that has not settled (it can cycle on clustered data) the step switches
    to the damped Newton form w - mu (E[z g] - beta w) / (E[g'] - beta),
    beta = E[w.z g], with mu = 1/2 and then 1/4.
    """
    w = _deflate(rng.standard_normal(z.shape[0]), accepted)
    delta = np.inf
    for it in range(1, max_iter + 1):
        u = w @ z
        g = np.tanh(u)
        g_prime = 1.0 - g * g
        if it <= max_iter // 4:
            w_new = (z * g).mean(axis=1) - g_prime.mean() * w
        else:
            mu = 0.5 if it <= (5 * max_iter) // 8 else 0.25
            beta = float(u @ g) / u.size
            w_new = w - mu * ((z * g).mean(axis=1) - beta * w) / (g_prime.mean() - beta)
        w_new = _deflate(w_new, accepted)
        delta = 1.0 - abs(float(w_new @ w))
        w = w_new
        if delta < tol:
            return w, it, delta
    return None, max_iter, delta


def _deflate(w, accepted):
    if len(accepted):
        w = w - accepted.T @ (accepted @ w)
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise NumericError("FastICA update collapsed to the zero vector")
    return w / norm


def ica_fit(train, m, seed=0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    white = whiten(train, m)
    z = white.apply(_features_of(train)).T
    rotation, iters = fast_ica(z, seed=seed, tol=tol, max_iter=max_iter)
    return IcaModel(white, rotation, iters, {"seed": seed})


def ica_transform(model, samples):
    """y = R V (x - mean) for a vector, an N x n matrix, or a Dataset."""
    x = _features_of(samples)
    single = x.ndim == 1
    y = model.whitening.apply(x) @ model.rotation.T
    return y[0] if single else y
