"""Gaussian radial-basis-function network.

Hidden units are Gaussians exp(-||x - c||^2 / (2 sigma^2)) centered by
k-means on the training features; the linear output layer (no bias) is the
ridge least-squares fit to one-hot targets.
"""

from dataclasses import dataclass, field

import numpy as np

from .bp import argmax_lowest
from .corpus import one_hot_matrix
from .errors import InvalidInputError
from .numerics import solve_least_squares


@dataclass(frozen=True)
class RbfModel:
    centers: np.ndarray
    spread: float
    weights: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class RbfTrainParams:
    n_centers: int = 125
    spread: float | None = None  # None: median pairwise training distance
    ridge: float = 1e-8
    kmeans_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_centers < 1:
            raise InvalidInputError("n_centers must be >= 1")
        if self.spread is not None and not self.spread > 0:
            raise InvalidInputError("spread must be > 0")
        if self.ridge < 0:
            raise InvalidInputError("ridge must be >= 0")


def _sq_dists(x, c):
    if x.shape[1] <= 64:
        diff = x[:, None, :] - c[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    # Expanded form for high-dimensional inputs; clip rounding below zero.
    d = (x * x).sum(axis=1)[:, None] - 2.0 * x @ c.T + (c * c).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_objective(x, centers):
    return float(_sq_dists(x, centers).min(axis=1).sum())


def rbf_select_centers(features, n_centers, seed=0, kmeans_iters=100, history=None):
    """k-means++ seeding followed by Lloyd iterations.

    Stops at an assignment fixpoint or after ``kmeans_iters`` updates. A
    cluster left empty is re-seeded with the point farthest from its
    assigned center. If ``history`` is a list, the within-cluster sum of
    squares after seeding and after every update is appended to it.
    """
    x = np.asarray(features, dtype=np.float64)
    n_samples = x.shape[0]
    if n_samples < 1:
        raise InvalidInputError("need at least one point")
    if not (1 <= n_centers <= n_samples):
        raise InvalidInputError(f"n_centers={n_centers} must be in [1, N={n_samples}]")
    rng = np.random.default_rng(seed)

    centers = np.empty((n_centers, x.shape[1]))
    centers[0] = x[rng.integers(n_samples)]
    closest = _sq_dists(x, centers[:1])[:, 0]
    for k in range(1, n_centers):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n_samples, p=closest / total))
        else:
            idx = int(rng.integers(n_samples))
        centers[k] = x[idx]
        closest = np.minimum(closest, _sq_dists(x, centers[k:k + 1])[:, 0])

    assign = _sq_dists(x, centers).argmin(axis=1)
    if history is not None:
        history.append(kmeans_objective(x, centers))
    for _ in range(kmeans_iters):
        for k in range(n_centers):
            members = assign == k
            if np.any(members):
                centers[k] = x[members].mean(axis=0)
        d = _sq_dists(x, centers)
        point_d = d[np.arange(n_samples), assign]
        for k in range(n_centers):
            if not np.any(assign == k):
                far = int(np.argmax(point_d))
                centers[k] = x[far]
                assign[far] = k
                point_d[far] = 0.0
        new_assign = _sq_dists(x, centers).argmin(axis=1)
        if history is not None:
            history.append(kmeans_objective(x, centers))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centers


def rbf_design(centers, spread, features):
    """Phi[k, i] = exp(-||x_k - c_i||^2 / (2 spread^2))."""
    if not spread > 0:
        raise InvalidInputError("spread must be > 0")
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    c = np.asarray(centers, dtype=np.float64)
    if x.shape[1] != c.shape[1]:
        raise InvalidInputError(f"feature dimension {x.shape[1]} != center dimension {c.shape[1]}")
    return np.exp(-_sq_dists(x, c) / (2.0 * spread * spread))


def median_pairwise_distance(features):
    x = np.asarray(features, dtype=np.float64)
    d = np.sqrt(_sq_dists(x, x))
    upper = d[np.triu_indices(x.shape[0], k=1)]
    if upper.size == 0 or not np.any(upper > 0):
        return 1.0
    return float(np.median(upper))


def rbf_train(train, params=None, targets=None, centers=None):
    """Fit centers, spread, and output weights.

    ``train`` is a Dataset or N x m matrix (then ``targets`` is required).
    Passing ``centers`` skips k-means.
    """
    params = params or RbfTrainParams()
    if hasattr(train, "features"):
        x = train.features
        if targets is None:
            targets = one_hot_matrix(train.labels, train.num_classes)
    else:
        x = np.asarray(train, dtype=np.float64)
    if targets is None:
        raise InvalidInputError("targets are required for raw feature matrices")
    t = np.asarray(targets, dtype=np.float64)
    if t.shape[0] != x.shape[0]:
        raise InvalidInputError("one target row per training sample required")

    meta = {}
    if centers is None:
        history = []
        centers = rbf_select_centers(x, params.n_centers, params.seed, params.kmeans_iters, history)
        meta["kmeans_objective"] = history
    centers = np.asarray(centers, dtype=np.float64)
    spread = params.spread
    if spread is None:
        spread = median_pairwise_distance(x)
        meta["spread_rule"] = "median pairwise distance"
    phi = rbf_design(centers, spread, x)
    weights = solve_least_squares(phi, t, params.ridge)
    resid = phi @ weights - t
    meta["train_mse"] = float(np.mean(resid * resid))
    return RbfModel(centers, float(spread), weights, meta)


def rbf_outputs(model, x):
    return rbf_design(model.centers, model.spread, x) @ model.weights


def rbf_predict(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.centers.shape[1]:
        raise InvalidInputError(f"expected dimension {model.centers.shape[1]}, got {x.shape[-1]}")
    out = rbf_outputs(model, x)
    pred = argmax_lowest(out)
    return int(pred[0]) if x.ndim == 1 else pred
