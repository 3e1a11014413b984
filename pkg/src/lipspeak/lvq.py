"""LVQ1 prototype classifier.

The winning (nearest) prototype moves toward a same-class input and away
from a different-class input; every other prototype stays put.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

JITTER = 1e-3


@dataclass(frozen=True)
class LvqCodebook:
    prototypes: np.ndarray
    prototype_class: np.ndarray

    def __post_init__(self):
        protos = np.array(self.prototypes, dtype=np.float64)
        classes = np.array(self.prototype_class, dtype=np.int64)
        if protos.ndim != 2 or classes.shape != (protos.shape[0],):
            raise InvalidInputError("one class per prototype row required")
        if not np.all(np.isfinite(protos)):
            raise InvalidInputError("prototypes must be finite")
        protos.setflags(write=False)
        classes.setflags(write=False)
        object.__setattr__(self, "prototypes", protos)
        object.__setattr__(self, "prototype_class", classes)


@dataclass(frozen=True)
class LvqTrainParams:
    n_prototypes: int = 40
    alpha0: float = 0.001
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha0 < 1.0):
            raise InvalidInputError(f"alpha0 must be in (0, 1), got {self.alpha0}")
        if self.epochs < 0:
            raise InvalidInputError("epochs must be >= 0")


def allocate_prototypes(class_counts, n_prototypes):
    """Prototype count per class, proportional to class frequency.

    Each class gets ``floor(l * share)`` (at least one); leftover prototypes
    go one at a time to the largest classes, lower index first on ties.
    """
    counts = np.asarray(class_counts, dtype=np.int64)
    n_cls = counts.size
    if n_prototypes < n_cls:
        raise InvalidInputError(f"need at least one prototype per class ({n_prototypes} < {n_cls})")
    if np.any(counts < 1):
        raise InvalidInputError("every class needs at least one training sample")
    alloc = np.maximum(1, (n_prototypes * counts) // counts.sum())
    order = sorted(range(n_cls), key=lambda k: (-counts[k], k))
    i = 0
    while alloc.sum() < n_prototypes:
        alloc[order[i % n_cls]] += 1
        i += 1
    while alloc.sum() > n_prototypes:
        for k in order:
            if alloc[k] > 1 and alloc.sum() > n_prototypes:
                alloc[k] -= 1
    return alloc


def lvq_init(train, params=None):
    """Prototypes at their class means plus small seeded jitter.

    The jitter is ``1e-3 x`` the mean per-feature standard deviation of
    the training set, so coincident prototypes of one class separate.
    """
    params = params or LvqTrainParams()
    x, y = train.features, train.labels
    alloc = allocate_prototypes(np.bincount(y, minlength=train.num_classes), params.n_prototypes)
    rng = np.random.default_rng(params.seed)
    scale = float(np.mean(x.std(axis=0))) if len(x) > 1 else 1.0
    scale = scale if scale > 0 else 1.0
    protos, classes = [], []
    for k, count in enumerate(alloc):
        mean = x[y == k].mean(axis=0)
        for _ in range(count):
            protos.append(mean + JITTER * scale * rng.standard_normal(x.shape[1]))
            classes.append(k)
    return LvqCodebook(np.array(protos), np.array(classes))


def _winner(prototypes, x):
    d = np.sum((prototypes - x) ** 2, axis=1)
    return int(np.argmin(d))


def lvq1_step(codebook, x, label, alpha):
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError(f"alpha must be in (0, 1), got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (codebook.prototypes.shape[1],):
        raise InvalidInputError(f"expected dimension {codebook.prototypes.shape[1]}, got {x.shape}")
    protos = codebook.prototypes.copy()
    _update(protos, codebook.prototype_class, x, label, alpha)
    return LvqCodebook(protos, codebook.prototype_class)


def _update(protos, classes, x, label, alpha):
    c = _winner(protos, x)
    if classes[c] == label:
        protos[c] += alpha * (x - protos[c])
    else:
        protos[c] -= alpha * (x - protos[c])
    return c


def learning_rate(alpha0, step, total):
    """alpha0 * (1 - t/T): decays linearly, never reaching zero for t < T."""
    return alpha0 * (1.0 - step / total)


def lvq_train(train, params=None, history=None):
    """Seeded-shuffle epochs of LVQ1 updates from ``lvq_init``.

    When ``history`` is a list, the training-set error rate after each epoch
    is appended.
    """
    params = params or LvqTrainParams()
    book = lvq_init(train, params)
    if params.epochs == 0:
        return book
    x, y = train.features, train.labels
    rng = np.random.default_rng([params.seed, 1])
    protos = book.prototypes.copy()
    classes = book.prototype_class
    total = params.epochs * len(x)
    step = 0
    for _ in range(params.epochs):
        for i in rng.permutation(len(x)):
            _update(protos, classes, x[i], y[i], learning_rate(params.alpha0, step, total))
            step += 1
        if history is not None:
            history.append(float(np.mean(_predict_rows(protos, classes, x) != y)))
    return LvqCodebook(protos, classes)


def _predict_rows(protos, classes, x):
    d = np.sum((x[:, None, :] - protos[None, :, :]) ** 2, axis=2)
    return classes[np.argmin(d, axis=1)]


def lvq_predict(codebook, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != codebook.prototypes.shape[1]:
        raise InvalidInputError(f"expected dimension {codebook.prototypes.shape[1]}, got {x.shape[-1]}")
    if x.ndim == 1:
        return int(codebook.prototype_class[_winner(codebook.prototypes, x)])
    return _predict_rows(codebook.prototypes, codebook.prototype_class, x)
