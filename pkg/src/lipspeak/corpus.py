"""Labeled lip-feature datasets: CSV I/O, synthetic corpora, stratified splits."""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ParseError

GEOMETRY_FIELDS = ("H1", "W1", "H2", "W2", "H3", "H4")

# Pixel ranges for the default class-mean generator, in GEOMETRY_FIELDS order.
GEOMETRY_RANGES = {
    "H1": (15.0, 30.0),
    "W1": (45.0, 60.0),
    "H2": (8.0, 20.0),
    "W2": (35.0, 50.0),
    "H3": (5.0, 15.0),
    "H4": (5.0, 15.0),
}

RAW_SHAPE = (75, 100)


@dataclass(frozen=True)
class LipGeometry:
    """Six mouth measurements in pixels (outer/inner corner heights and widths, lip heights)."""

    H1: float
    W1: float
    H2: float
    W2: float
    H3: float
    H4: float

    def __post_init__(self):
        values = self.as_array()
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidInputError(f"lip measurements must be finite and >= 0: {values}")
        if self.W1 < self.W2:
            raise InvalidInputError(f"outer width W1={self.W1} < inner width W2={self.W2}")
        if self.H1 < self.H2:
            raise InvalidInputError(f"outer height H1={self.H1} < inner height H2={self.H2}")

    def as_array(self):
        return np.array([getattr(self, f) for f in GEOMETRY_FIELDS], dtype=np.float64)


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int
    subject: str | None = None


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled feature matrix.

    ``features`` is N x n (one sample per row); ``labels`` holds dense class
    indices in ``[0, num_classes)``. ``label_names[k]`` is the original text
    label of class ``k``.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    label_names: tuple = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise InvalidInputError(f"features must be a non-empty N x n matrix, got {x.shape}")
        if y.shape != (x.shape[0],):
            raise InvalidInputError("labels must have one entry per sample")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("features contain non-finite values")
        if self.num_classes < 1 or y.min() < 0 or y.max() >= self.num_classes:
            raise InvalidInputError(f"labels must lie in [0, {self.num_classes})")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        names = tuple(self.label_names) or tuple(str(k) for k in range(self.num_classes))
        if len(names) != self.num_classes:
            raise InvalidInputError("label_names must name every class")
        object.__setattr__(self, "label_names", names)

    def __len__(self):
        return self.features.shape[0]

    @property
    def feature_dim(self):
        return self.features.shape[1]

    @property
    def samples(self):
        return [Sample(self.features[i], int(self.labels[i])) for i in range(len(self))]

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, index):
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.features[index], self.labels[index], self.num_classes,
                       self.label_names, dict(self.metadata))

    def with_features(self, features):
        """Same labels, new feature matrix (e.g. after projection)."""
        return Dataset(features, self.labels, self.num_classes, self.label_names,
                       dict(self.metadata))


@dataclass(frozen=True)
class SyntheticSpec:
    class_means: np.ndarray
    noise_sigma: float = 1.0
    per_class_count: int = 48
    seed: int = 0

    def __post_init__(self):
        means = np.array(self.class_means, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] < 1 or means.shape[1] < 1:
            raise InvalidInputError("class_means must be a C x n matrix")
        if not np.all(np.isfinite(means)):
            raise InvalidInputError("class_means must be finite")
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise InvalidInputError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.per_class_count < 1:
            raise InvalidInputError("per_class_count must be >= 1")
        if self.seed < 0:
            raise InvalidInputError("seed must be unsigned")
        object.__setattr__(self, "class_means", means)


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path):
    """Read ``label,f1,...,fn`` rows into a Dataset.

    A first row whose second field is non-numeric is taken as a header.
    Text labels are mapped to dense indices in first-appearance order.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row and any(c.strip() for c in row)]
    if not rows:
        raise InvalidInputError(f"{path}: empty file")
    header = None
    if len(rows[0][1]) >= 2 and not _is_number(rows[0][1][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")

    width = len(rows[0][1])
    if width < 2:
        raise ParseError("row needs a label and at least one feature", rows[0][0], path)
    mapping = {}
    labels, feats = [], []
    for line, row in rows:
        if len(row) != width:
            raise ParseError(f"expected {width} fields, got {len(row)}", line, path)
        name = row[0].strip()
        try:
            values = [float(c) for c in row[1:]]
        except ValueError:
            raise ParseError("non-numeric feature value", line, path) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError("non-finite feature value", line, path)
        labels.append(mapping.setdefault(name, len(mapping)))
        feats.append(values)
    meta = {"source": str(path)}
    if header is not None:
        meta["header"] = header
    return Dataset(np.array(feats), np.array(labels), len(mapping), tuple(mapping), meta)


def save_csv(ds, path, header=None):
    """Write a Dataset with ``repr`` floats so reloading is bit-exact."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        for row, label in zip(ds.features, ds.labels):
            w.writerow([ds.label_names[label]] + [repr(float(v)) for v in row])


def default_class_means(num_classes=7, min_separation=8.0, seed=20240607):
    """Pixel-scale lip geometries for ``num_classes`` synthetic speakers.

    Rejection-sampled inside GEOMETRY_RANGES so every pair of means is at
    least ``min_separation`` pixels apart and W1 >= W2, H1 >= H2 hold.
    These are generator defaults, not measured speaker data.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([GEOMETRY_RANGES[f][0] for f in GEOMETRY_FIELDS])
    hi = np.array([GEOMETRY_RANGES[f][1] for f in GEOMETRY_FIELDS])
    means = []
    for _ in range(100000):
        cand = rng.uniform(lo, hi)
        h1, w1, h2, w2 = cand[:4]
        if w1 < w2 or h1 < h2:
            continue
        if all(np.linalg.norm(cand - m) >= min_separation for m in means):
            means.append(np.round(cand, 2))
            if len(means) == num_classes:
                return np.array(means)
    raise InvalidInputError(f"cannot place {num_classes} means {min_separation} px apart")


def render_lip_image(geometry, shape=RAW_SHAPE):
    """Flattened grey-level mouth template: lip band between two ellipses.

    The outer ellipse spans W1 by (H3 + H1 + H4), the dark opening spans
    W2 by H2. Used only as a stand-in for flattened lip images.
    """
    g = geometry if isinstance(geometry, LipGeometry) else LipGeometry(*np.asarray(geometry, float))
    rows, cols = shape
    yy, xx = np.mgrid[0:rows, 0:cols].astype(np.float64)
    cy, cx = (rows - 1) / 2.0, (cols - 1) / 2.0
    outer_h = max(g.H1 + g.H3 + g.H4, 1e-6) / 2.0
    inner_h = max(g.H2, 1e-6) / 2.0
    # Shift the opening so the upper and lower lip bands keep their heights.
    inner_cy = cy + (g.H3 - g.H4) / 2.0
    outer = ((xx - cx) / max(g.W1 / 2.0, 1e-6)) ** 2 + ((yy - cy) / outer_h) ** 2 <= 1.0
    inner = ((xx - cx) / max(g.W2 / 2.0, 1e-6)) ** 2 + ((yy - inner_cy) / inner_h) ** 2 <= 1.0
    img = np.full(shape, 0.8)
    img[outer] = 0.3
    img[outer & inner] = 0.05
    return img.ravel()


def raw_class_templates(class_means, shape=RAW_SHAPE):
    return np.array([render_lip_image(m, shape) for m in np.asarray(class_means)])


def generate_synthetic(spec):
    """Class mean plus isotropic Gaussian noise, classes in blocks.

    Identical specs produce bit-identical datasets.
    """
    rng = np.random.default_rng(spec.seed)
    means = spec.class_means
    c, n = means.shape
    labels = np.repeat(np.arange(c), spec.per_class_count)
    noise = rng.standard_normal((labels.size, n)) * spec.noise_sigma
    x = means[labels] + noise
    return Dataset(x, labels, c, tuple(f"speaker{k + 1}" for k in range(c)),
                   {"source": "synthetic", "seed": spec.seed})


def split_stratified(ds, train_fraction=0.5, seed=0):
    """Per-class seeded shuffle; ``round(fraction * count)`` of each class to train.

    ``train_fraction == 1`` returns the full set as train and a copy of it
    as test (train = test evaluation).
    """
    if not (0.0 < train_fraction <= 1.0):
        raise InvalidInputError(f"train_fraction must be in (0, 1], got {train_fraction}")
    if train_fraction == 1.0:
        idx = np.arange(len(ds))
        return ds.subset(idx), ds.subset(idx.copy())
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for k in range(ds.num_classes):
        members = np.flatnonzero(ds.labels == k)
        if members.size < 2:
            raise InvalidInputError(
                f"class {ds.label_names[k]!r} has {members.size} sample(s); need >= 2 to split"
            )
        members = rng.permutation(members)
        n_train = int(math.floor(train_fraction * members.size + 0.5))
        n_train = min(max(n_train, 1), members.size - 1)
        train_idx.extend(members[:n_train])
        test_idx.extend(members[n_train:])
    return ds.subset(np.sort(train_idx)), ds.subset(np.sort(test_idx))


def one_hot(label, num_classes):
    if not (0 <= label < num_classes):
        raise InvalidInputError(f"label {label} out of range for {num_classes} classes")
    v = np.zeros(num_classes)
    v[label] = 1.0
    return v


def one_hot_matrix(labels, num_classes):
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise InvalidInputError(f"labels out of range for {num_classes} classes")
    return np.eye(num_classes)[labels]
