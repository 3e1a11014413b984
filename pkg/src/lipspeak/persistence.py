"""JSON (de)serialization of fitted models.

Every object carries a ``kind`` discriminator. Floats go through ``repr``
(shortest round-trip form), so saved parameters reload bit-exact.
"""

import json

import numpy as np

from .bp import BpArchitecture, BpNetwork
from .errors import InvalidInputError
from .ica import IcaModel, WhiteningTransform
from .lvq import LvqCodebook
from .pca import PcaModel
from .rbf import RbfModel

FORMAT = "lipspeak-model/1"


def _arr(a):
    return np.asarray(a, dtype=np.float64).tolist()


def kind_of(model):
    for cls, kind in ((PcaModel, "pca"), (IcaModel, "ica"), (BpNetwork, "bp"),
                      (RbfModel, "rbf"), (LvqCodebook, "lvq")):
        if isinstance(model, cls):
            return kind
    raise InvalidInputError(f"unknown model type {type(model).__name__}")


def model_to_dict(model):
    if isinstance(model, PcaModel):
        return {"kind": "pca", "n": model.n, "m": model.m, "mean": _arr(model.mean),
                "basis": _arr(model.basis), "eigenvalues": _arr(model.eigenvalues)}
    if isinstance(model, IcaModel):
        return {"kind": "ica", "n": model.n, "m": model.m,
                "mean": _arr(model.whitening.mean),
                "whitening": _arr(model.whitening.matrix),
                "rotation": _arr(model.rotation),
                "convergence_iters": list(model.convergence_iters)}
    if isinstance(model, BpNetwork):
        arch = model.architecture
        return {"kind": "bp", "layer_sizes": list(arch.layer_sizes),
                "transfers": list(arch.transfers),
                "weights": [_arr(w) for w in model.weights],
                "biases": [_arr(b) for b in model.biases]}
    if isinstance(model, RbfModel):
        return {"kind": "rbf", "m": int(model.centers.shape[1]),
                "n_centers": int(model.centers.shape[0]),
                "n_outputs": int(model.weights.shape[1]),
                "centers": _arr(model.centers), "spread": float(model.spread),
                "weights": _arr(model.weights)}
    if isinstance(model, LvqCodebook):
        return {"kind": "lvq", "m": int(model.prototypes.shape[1]),
                "n_prototypes": int(model.prototypes.shape[0]),
                "prototypes": _arr(model.prototypes),
                "prototype_class": [int(c) for c in model.prototype_class]}
    raise InvalidInputError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d):
    kind = d.get("kind")
    a = np.asarray
    if kind == "pca":
        return PcaModel(a(d["mean"], float), a(d["basis"], float).reshape(d["n"], d["m"]),
                        a(d["eigenvalues"], float))
    if kind == "ica":
        white = WhiteningTransform(a(d["mean"], float),
                                   a(d["whitening"], float).reshape(d["m"], d["n"]))
        return IcaModel(white, a(d["rotation"], float).reshape(d["m"], d["m"]),
                        tuple(d.get("convergence_iters", ())))
    if kind == "bp":
        arch = BpArchitecture(tuple(d["layer_sizes"]), tuple(d["transfers"]))
        weights = tuple(a(w, float).reshape(o, i) for w, i, o in
                        zip(d["weights"], arch.layer_sizes[:-1], arch.layer_sizes[1:]))
        return BpNetwork(weights, tuple(a(b, float) for b in d["biases"]), arch)
    if kind == "rbf":
        return RbfModel(a(d["centers"], float).reshape(d["n_centers"], d["m"]), float(d["spread"]),
                        a(d["weights"], float).reshape(d["n_centers"], d["n_outputs"]))
    if kind == "lvq":
        return LvqCodebook(a(d["prototypes"], float).reshape(d["n_prototypes"], d["m"]),
                           a(d["prototype_class"], int))
    raise InvalidInputError(f"unknown model kind {kind!r}")


def dumps(obj):
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False)
