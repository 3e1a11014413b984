"""Feed-forward multilayer network trained by error backpropagation.

Default shape is 6-20-25-7 with tansig hidden layers and a linear output.
Weight matrices are stored units x inputs, so a layer computes
``net_i = sum_j w_ij y_j + b_i`` over its anterior units j.
"""

from dataclasses import dataclass

import numpy as np

from .corpus import one_hot_matrix
from .errors import InvalidInputError, NumericError

TRANSFERS = ("tansig", "linear")


def tansig(u):
    """2 / (1 + exp(-2u)) - 1, written via tanh to stay finite for large |u|."""
    return np.tanh(u)


@dataclass(frozen=True)
class BpArchitecture:
    layer_sizes: tuple = (6, 20, 25, 7)
    transfers: tuple = ("tansig", "tansig", "linear")

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "transfers", tuple(self.transfers))
        if len(sizes) < 2 or min(sizes) < 1:
            raise InvalidInputError(f"need >= 2 layers of size >= 1, got {sizes}")
        if len(self.transfers) != len(sizes) - 1:
            raise InvalidInputError("one transfer function per non-input layer")
        bad = [t for t in self.transfers if t not in TRANSFERS]
        if bad:
            raise InvalidInputError(f"unknown transfer function(s) {bad}")


@dataclass(frozen=True)
class BpNetwork:
    weights: tuple
    biases: tuple
    architecture: BpArchitecture

    @property
    def n_inputs(self):
        return self.architecture.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.architecture.layer_sizes[-1]

    def parameters(self):
        return list(self.weights) + list(self.biases)


@dataclass(frozen=True)
class BpTrainParams:
    learning_rate: float = 0.01
    max_epochs: int = 3000
    goal: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInputError("learning_rate must be > 0")
        if self.max_epochs < 0:
            raise InvalidInputError("max_epochs must be >= 0")


def bp_init(arch=None, seed=0):
    """Weights ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases."""
    arch = arch or BpArchitecture()
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, units in zip(arch.layer_sizes[:-1], arch.layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(units, fan_in)))
        biases.append(np.zeros(units))
    return BpNetwork(tuple(weights), tuple(biases), arch)


def bp_forward(net, x):
    """Activations of every layer, input first. Accepts a vector or rows."""
    y = np.asarray(x, dtype=np.float64)
    if y.shape[-1] != net.n_inputs:
        raise InvalidInputError(f"expected {net.n_inputs} inputs, got {y.shape[-1]}")
    acts = [y]
    for w, b, f in zip(net.weights, net.biases, net.architecture.transfers):
        net_in = y @ w.T + b
        y = tansig(net_in) if f == "tansig" else net_in
        acts.append(y)
    return acts


def bp_loss(net, x, target):
    out = bp_forward(net, x)[-1]
    err = out - np.asarray(target, dtype=np.float64)
    return 0.5 * float(np.sum(err * err))


def bp_backward(net, activations, target):
    """Gradients of E = 1/2 ||output - target||^2 (summed over rows).

    Output deltas are dE/dnet; each hidden delta sums the posterior deltas
    through the connecting weights and multiplies by the transfer
    derivative (1 - y^2 for tansig). Returns ``(weight_grads, bias_grads)``.
    """
    out = activations[-1]
    target = np.asarray(target, dtype=np.float64)
    if target.shape != out.shape:
        raise InvalidInputError(f"target shape {target.shape} != output shape {out.shape}")
    if len(activations) != len(net.weights) + 1:
        raise InvalidInputError("activations do not match the network depth")
    batched = out.ndim == 2
    delta = out - target
    if net.architecture.transfers[-1] == "tansig":
        delta = delta * (1.0 - out * out)
    grad_w = [None] * len(net.weights)
    grad_b = [None] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        y_prev = activations[layer]
        if batched:
            grad_w[layer] = delta.T @ y_prev
            grad_b[layer] = delta.sum(axis=0)
        else:
            grad_w[layer] = np.outer(delta, y_prev)
            grad_b[layer] = delta.copy()
        if layer:
            back = delta @ net.weights[layer]
            if net.architecture.transfers[layer - 1] == "tansig":
                back = back * (1.0 - y_prev * y_prev)
            delta = back
    return grad_w, grad_b


def bp_train(net, train, params=None, targets=None):
    """Full-batch gradient descent on the summed squared error.

    ``train`` is a Dataset (targets from its labels, one-hot) or an N x n
    matrix with explicit ``targets``. Returns ``(trained_net, history)``
    where history holds the per-epoch MSE per sample per output, measured
    before that epoch's update.
    """
    params = params or BpTrainParams()
    if hasattr(train, "features"):
        x = train.features
        if targets is None:
            targets = one_hot_matrix(train.labels, net.n_outputs)
    else:
        x = np.asarray(train, dtype=np.float64)
    if targets is None:
        raise InvalidInputError("targets are required for raw feature matrices")
    t = np.asarray(targets, dtype=np.float64)
    if x.shape[1] != net.n_inputs:
        raise InvalidInputError(f"feature dimension {x.shape[1]} != network inputs {net.n_inputs}")
    if t.shape != (x.shape[0], net.n_outputs):
        raise InvalidInputError(f"targets must be {x.shape[0]} x {net.n_outputs}")

    weights = [w.copy() for w in net.weights]
    biases = [b.copy() for b in net.biases]
    work = BpNetwork(weights, biases, net.architecture)
    history = []
    scale = x.shape[0] * net.n_outputs
    lr = params.learning_rate
    for epoch in range(params.max_epochs):
        acts = bp_forward(work, x)
        err = acts[-1] - t
        with np.errstate(over="ignore", invalid="ignore"):
            mse = float(np.sum(err * err)) / scale
        if not np.isfinite(mse):
            raise NumericError(f"backprop diverged at epoch {epoch} (non-finite loss)")
        history.append(mse)
        if mse <= params.goal:
            break
        gw, gb = bp_backward(work, acts, t)
        for k in range(len(weights)):
            weights[k] -= lr * gw[k]
            biases[k] -= lr * gb[k]
    return BpNetwork(tuple(weights), tuple(biases), net.architecture), history


def argmax_lowest(outputs):
    """Row-wise argmax; numpy already returns the first maximal index."""
    return np.argmax(np.asarray(outputs), axis=-1)


def bp_predict(net, x):
    out = bp_forward(net, x)[-1]
    pred = argmax_lowest(out)
    return int(pred) if np.ndim(pred) == 0 else pred
