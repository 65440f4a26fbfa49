"""Minimal reverse-mode differentiation over dense layers, an Adam
optimizer, and a deterministic early-stopping trainer.

Everything is plain float64 numpy. Networks are lists of (weight, bias,
activation) layers; ``forward`` returns a tape that ``backward`` consumes
to produce exact gradients, which finite differences verify in the tests.
Models built on top (N-BEATS, N-HiTS) expose ``parameter_arrays`` and
``loss_and_grads`` so one trainer serves them all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .rng import SplitMix64

_ACTIVATIONS = ("relu", "identity")


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError("weight must be (out, in) with bias (out,)")


class DenseNet:
    """A chain of dense layers; adjacent dimensions must match."""

    def __init__(self, layers: list[DenseLayer]):
        if not layers:
            raise ValueError("a network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if b.weight.shape[1] != a.weight.shape[0]:
                raise ValueError(
                    f"layer dimensions do not chain: {a.weight.shape} -> {b.weight.shape}"
                )
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def parameter_arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out


def glorot_init(
    dims: list[int], rng: SplitMix64, hidden_activation: str = "relu",
    final_activation: str = "identity",
) -> DenseNet:
    """Uniform(+-sqrt(6/(fan_in+fan_out))) initialization, seeded."""
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = np.empty((fan_out, fan_in))
        for i in range(fan_out):
            for j in range(fan_in):
                w[i, j] = (2.0 * rng.uniform() - 1.0) * limit
        act = final_activation if k == len(dims) - 2 else hidden_activation
        layers.append(DenseLayer(w, np.zeros(fan_out), act))
    return DenseNet(layers)


class Tape:
    """Cached activations from one forward pass; consumed by backward."""

    def __init__(self, net: DenseNet, inputs: list[np.ndarray], pre: list[np.ndarray], was_vector: bool):
        self.net = net
        self.inputs = inputs  # input to each layer, 2-D (batch, dim)
        self.pre = pre  # pre-activation of each layer
        self.was_vector = was_vector


def forward(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, Tape]:
    """Apply the network to a vector (in_dim,) or a batch (n, in_dim)."""
    x = np.asarray(x, dtype=np.float64)
    was_vector = x.ndim == 1
    h = x[None, :] if was_vector else x
    if h.shape[1] != net.input_dim:
        raise ValueError(
            f"input dimension {h.shape[1]} does not match network input {net.input_dim}"
        )
    inputs, pre = [], []
    for layer in net.layers:
        inputs.append(h)
        z = h @ layer.weight.T + layer.bias
        pre.append(z)
        h = np.maximum(z, 0.0) if layer.activation == "relu" else z
    out = h[0] if was_vector else h
    return out, Tape(net, inputs, pre, was_vector)


@dataclass
class GradientSet:
    """Per-parameter gradients mirroring a DenseNet, plus the gradient with
    respect to the network input (needed by residually stacked models)."""

    layers: list[tuple[np.ndarray, np.ndarray]]
    input_grad: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for dw, db in self.layers:
            out.append(dw)
            out.append(db)
        return out


def backward(net: DenseNet, tape: Tape, output_grad: np.ndarray) -> GradientSet:
    """Exact reverse-mode gradients for the forward pass recorded in tape."""
    if tape.net is not net:
        raise ValueError("tape does not belong to this network")
    g = np.asarray(output_grad, dtype=np.float64)
    if tape.was_vector:
        g = g[None, :]
    if g.shape != tape.pre[-1].shape:
        raise ValueError(
            f"output_grad shape {g.shape} does not match forward output {tape.pre[-1].shape}"
        )
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)  # type: ignore[list-item]
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        dz = g * (tape.pre[k] > 0.0) if layer.activation == "relu" else g
        grads[k] = (dz.T @ tape.inputs[k], dz.sum(axis=0))
        g = dz @ layer.weight
    input_grad = g[0] if tape.was_vector else g
    return GradientSet(layers=grads, input_grad=input_grad)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 500
    batch_size: int = 16
    patience: int = 30
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class AdamState:
    """First/second moment accumulators for a fixed list of parameters."""

    def __init__(self, params: list[np.ndarray]):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0


def adam_update(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> None:
    """One in-place Adam step with bias correction."""
    if len(params) != len(state.m) or len(params) != len(grads):
        raise ValueError("parameter, gradient, and state lengths differ")
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)


def adam_step(
    net: DenseNet, grads: GradientSet, state: AdamState | None, cfg: TrainConfig
) -> AdamState:
    """Spec surface for a single network; returns the (possibly new) state."""
    params = net.parameter_arrays()
    if state is None:
        state = AdamState(params)
    adam_update(params, grads.arrays(), state, cfg)
    return state


@dataclass
class TrainResult:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")


def _normalize_pairs(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Scale each (input, target) window by its lookback mean + 1. The
    offset keeps all-zero windows finite; scaling is undone at predict
    time, so this is an internal, invertible transform."""
    xs, ys = [], []
    for x, y in pairs:
        s = float(np.mean(x)) + 1.0
        xs.append(np.asarray(x, dtype=np.float64) / s)
        ys.append(np.asarray(y, dtype=np.float64) / s)
    return np.stack(xs), np.stack(ys)


def train(model, train_pairs, val_pairs, cfg: TrainConfig) -> TrainResult:
    """Minimize MSE on normalized windows with Adam and early stopping.

    ``model`` must expose ``parameter_arrays()`` (live arrays, updated in
    place) and ``loss_and_grads(X, Y)``. Shuffling uses the seeded splitmix
    generator, so the whole run is a pure function of (data, cfg). The
    parameters that achieved the best validation loss are restored at the
    end. With no validation pairs the training loss is monitored instead.
    """
    if len(train_pairs) == 0:
        raise ValueError("no training windows")
    X, Y = _normalize_pairs(train_pairs)
    have_val = len(val_pairs) > 0
    if have_val:
        XV, YV = _normalize_pairs(val_pairs)

    params = model.parameter_arrays()
    state = AdamState(params)
    rng = SplitMix64(cfg.seed)
    result = TrainResult()
    best_params = [p.copy() for p in params]
    since_best = 0
    n = X.shape[0]

    for epoch in range(cfg.max_epochs):
        order = list(range(n))
        for i in range(n - 1, 0, -1):  # Fisher-Yates with the seeded stream
            j = rng.randint(0, i)
            order[i], order[j] = order[j], order[i]
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = model.loss_and_grads(X[idx], Y[idx])
            adam_update(params, grads, state, cfg)
            epoch_loss += loss * len(idx)
        epoch_loss /= n
        result.train_losses.append(epoch_loss)

        if have_val:
            val_loss, _ = model.loss_and_grads(XV, YV)
        else:
            val_loss = epoch_loss
        result.val_losses.append(val_loss)

        if val_loss < result.best_val_loss - 1e-12:
            result.best_val_loss = val_loss
            result.best_epoch = epoch
            for bp, p in zip(best_params, params):
                np.copyto(bp, p)
            since_best = 0
        else:
            since_best += 1
            if since_best > cfg.patience:
                break

    for p, bp in zip(params, best_params):
        np.copyto(p, bp)
    return result


def params_to_json(arrays: list[np.ndarray], meta: dict | None = None) -> str:
    """Versioned JSON for trained parameters: shapes plus row-major data."""
    doc = {
        "format_version": 1,
        "arrays": [
            {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}
            for a in arrays
        ],
    }
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, sort_keys=True)


def params_from_json(text: str) -> tuple[list[np.ndarray], dict]:
    doc = json.loads(text)
    if doc.get("format_version") != 1:
        raise ValueError(f"unsupported parameter format: {doc.get('format_version')}")
    arrays = [
        np.array(a["data"], dtype=np.float64).reshape(a["shape"])
        for a in doc["arrays"]
    ]
    return arrays, doc.get("meta", {})


def load_parameters(model, arrays: list[np.ndarray]) -> None:
    """Copy saved arrays into a model's live parameters, shape-checked."""
    params = model.parameter_arrays()
    if len(params) != len(arrays):
        raise ValueError(
            f"expected {len(params)} parameter arrays, got {len(arrays)}"
        )
    for p, a in zip(params, arrays):
        if p.shape != a.shape:
            raise ValueError(f"shape mismatch: {p.shape} vs {a.shape}")
        np.copyto(p, a)
