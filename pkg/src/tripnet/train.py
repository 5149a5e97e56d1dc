"""MSE loss, Adam, and the seeded minibatch training loop."""
from dataclasses import asdict, dataclass
import math

import numpy as np

from . import kernels
from .data import FeatureSchema, ScalerParams
from .errors import ArgumentError, NumericDivergenceError, ShapeError
from .kernels._reference import adam_update
from .nn import (Network, flatten_grads, flatten_params, init_network, paper_architecture,
                 predict, unflatten_params)
from .numerics import Rng


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 20
    epochs: int = 5
    learning_rate: float = 0.001
    seed: int = 1
    validation_fraction: float = 0.2

    def __post_init__(self):
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ArgumentError(f"batch_size must be an integer >= 1, got {self.batch_size}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ArgumentError(f"epochs must be an integer >= 1, got {self.epochs}")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ArgumentError(f"learning_rate must be finite and > 0, got {self.learning_rate}")
        if not 0 <= self.validation_fraction < 1:
            raise ArgumentError(f"validation_fraction must be in [0, 1), "
                                f"got {self.validation_fraction}")

    def to_dict(self):
        return asdict(self)

    def replace(self, **changes):
        return TrainConfig(**{**asdict(self), **changes})


@dataclass(frozen=True)
class LossCurve:
    train_loss: tuple
    val_loss: tuple = ()

    def to_csv(self):
        lines = ["epoch,train_loss,val_loss"]
        for i, tl in enumerate(self.train_loss):
            vl = repr(self.val_loss[i]) if self.val_loss else ""
            lines.append(f"{i + 1},{tl!r},{vl}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TrainedModel:
    network: Network
    scaler: ScalerParams
    schema: FeatureSchema
    target_name: str
    curve: LossCurve
    config: TrainConfig

    def __post_init__(self):
        if self.network.n_inputs != len(self.schema.features):
            raise ShapeError(f"network takes {self.network.n_inputs} inputs, schema has "
                             f"{len(self.schema.features)} features")
        if self.scaler.means.size != len(self.schema.features):
            raise ShapeError(f"scaler has {self.scaler.means.size} entries, schema has "
                             f"{len(self.schema.features)} features")

    def predict(self, features):
        """Predictions (1-D) for UNscaled feature rows."""
        return predict(self.network, self.scaler.transform(features)).ravel()


def mse_loss(pred, actual):
    if pred.shape != actual.shape or pred.ndim != 2 or pred.shape[1] != 1 or pred.shape[0] < 1:
        raise ShapeError(f"mse_loss needs matching n x 1 inputs, got {pred.shape} and {actual.shape}")
    diff = pred - actual
    n = diff.shape[0]
    return float(np.mean(diff * diff)), (2.0 / n) * diff


@dataclass(frozen=True)
class AdamState:
    """First/second moment estimates in the flat parameter layout."""
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, net):
        size = sum(layer.param_count for layer in net.layers)
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(net, grads, state, lr, t):
    """Return ``(updated_network, advanced_state)`` after one Adam step at step ``t``."""
    if t < 1:
        raise ArgumentError(f"Adam step index starts at 1, got {t}")
    for layer, dw, db in zip(net.layers, grads.d_weights, grads.d_bias):
        if dw.shape != layer.weights.shape or db.shape != layer.bias.shape:
            raise ShapeError(f"gradient shapes {dw.shape}/{db.shape} do not match layer "
                             f"{layer.weights.shape}/{layer.bias.shape}")
    if len(grads.d_weights) != len(net.layers):
        raise ShapeError(f"{len(grads.d_weights)} gradient layers for {len(net.layers)} layers")
    theta = flatten_params(net)
    if state.m.shape != theta.shape or state.v.shape != theta.shape:
        raise ShapeError(f"optimizer state has {state.m.size} entries, network {theta.size}")
    m, v = state.m.copy(), state.v.copy()
    adam_update(theta, flatten_grads(grads), m, v, lr, t)
    return unflatten_params(theta, net), AdamState(m, v, t)


def train(dataset, config=TrainConfig(), *, validation=None, scaler=None, backend=None):
    """Fit the 16-5-5-1 network to ``dataset`` (features already scaled).

    Validation comes either from ``validation`` (an already-scaled Dataset)
    or from a seeded ``config.validation_fraction`` hold-out, never both.
    ``scaler`` is stored on the model for later prediction; identity if None.
    """
    kern = kernels.get_backend(backend)
    if dataset.n == 0:
        raise ArgumentError("cannot train on an empty dataset")
    if validation is not None and config.validation_fraction > 0:
        raise ArgumentError("pass an explicit validation set or a validation_fraction, not both")
    rng = Rng(config.seed)
    X = dataset.features
    y = dataset.target.ravel()

    if config.validation_fraction > 0:
        perm = kern.permutation(rng, dataset.n)
        n_val = int(math.floor(dataset.n * config.validation_fraction))
        if n_val == 0 or n_val == dataset.n:
            raise ArgumentError(f"validation_fraction {config.validation_fraction} leaves an "
                                f"empty part of {dataset.n} rows")
        train_idx = np.sort(perm[n_val:])
        validation = dataset.subset(np.sort(perm[:n_val]))
    else:
        train_idx = np.arange(dataset.n, dtype=np.int64)
    if validation is not None and validation.n == 0:
        validation = None

    template = paper_architecture(dataset.features.shape[1])
    net = init_network(template, rng)
    theta = flatten_params(net)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    dims = np.array(net.dims, dtype=np.int64)
    acts = np.array([layer.activation.code for layer in net.layers], dtype=np.int64)

    n_train = train_idx.size
    n_batches = -(-n_train // config.batch_size)
    sizes = np.full(n_batches, config.batch_size, dtype=np.float64)
    sizes[-1] = n_train - config.batch_size * (n_batches - 1)
    batch_losses = np.zeros(n_batches)
    t = 0
    train_curve, val_curve = [], []
    for epoch in range(config.epochs):
        order = train_idx[kern.permutation(rng, n_train)]
        failed = kern.train_epoch(theta, m, v, dims, acts, X, y, order, config.batch_size,
                                  float(config.learning_rate), t, batch_losses)
        if failed >= 0:
            raise NumericDivergenceError("training loss became non-finite", epoch, failed)
        t += n_batches
        train_curve.append(float(np.dot(batch_losses, sizes) / n_train))
        if validation is not None:
            net = unflatten_params(theta, template)
            try:
                val_loss, _ = mse_loss(predict(net, validation.features), validation.target)
            except NumericDivergenceError:
                val_loss = math.inf
            if not math.isfinite(val_loss):
                raise NumericDivergenceError("validation loss became non-finite", epoch, None)
            val_curve.append(val_loss)

    return TrainedModel(
        network=unflatten_params(theta, template),
        scaler=scaler if scaler is not None else ScalerParams.identity(X.shape[1]),
        schema=dataset.schema,
        target_name=dataset.target_name,
        curve=LossCurve(tuple(train_curve), tuple(val_curve)),
        config=config,
    )
