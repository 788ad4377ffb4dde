"""Stacked autoencoder for covariate representation.

The encoder stack (trained jointly with a mirrored, untied decoder on mean
squared reconstruction error) maps standardized covariates to a low
dimension; it is trained once on the union of labeled and censored rows and
frozen before any active-learning round runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, TrainingDivergedError, ValidationError

DEFAULT_ENCODER_WIDTHS = (150, 100, 5)
DEEP_ENCODER_WIDTHS = (128, 64, 16)

_SERIALIZATION_VERSION = 1


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


_ACTIVATIONS = {
    "sigmoid": (_sigmoid, lambda a: a * (1.0 - a)),
    "tanh": (np.tanh, lambda a: 1.0 - a * a),
    "relu": (lambda z: np.maximum(z, 0.0), lambda a: (a > 0.0).astype(np.float64)),
}


@dataclass(frozen=True)
class SaeConfig:
    """Encoder widths (last entry = latent dimension) plus training knobs."""

    layer_sizes: tuple[int, ...] = DEFAULT_ENCODER_WIDTHS
    activation: str = "tanh"
    epochs: int = 150
    batch_size: int = 32
    learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not self.layer_sizes:
            raise ValidationError("layer_sizes must be non-empty")
        if any(s < 1 for s in self.layer_sizes):
            raise ValidationError("layer sizes must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be positive")


@dataclass
class SaeWeights:
    """Full encoder+decoder stack with the standardization baked in.

    ``layers`` holds (W, b) pairs input->latent->input; every layer except
    the final reconstruction applies the activation.
    """

    layer_sizes: tuple[int, ...]
    activation: str
    layers: list[tuple[np.ndarray, np.ndarray]]
    mean: np.ndarray
    std: np.ndarray
    training_loss_history: list[float] = field(default_factory=list)

    @property
    def latent_dim(self) -> int:
        return self.layer_sizes[-1]

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[0]

    def save(self, path: str | Path) -> None:
        payload = {
            "version": _SERIALIZATION_VERSION,
            "layer_sizes": list(self.layer_sizes),
            "activation": self.activation,
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "training_loss_history": self.training_loss_history,
            "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in self.layers],
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path: str | Path) -> "SaeWeights":
        payload = json.loads(Path(path).read_text())
        if payload.get("version") != _SERIALIZATION_VERSION:
            raise ValidationError(f"unsupported weights file version {payload.get('version')!r}")
        return cls(
            layer_sizes=tuple(payload["layer_sizes"]),
            activation=payload["activation"],
            layers=[
                (np.array(layer["w"], dtype=np.float64), np.array(layer["b"], dtype=np.float64))
                for layer in payload["layers"]
            ],
            mean=np.array(payload["mean"], dtype=np.float64),
            std=np.array(payload["std"], dtype=np.float64),
            training_loss_history=list(payload["training_loss_history"]),
        )


def _stack_widths(input_dim: int, encoder_widths: tuple[int, ...]) -> list[int]:
    decoder = list(encoder_widths[-2::-1]) + [input_dim]
    return [input_dim, *encoder_widths, *decoder]


def _init_layers(input_dim: int, encoder_widths: tuple[int, ...], rng) -> list:
    widths = _stack_widths(input_dim, encoder_widths)
    layers = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        scale = np.sqrt(2.0 / (fan_in + fan_out))
        layers.append((rng.normal(0.0, scale, size=(fan_in, fan_out)), np.zeros(fan_out)))
    return layers


def _forward(layers, x, activation):
    """Returns the list of layer outputs; the last layer stays linear."""
    act, _ = _ACTIVATIONS[activation]
    outputs = []
    h = x
    for k, (w, b) in enumerate(layers):
        z = h @ w + b
        h = z if k == len(layers) - 1 else act(z)
        outputs.append(h)
    return outputs


def reconstruction_loss(layers, x, activation) -> float:
    """Mean squared reconstruction error over all cells of ``x``."""
    out = _forward(layers, x, activation)[-1]
    return float(np.mean((out - x) ** 2))


def loss_gradients(layers, x, activation):
    """Backprop: returns (loss, [(dW, db), ...]) matching ``layers``."""
    _, dact = _ACTIVATIONS[activation]
    outputs = _forward(layers, x, activation)
    n, d = x.shape
    loss = float(np.mean((outputs[-1] - x) ** 2))

    grads: list = [None] * len(layers)
    delta = 2.0 * (outputs[-1] - x) / (n * d)
    for k in range(len(layers) - 1, -1, -1):
        inputs = x if k == 0 else outputs[k - 1]
        grads[k] = (inputs.T @ delta, delta.sum(axis=0))
        if k > 0:
            w, _ = layers[k]
            delta = (delta @ w.T) * dact(outputs[k - 1])
    return loss, grads


def train_sae(covariates: np.ndarray, config: SaeConfig) -> SaeWeights:
    """Train the stack with mini-batch gradient descent; deterministic per seed.

    Standardizes internally with the statistics of ``covariates`` (meant to
    be the union of labeled and pool rows) and stores them so `encode`
    applies the identical transform to unseen rows.
    """
    x = np.asarray(covariates, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError("need a 2-d matrix with at least 2 rows")
    if config.layer_sizes[-1] >= x.shape[1]:
        raise ValidationError(
            f"latent dim {config.layer_sizes[-1]} must be smaller than input dim {x.shape[1]}"
        )

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    xs = (x - mean) / std

    rng = np.random.default_rng(config.seed)
    layers = _init_layers(x.shape[1], config.layer_sizes, rng)

    n = xs.shape[0]
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        batch_losses = []
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n, config.batch_size):
                batch = xs[order[start : start + config.batch_size]]
                loss, grads = loss_gradients(layers, batch, config.activation)
                batch_losses.append(loss)
                layers = [
                    (w - config.learning_rate * dw, b - config.learning_rate * db)
                    for (w, b), (dw, db) in zip(layers, grads)
                ]
        epoch_loss = float(np.mean(batch_losses))
        if not np.isfinite(epoch_loss) or not all(
            np.all(np.isfinite(w)) and np.all(np.isfinite(b)) for w, b in layers
        ):
            raise TrainingDivergedError(epoch)
        history.append(epoch_loss)

    return SaeWeights(
        layer_sizes=tuple(config.layer_sizes),
        activation=config.activation,
        layers=layers,
        mean=mean,
        std=std,
        training_loss_history=history,
    )


def encode(weights: SaeWeights, covariates: np.ndarray) -> np.ndarray:
    """Map rows through the frozen encoder; row order is preserved."""
    x = np.asarray(covariates, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != weights.input_dim:
        raise DimensionError(f"input width {x.shape[1]} != trained width {weights.input_dim}")

    act, _ = _ACTIVATIONS[weights.activation]
    h = (x - weights.mean) / weights.std
    for w, b in weights.layers[: len(weights.layer_sizes)]:
        h = act(h @ w + b)
    return h[0] if squeeze else h
