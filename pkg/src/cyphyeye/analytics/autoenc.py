"""Autoencoder behavioral-anomaly metric over field-bus windows.

Architecture: input D -> tanh hidden -> linear bottleneck B (< D) -> tanh
hidden -> linear output. Inputs are z-scored per feature with statistics
frozen from the training set. The anomaly of a window is the Euclidean
distance between the normalized window and its reconstruction, divided by the
training set's 95th-percentile distance, so 1.0 marks the edge of stable
behavior. Gradients are hand-written and finite-difference checkable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from cyphyeye.analytics import checkpoint
from cyphyeye.analytics.windows import FEATURES, breach_indices

PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4")


class BottleneckConfigError(ValueError):
    """Requested bottleneck does not compress the input."""


class ContaminatedTrainingError(ValueError):
    """Training windows contain breach activity; the model must see only
    stable behavior."""


@dataclass
class AutoencoderModel:
    params: dict
    feat_mean: np.ndarray
    feat_std: np.ndarray
    err_mean: float = 0.0
    err_p95: float = 1.0
    epoch_errors: list = field(default_factory=list)  # mean distance per epoch, [0] = init

    @property
    def dims(self) -> tuple[int, int, int]:
        d, h = self.params["w1"].shape
        b = self.params["w2"].shape[1]
        return d, h, b


def init_params(input_dim: int, hidden_dim: int, bottleneck: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)

    def layer(n_in, n_out):
        return rng.normal(0.0, 1.0 / np.sqrt(n_in), (n_in, n_out))

    return {
        "w1": layer(input_dim, hidden_dim), "b1": np.zeros(hidden_dim),
        "w2": layer(hidden_dim, bottleneck), "b2": np.zeros(bottleneck),
        "w3": layer(bottleneck, hidden_dim), "b3": np.zeros(hidden_dim),
        "w4": layer(hidden_dim, input_dim), "b4": np.zeros(input_dim),
    }


def _forward(params: Mapping[str, np.ndarray], x: np.ndarray):
    h1 = np.tanh(x @ params["w1"] + params["b1"])
    z = h1 @ params["w2"] + params["b2"]
    h2 = np.tanh(z @ params["w3"] + params["b3"])
    xhat = h2 @ params["w4"] + params["b4"]
    return h1, z, h2, xhat


def reconstruct(params: Mapping[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    return _forward(params, x)[3]


def loss_and_grads(params: Mapping[str, np.ndarray], batch: np.ndarray):
    """Mean squared reconstruction error over a (n, D) batch, with gradients."""
    h1, z, h2, xhat = _forward(params, batch)
    diff = xhat - batch
    n = diff.size
    loss = float((diff ** 2).sum() / n)

    dxhat = 2.0 * diff / n
    grads = {}
    grads["w4"] = h2.T @ dxhat
    grads["b4"] = dxhat.sum(axis=0)
    dh2 = dxhat @ params["w4"].T
    dz2 = dh2 * (1.0 - h2 ** 2)
    grads["w3"] = z.T @ dz2
    grads["b3"] = dz2.sum(axis=0)
    dz = dz2 @ params["w3"].T
    grads["w2"] = h1.T @ dz
    grads["b2"] = dz.sum(axis=0)
    dh1 = dz @ params["w2"].T
    dz1 = dh1 * (1.0 - h1 ** 2)
    grads["w1"] = batch.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


def _distances(params: Mapping, xn: np.ndarray) -> np.ndarray:
    return np.linalg.norm(xn - reconstruct(params, xn), axis=1)


def train_autoencoder(windows: Sequence[np.ndarray], epochs: int, seed: int, *,
                      hidden_dim: int = 32, bottleneck: int = 12, lr: float = 0.05,
                      batch_size: int = 32,
                      breach_feature_indices: Optional[Sequence[int]] = None) -> AutoencoderModel:
    """Train on stable-behavior windows only; deterministic per seed.

    Raises BottleneckConfigError when the bottleneck would not compress, and
    ContaminatedTrainingError when any window shows breach activity (checked
    at the breach feature positions, inferred from the standard layout when
    the input length is a whole number of feature frames).
    """
    x = np.asarray(windows, dtype=np.float64)
    if x.ndim != 2 or len(x) < 50:
        raise ValueError(f"need >= 50 windows, got shape {x.shape}")
    d = x.shape[1]
    if bottleneck >= d:
        raise BottleneckConfigError(f"bottleneck {bottleneck} must be < input dim {d}")
    if breach_feature_indices is None and d % len(FEATURES) == 0:
        breach_feature_indices = breach_indices(d // len(FEATURES))
    if breach_feature_indices:
        bad = np.nonzero(x[:, list(breach_feature_indices)].sum(axis=1) > 0)[0]
        if bad.size:
            raise ContaminatedTrainingError(
                f"{bad.size} training windows contain breaches (first at index {int(bad[0])})")

    feat_mean = x.mean(axis=0)
    feat_std = np.maximum(x.std(axis=0), 1e-6)
    xn = (x - feat_mean) / feat_std

    params = init_params(d, hidden_dim, bottleneck, seed)
    rng = np.random.default_rng(seed + 1)
    epoch_errors = [float(_distances(params, xn).mean())]
    for _ in range(epochs):
        order = rng.permutation(len(xn))
        for start in range(0, len(order), batch_size):
            batch = xn[order[start:start + batch_size]]
            _, grads = loss_and_grads(params, batch)
            for k in PARAM_NAMES:
                params[k] -= lr * grads[k]
        epoch_errors.append(float(_distances(params, xn).mean()))

    dists = _distances(params, xn)
    return AutoencoderModel(params=params, feat_mean=feat_mean, feat_std=feat_std,
                            err_mean=float(dists.mean()),
                            err_p95=max(float(np.percentile(dists, 95)), 1e-12),
                            epoch_errors=epoch_errors)


def behavioral_anomaly(model: AutoencoderModel, window: np.ndarray) -> float:
    """Normalized reconstruction distance; ~1.0 at the edge of stable training
    behavior, higher is more anomalous."""
    w = np.asarray(window, dtype=np.float64)
    expected = model.feat_mean.shape[0]
    if w.shape != (expected,):
        raise ValueError(f"window shape {w.shape} does not match model input ({expected},)")
    xn = (w - model.feat_mean) / model.feat_std
    dist = float(np.linalg.norm(xn - reconstruct(model.params, xn)))
    return dist / model.err_p95


def save_autoencoder(model: AutoencoderModel, path) -> None:
    arrays = [model.params[k] for k in PARAM_NAMES] + [model.feat_mean, model.feat_std]
    stats = {"err_mean": model.err_mean, "err_p95": model.err_p95,
             "epoch_errors": model.epoch_errors, "dims": list(model.dims)}
    checkpoint.save_checkpoint(path, checkpoint.KIND_AUTOENCODER, arrays, stats)


def load_autoencoder(path) -> AutoencoderModel:
    kind, arrays, stats = checkpoint.load_checkpoint(path)
    if kind != checkpoint.KIND_AUTOENCODER:
        raise checkpoint.CheckpointError(f"not an autoencoder checkpoint (kind {kind})")
    params = dict(zip(PARAM_NAMES, arrays[:8]))
    return AutoencoderModel(params=params, feat_mean=arrays[8], feat_std=arrays[9],
                            err_mean=stats["err_mean"], err_p95=stats["err_p95"],
                            epoch_errors=list(stats["epoch_errors"]))
