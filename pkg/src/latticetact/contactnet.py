"""Fully connected network for contact localisation and force regression.

Input: the 7 instantaneous channel pressures.  Output: 5 axial logits,
6 radial logits and one force value in N.  Forward, backward and the
optimiser are written directly against numpy.
"""

from __future__ import annotations

import csv
import logging
import struct
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ModelFormatError, TrainingError
from .model import N_AXIAL, N_RADIAL

log = logging.getLogger(__name__)

N_OUT = N_AXIAL + N_RADIAL + 1
DEFAULT_LAYERS = (7, 128, 128, N_OUT)
MAGIC = b"MLP1"


@dataclass
class MLPModel:
    """Weights ``W[k]`` have shape (in, out); activations apply between layers."""

    weights: list
    biases: list
    in_mean: np.ndarray
    in_std: np.ndarray
    activation: str = "relu"

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self):
        return MLPModel(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.in_mean.copy(),
            self.in_std.copy(),
            self.activation,
        )

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


def init_model(layer_sizes=DEFAULT_LAYERS, rng=None, zero=False, activation="relu"):
    if layer_sizes[-1] != N_OUT:
        raise InvalidInputError(f"output layer must have {N_OUT} units")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        if zero:
            w = np.zeros((fan_in, fan_out))
        else:
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    n_in = layer_sizes[0]
    return MLPModel(weights, biases, np.zeros(n_in), np.ones(n_in), activation)


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _act(model, z):
    if model.activation == "relu":
        return np.maximum(z, 0.0)
    return z


def _forward_raw(model, x):
    """Forward pass on normalised inputs; returns (output, cache)."""
    acts = [x]
    pre = []
    h = x
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        pre.append(z)
        h = z if k == last else _act(model, z)
        acts.append(h)
    return h, (acts, pre)


def _normalise(model, p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != model.layer_sizes[0]:
        raise InvalidInputError(f"expected {model.layer_sizes[0]} inputs, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("network inputs must be finite")
    return (p - model.in_mean) / model.in_std


def forward(model, p):
    """Return ``(axial_probs, radial_probs, force)`` for one sample or a batch."""
    out, _ = _forward_raw(model, _normalise(model, p))
    return (
        softmax(out[..., :N_AXIAL]),
        softmax(out[..., N_AXIAL : N_AXIAL + N_RADIAL]),
        out[..., -1],
    )


def predict(model, p):
    axial, radial, force = forward(model, p)
    return axial.argmax(axis=-1), radial.argmax(axis=-1), force


def loss(pred, axial, radial, force, force_weight=1.0):
    """Cross-entropy on both heads plus weighted squared force error, batch mean.

    ``pred`` is the ``(axial_probs, radial_probs, force)`` triple from
    :func:`forward`; labels may be scalars or arrays.
    """
    pa, pr, pf = (np.atleast_2d(pred[0]), np.atleast_2d(pred[1]), np.atleast_1d(pred[2]))
    axial = np.atleast_1d(axial)
    radial = np.atleast_1d(radial)
    force = np.atleast_1d(np.asarray(force, dtype=float))
    idx = np.arange(len(axial))
    tiny = np.finfo(float).tiny
    ce_a = -np.log(np.maximum(pa[idx, axial], tiny))
    ce_r = -np.log(np.maximum(pr[idx, radial], tiny))
    return float(np.mean(ce_a + ce_r + force_weight * (pf - force) ** 2))


def _loss_and_grads(model, x, axial, radial, force, force_weight=1.0):
    out, (acts, pre) = _forward_raw(model, x)
    n = len(x)
    idx = np.arange(n)
    la = out[:, :N_AXIAL]
    lr = out[:, N_AXIAL : N_AXIAL + N_RADIAL]
    pa, pr = softmax(la), softmax(lr)
    err = out[:, -1] - force
    tiny = np.finfo(float).tiny
    value = np.mean(
        -np.log(np.maximum(pa[idx, axial], tiny))
        - np.log(np.maximum(pr[idx, radial], tiny))
        + force_weight * err**2
    )

    g = np.empty_like(out)
    g[:, :N_AXIAL] = pa
    g[idx, axial] -= 1.0
    g[:, N_AXIAL : N_AXIAL + N_RADIAL] = pr
    g[idx, N_AXIAL + radial] -= 1.0
    g[:, -1] = 2.0 * force_weight * err
    g /= n

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.weights)
    for k in range(len(model.weights) - 1, -1, -1):
        grads_w[k] = acts[k].T @ g
        grads_b[k] = g.sum(axis=0)
        if k:
            g = g @ model.weights[k].T
            if model.activation == "relu":
                g = g * (pre[k - 1] > 0)
    return float(value), grads_w, grads_b


def gradients(model, p, axial, radial, force, force_weight=1.0):
    """Loss and analytic parameter gradients for raw (unnormalised) inputs."""
    x = np.atleast_2d(_normalise(model, p))
    return _loss_and_grads(
        model, x, np.atleast_1d(axial), np.atleast_1d(radial),
        np.atleast_1d(np.asarray(force, dtype=float)), force_weight,
    )


def grad_check(model, p, axial, radial, force, h=1e-5, force_weight=1.0):
    """Largest relative error between analytic and central-difference gradients."""
    model = model.copy()
    _, gw, gb = gradients(model, p, axial, radial, force, force_weight)
    analytic = []
    for w, b in zip(gw, gb):
        analytic += [w, b]
    worst = 0.0
    for param, grad in zip(model.params(), analytic):
        flat = param.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = gradients(model, p, axial, radial, force, force_weight)[0]
            flat[i] = orig - h
            lm = gradients(model, p, axial, radial, force, force_weight)[0]
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * h)
            denom = max(abs(numeric) + abs(gflat[i]), 1e-8)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst


@dataclass
class TrainConfig:
    learning_rate: float = 5e-3
    momentum: float = 0.9
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0
    force_weight: float = 1.0
    hidden: tuple = (128, 128)
    test_trial: int | None = None  # None: hold out the last trial

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.epochs > 0 and self.batch_size > 0):
            raise InvalidInputError("learning_rate, epochs and batch_size must be positive")
        if not 0 <= self.momentum < 1:
            raise InvalidInputError("momentum must be in [0, 1)")


@dataclass
class Metrics:
    loss: float
    axial_acc: float
    radial_acc: float
    force_mae: float


@dataclass
class TrainResult:
    model: MLPModel
    history: list = field(default_factory=list)  # (epoch, train_loss, Metrics on test set)
    test: Metrics | None = None
    seconds: float = 0.0


def evaluate(model, data, force_weight=1.0):
    pred = forward(model, data.pressures)
    a_hat = pred[0].argmax(axis=1)
    r_hat = pred[1].argmax(axis=1)
    return Metrics(
        loss=loss(pred, data.axial, data.radial, data.force, force_weight),
        axial_acc=float(np.mean(a_hat == data.axial)),
        radial_acc=float(np.mean(r_hat == data.radial)),
        force_mae=float(np.mean(np.abs(pred[2] - data.force))),
    )


def split_by_trial(data, test_trial=None):
    trials = np.unique(data.trial)
    if len(trials) < 2:
        raise InvalidInputError("need at least two trials to hold one out")
    test_trial = trials[-1] if test_trial is None else test_trial
    is_test = data.trial == test_trial
    return data.subset(~is_test), data.subset(is_test)


def train(train_data, config=None, test_data=None, on_epoch=None):
    """Mini-batch SGD with momentum.  Deterministic for a given seed."""
    config = config or TrainConfig()
    if len(train_data) == 0:
        raise InvalidInputError("training set is empty")
    rng = np.random.default_rng(config.seed)
    model = init_model((7, *config.hidden, N_OUT), rng=rng)
    model.in_mean = train_data.pressures.mean(axis=0)
    std = train_data.pressures.std(axis=0)
    model.in_std = np.where(std > 0, std, 1.0)

    x_all = (train_data.pressures - model.in_mean) / model.in_std
    axial, radial, force = train_data.axial, train_data.radial, train_data.force
    vel = [np.zeros_like(q) for q in model.params()]
    n = len(x_all)
    result = TrainResult(model)
    start = time.perf_counter()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, config.batch_size):
            batch = order[lo : lo + config.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):  # divergence is checked below
                value, gw, gb = _loss_and_grads(
                    model, x_all[batch], axial[batch], radial[batch], force[batch], config.force_weight
                )
            if not np.isfinite(value):
                raise TrainingError(f"loss diverged at epoch {epoch}", epoch=epoch)
            total += value * len(batch)
            grads = [g for pair in zip(gw, gb) for g in pair]
            for q, v, g in zip(model.params(), vel, grads):
                v *= config.momentum
                v -= config.learning_rate * g
                q += v
        train_loss = total / n
        if not np.isfinite(train_loss):
            raise TrainingError(f"loss diverged at epoch {epoch}", epoch=epoch)
        metrics = evaluate(model, test_data, config.force_weight) if test_data is not None else None
        result.history.append((epoch, train_loss, metrics))
        if on_epoch is not None:
            on_epoch(epoch, train_loss, metrics)
        log.debug("epoch %d loss %.5f", epoch, train_loss)
    result.seconds = time.perf_counter() - start
    result.test = result.history[-1][2]
    return result


def write_history(path, history):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss", "axial_acc", "radial_acc", "force_mae"])
        for epoch, train_loss, m in history:
            if m is None:
                w.writerow([epoch, f"{train_loss:.6f}", "", "", ""])
            else:
                w.writerow([epoch, f"{train_loss:.6f}", f"{m.axial_acc:.6f}",
                            f"{m.radial_acc:.6f}", f"{m.force_mae:.6f}"])


def latency_bench(model, n_samples=1000, rng=None):
    """Mean and standard deviation (seconds) of single-sample forward passes."""
    if n_samples <= 0:
        raise InvalidInputError("n_samples must be positive")
    rng = rng or np.random.default_rng(0)
    inputs = model.in_mean + model.in_std * rng.normal(size=(n_samples, model.layer_sizes[0]))
    times = np.empty(n_samples)
    forward(model, inputs[0])
    for i in range(n_samples):
        t0 = time.perf_counter()
        forward(model, inputs[i])
        times[i] = time.perf_counter() - t0
    return float(times.mean()), float(times.std())


# -- serialisation ---------------------------------------------------------
# MLP1 | u32 n_sizes | u32 sizes[n] | f64 in_mean[n0] | f64 in_std[n0]
#      | per layer: f64 W (row-major, in x out), f64 b | u32 crc32(all prior)


def dumps(model):
    if model.activation != "relu":
        raise ModelFormatError("only ReLU models can be serialised")
    sizes = model.layer_sizes
    parts = [MAGIC, struct.pack(f"<I{len(sizes)}I", len(sizes), *sizes)]
    parts.append(np.ascontiguousarray(model.in_mean, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(model.in_std, dtype="<f8").tobytes())
    for w, b in zip(model.weights, model.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def loads(blob):
    blob = bytes(blob)
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise ModelFormatError("not an MLP1 model file")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise ModelFormatError("model file checksum mismatch")
    (n_sizes,) = struct.unpack_from("<I", body, 4)
    offset = 8
    sizes = list(struct.unpack_from(f"<{n_sizes}I", body, offset))
    offset += 4 * n_sizes

    def take(count, shape):
        nonlocal offset
        end = offset + 8 * count
        if end > len(body):
            raise ModelFormatError("model file truncated")
        arr = np.frombuffer(body[offset:end], dtype="<f8").astype(float).reshape(shape)
        offset = end
        return arr

    in_mean = take(sizes[0], (sizes[0],))
    in_std = take(sizes[0], (sizes[0],))
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(take(fan_in * fan_out, (fan_in, fan_out)))
        biases.append(take(fan_out, (fan_out,)))
    if offset != len(body):
        raise ModelFormatError("trailing bytes in model file")
    return MLPModel(weights, biases, in_mean, in_std)


def save(model, path):
    with open(path, "wb") as fh:
        fh.write(dumps(model))


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
