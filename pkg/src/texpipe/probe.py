"""Linear softmax probe with paired-batch gradient averaging.

The probe quantifies how predictable labels are from a feature set: trained
on features that carry no label information it must sit at chance accuracy,
and its held-out log-probabilities feed the classifier-based relevance
estimate. The paired update averages two independently computed branch
gradients (originals and re-rendered variants) in that exact order, which
for equal group sizes equals one plain step on the concatenated batch.

Training is plain SGD from zero-initialized weights, deterministic for a
fixed seed, with a constant-then-decay schedule that divides the rate by 10
whenever the windowed training loss stops improving.

Feature matrices travel in the MTX1 container: magic "MTX1", rows u32 LE,
cols u32 LE, then row-major float32 little-endian values. Labels are one
integer per line; traces are CSV rows of (step, loss, accuracy).
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    LabelOutOfRange,
    LengthMismatch,
    TruncatedPayload,
)

_MTX_MAGIC = b"MTX1"
_MTX_HEADER = struct.Struct("<4sII")


@dataclass
class SoftmaxProbe:
    """Linear classifier; weights are (featureDim + 1, numClasses), last row bias."""

    weights: np.ndarray
    learning_rate: float
    rng_seed: int = 0

    def __post_init__(self):
        if self.weights.ndim != 2 or self.weights.shape[1] < 2:
            raise ValueError("weights must be (featureDim + 1, numClasses >= 2)")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        if not (self.learning_rate >= 0 and np.isfinite(self.learning_rate)):
            raise ValueError("learning rate must be finite and >= 0")

    @classmethod
    def zeros(cls, feature_dim: int, num_classes: int, learning_rate: float, rng_seed: int = 0):
        return cls(
            weights=np.zeros((feature_dim + 1, num_classes), dtype=np.float64),
            learning_rate=learning_rate,
            rng_seed=rng_seed,
        )

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0] - 1

    @property
    def num_classes(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class PairedBatch:
    """Originals and their re-rendered variants; paired examples share labels."""

    original_features: np.ndarray
    original_labels: np.ndarray
    variant_features: np.ndarray
    variant_labels: np.ndarray
    pairing: np.ndarray  # original index -> variant index, a bijection

    def __post_init__(self):
        n = self.original_labels.shape[0]
        if self.variant_labels.shape[0] != n or self.original_features.shape[0] != n \
                or self.variant_features.shape[0] != n:
            raise LengthMismatch("originals and variants must have equal lengths")
        perm = np.asarray(self.pairing)
        if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
            raise LengthMismatch("pairing must be a bijection over the batch")
        if not np.array_equal(self.original_labels, self.variant_labels[perm]):
            raise LengthMismatch("paired examples must share labels")


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _augment(features: np.ndarray) -> np.ndarray:
    return np.hstack([features, np.ones((features.shape[0], 1))])


def loss_and_grad(probe: SoftmaxProbe, features: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy (nats) and its exact gradient.

    Gradient has the probe's weight shape; duplicating every example leaves
    both outputs unchanged (mean reduction).
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[1] != probe.feature_dim:
        raise DimensionMismatch(
            f"features are {x.shape}, probe expects dim {probe.feature_dim}"
        )
    if y.shape != (x.shape[0],):
        raise DimensionMismatch(f"{x.shape[0]} examples vs labels {y.shape}")
    if np.any(y < 0) or np.any(y >= probe.num_classes):
        raise LabelOutOfRange(f"labels must lie in 0..{probe.num_classes - 1}")
    xa = _augment(x)
    logp = _log_softmax(xa @ probe.weights)
    n = x.shape[0]
    loss = float(-logp[np.arange(n), y].mean())
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    grad = xa.T @ delta / n
    return loss, grad


def predict_log_probs(probe: SoftmaxProbe, features: np.ndarray) -> np.ndarray:
    """Per-sample natural-log class probabilities."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != probe.feature_dim:
        raise DimensionMismatch(f"features are {x.shape}, probe expects dim {probe.feature_dim}")
    return _log_softmax(_augment(x) @ probe.weights)


def accuracy(probe: SoftmaxProbe, features: np.ndarray, labels: np.ndarray) -> float:
    logp = predict_log_probs(probe, features)
    return float((logp.argmax(axis=1) == np.asarray(labels)).mean())


def paired_step(probe: SoftmaxProbe, batch: PairedBatch) -> SoftmaxProbe:
    """One update from the average of the two branch gradients.

    The branches are evaluated independently and averaged in original,
    variant order; with equal group sizes the step equals a plain step on
    the concatenated batch.
    """
    _, grad_orig = loss_and_grad(probe, batch.original_features, batch.original_labels)
    _, grad_var = loss_and_grad(probe, batch.variant_features, batch.variant_labels)
    update = probe.learning_rate * 0.5 * (grad_orig + grad_var)
    return SoftmaxProbe(probe.weights - update, probe.learning_rate, probe.rng_seed)


def plain_step(probe: SoftmaxProbe, features: np.ndarray, labels: np.ndarray) -> SoftmaxProbe:
    _, grad = loss_and_grad(probe, features, labels)
    return SoftmaxProbe(probe.weights - probe.learning_rate * grad, probe.learning_rate, probe.rng_seed)


# -- training loop ----------------------------------------------------------------

@dataclass
class TrainConfig:
    steps: int = 5000
    batch_size: int = 32
    learning_rate: float = 0.1
    seed: int = 0
    plateau_window: int = 500     # steps per loss-plateau check
    plateau_tol: float = 1e-3     # nats of required improvement per window
    decay: float = 0.1
    min_learning_rate: float = 1e-6
    standardize: bool = True


@dataclass
class TrainingTrace:
    steps: np.ndarray
    losses: np.ndarray        # pre-update batch loss, nats
    accuracies: np.ndarray    # pre-update batch accuracy
    final_loss: float
    final_accuracy: float
    probe: SoftmaxProbe
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    learning_rates: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("step,loss,accuracy\n")
        for s, l, a in zip(self.steps, self.losses, self.accuracies):
            buf.write(f"{int(s)},{l:.8f},{a:.6f}\n")
        return buf.getvalue()


def standardize_features(features: np.ndarray):
    """Per-dimension mean and scale from this (training) split only."""
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    return mean, scale


def train_probe(features: np.ndarray, labels: np.ndarray, config: TrainConfig) -> TrainingTrace:
    """SGD training with a plateau-driven decay schedule; fully deterministic.

    Per step: draw a batch with the seeded generator, record pre-update
    batch loss and accuracy, apply one gradient step. Every plateau_window
    steps the mean windowed loss is compared to the previous window and the
    learning rate decays when the improvement falls below plateau_tol.
    Final loss and accuracy are evaluated on the whole provided set.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionMismatch(f"features {x.shape} vs labels {y.shape}")
    num_classes = int(y.max()) + 1 if y.size else 0
    if num_classes < 2:
        raise LabelOutOfRange("need at least two classes")

    if config.standardize:
        mean, scale = standardize_features(x)
    else:
        mean, scale = np.zeros(x.shape[1]), np.ones(x.shape[1])
    xs = (x - mean) / scale

    probe = SoftmaxProbe.zeros(x.shape[1], num_classes, config.learning_rate, config.seed)
    rng = np.random.default_rng(config.seed)
    n = x.shape[0]

    steps = np.arange(config.steps)
    losses = np.empty(config.steps)
    accs = np.empty(config.steps)
    lr = config.learning_rate
    lr_trace = []
    prev_window_mean = None

    for step in range(config.steps):
        idx = rng.integers(0, n, size=min(config.batch_size, n))
        bx, by = xs[idx], y[idx]
        loss, grad = loss_and_grad(probe, bx, by)
        losses[step] = loss
        accs[step] = float((predict_log_probs(probe, bx).argmax(axis=1) == by).mean())
        probe.weights -= lr * grad
        lr_trace.append(lr)

        if (step + 1) % config.plateau_window == 0:
            window_mean = float(losses[step + 1 - config.plateau_window: step + 1].mean())
            if prev_window_mean is not None and prev_window_mean - window_mean < config.plateau_tol:
                lr = max(lr * config.decay, config.min_learning_rate)
            prev_window_mean = window_mean

    probe.learning_rate = lr
    final_loss, _ = loss_and_grad(probe, xs, y)
    final_acc = accuracy(probe, xs, y)
    return TrainingTrace(
        steps=steps,
        losses=losses,
        accuracies=accs,
        final_loss=float(final_loss),
        final_accuracy=float(final_acc),
        probe=probe,
        feature_mean=mean,
        feature_scale=scale,
        learning_rates=lr_trace,
    )


# -- MTX1 container -----------------------------------------------------------------

def matrix_to_bytes(matrix: np.ndarray) -> bytes:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValueError("MTX1 stores 2-D matrices")
    return _MTX_HEADER.pack(_MTX_MAGIC, m.shape[0], m.shape[1]) + m.tobytes()


def matrix_from_bytes(data: bytes) -> np.ndarray:
    if data[:4] != _MTX_MAGIC:
        raise BadMagic(f"expected {_MTX_MAGIC!r}, got {bytes(data[:4])!r}")
    if len(data) < _MTX_HEADER.size:
        raise TruncatedPayload("header truncated")
    _, rows, cols = _MTX_HEADER.unpack_from(data)
    expected = rows * cols * 4
    if len(data) - _MTX_HEADER.size != expected:
        raise TruncatedPayload(
            f"payload is {len(data) - _MTX_HEADER.size} bytes, header implies {expected}"
        )
    return np.frombuffer(data, dtype="<f4", offset=_MTX_HEADER.size).reshape(rows, cols).copy()


def read_labels(text: str) -> np.ndarray:
    values = [int(line.strip()) for line in text.splitlines() if line.strip()]
    if not values:
        raise LengthMismatch("label file has no entries")
    return np.asarray(values, dtype=np.int64)


def write_labels(labels: np.ndarray) -> str:
    return "\n".join(str(int(v)) for v in labels) + "\n"
