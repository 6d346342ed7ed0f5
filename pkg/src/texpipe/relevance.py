"""Discrete relevance measures: entropy, information gain, KL, mutual information.

Everything is computed in bits (log base 2) over categorical count tables.
Information gain of a value/label table and the mutual information of the
same table are one identity: the gain subtracts the value-conditioned label
entropy from the marginal label entropy, which is exactly I(X;Y). The test
suite holds the two implementations to 1e-12 of each other.

Zero-probability conventions: 0*log(1/0) = 0 everywhere, and zero-count
joint cells contribute nothing, so all operations are total on valid inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyJoint,
    InvalidDistribution,
    LengthMismatch,
    SupportMismatch,
)

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Distribution:
    """Probabilities over K outcomes; nonnegative, summing to 1 within 1e-12."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1 or p.size == 0:
            raise InvalidDistribution("need a nonempty 1-D probability vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidDistribution("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > _SUM_TOL:
            raise InvalidDistribution(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)

    @classmethod
    def from_counts(cls, counts) -> "Distribution":
        c = np.asarray(counts, dtype=np.float64)
        total = c.sum()
        if total <= 0:
            raise InvalidDistribution("counts sum to zero")
        return cls(c / total)


@dataclass(frozen=True)
class CategoricalJoint:
    """Integer count table, rows = feature values, columns = class labels."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise InvalidDistribution("counts must be a nonempty 2-D table")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(np.isfinite(c)) or np.any(c != np.floor(c)):
                raise InvalidDistribution("counts must be integers")
        if np.any(c < 0):
            raise InvalidDistribution("counts must be nonnegative")
        if c.sum() == 0:
            raise EmptyJoint("joint table has zero total count")
        c = np.ascontiguousarray(c, dtype=np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def num_values(self) -> int:
        return self.counts.shape[0]

    @property
    def num_labels(self) -> int:
        return self.counts.shape[1]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def label_marginal(self) -> Distribution:
        return Distribution.from_counts(self.counts.sum(axis=0))

    def value_marginal(self) -> Distribution:
        return Distribution.from_counts(self.counts.sum(axis=1))


def _plogp(p: np.ndarray) -> float:
    """Sum of -p*log2(p) over the positive entries."""
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def entropy(d: Distribution) -> float:
    """Shannon entropy in bits."""
    return _plogp(d.probs)


def information_gain(j: CategoricalJoint) -> float:
    """Label-entropy reduction from conditioning on the row value, in bits.

    Marginal label entropy minus the count-weighted entropy of each row's
    label distribution; empty rows contribute nothing.
    """
    counts = j.counts.astype(np.float64)
    total = counts.sum()
    h_labels = _plogp(counts.sum(axis=0) / total)
    remaining = 0.0
    row_totals = counts.sum(axis=1)
    for row, row_total in zip(counts, row_totals):
        if row_total > 0:
            remaining += (row_total / total) * _plogp(row / row_total)
    return h_labels - remaining


def mutual_information(j: CategoricalJoint) -> float:
    """I(X;Y) in bits from the joint count table; zero-count cells contribute 0."""
    counts = j.counts.astype(np.float64)
    total = counts.sum()
    p = counts / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    return float((p[nz] * np.log2(p[nz] / (px * py)[nz])).sum())


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """D_KL(p || q) in bits; requires p absolutely continuous w.r.t. q."""
    pp, qq = p.probs, q.probs
    if pp.shape != qq.shape:
        raise SupportMismatch(f"shapes {pp.shape} vs {qq.shape}")
    if np.any((qq == 0) & (pp > 0)):
        raise SupportMismatch("p has mass where q is zero")
    nz = pp > 0
    return float((pp[nz] * np.log2(pp[nz] / qq[nz])).sum())


def joint_and_marginal_product(j: CategoricalJoint) -> tuple[Distribution, Distribution]:
    """Flattened joint distribution and the matching product of marginals."""
    p = j.counts.astype(np.float64) / j.total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    return Distribution(p.reshape(-1)), Distribution((px * py).reshape(-1))


def mi_from_classifier(pred_log_probs: np.ndarray, labels: np.ndarray) -> float:
    """Classifier-based relevance estimate in bits.

    Entropy of the empirical label marginal minus the classifier's mean
    cross-entropy. `pred_log_probs` holds natural-log probabilities, one
    row per sample, normalized per row. The estimate is negative when the
    classifier predicts worse than the marginal; it is returned as-is.
    """
    lp = np.asarray(pred_log_probs, dtype=np.float64)
    y = np.asarray(labels)
    if lp.ndim != 2:
        raise LengthMismatch("pred_log_probs must be (samples, labels)")
    if y.ndim != 1 or y.shape[0] != lp.shape[0]:
        raise LengthMismatch(f"{lp.shape[0]} prediction rows vs {y.shape} labels")
    if np.any(y < 0) or np.any(y >= lp.shape[1]):
        raise LengthMismatch("label outside the predicted class range")
    rowmax = lp.max(axis=1, keepdims=True)
    norm = rowmax[:, 0] + np.log(np.exp(lp - rowmax).sum(axis=1))
    if np.any(np.abs(norm) > 1e-6):
        raise InvalidDistribution("log-probabilities are not normalized per sample")

    counts = np.bincount(y, minlength=lp.shape[1])
    h_marginal = _plogp(counts / counts.sum())
    ce_bits = float(-(lp[np.arange(lp.shape[0]), y]).mean() / np.log(2.0))
    return h_marginal - ce_bits
