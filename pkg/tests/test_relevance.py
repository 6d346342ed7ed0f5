import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from texpipe.relevance import (
    CategoricalJoint,
    Distribution,
    entropy,
    information_gain,
    joint_and_marginal_product,
    kl_divergence,
    mi_from_classifier,
    mutual_information,
)
from texpipe.errors import (
    EmptyJoint,
    InvalidDistribution,
    LengthMismatch,
    SupportMismatch,
)


def direct_gain(counts):
    """Straight per-term evaluation of the gain formula (oracle)."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()

    def h(row):
        p = row / row.sum()
        return sum(pi * math.log2(1 / pi) for pi in p if pi > 0)

    marginal = counts.sum(axis=0)
    gain = h(marginal)
    for row in counts:
        if row.sum() > 0:
            gain -= (row.sum() / total) * h(row)
    return gain


joint_tables = arrays(
    np.int64,
    st.tuples(st.integers(1, 20), st.integers(1, 20)),
    elements=st.integers(0, 30),
).filter(lambda a: a.sum() > 0)


class TestEntropy:
    def test_uniform_51(self):
        d = Distribution(np.full(51, 1 / 51))
        assert entropy(d) == pytest.approx(math.log2(51), abs=1e-12)

    def test_point_mass(self):
        assert entropy(Distribution(np.array([0.0, 1.0, 0.0]))) == 0.0

    def test_direct_summation(self):
        assert entropy(Distribution(np.array([0.5, 0.25, 0.25]))) == pytest.approx(1.5, abs=1e-12)

    def test_invalid_distributions(self):
        with pytest.raises(InvalidDistribution):
            Distribution(np.array([0.5, 0.4]))
        with pytest.raises(InvalidDistribution):
            Distribution(np.array([1.5, -0.5]))

    @settings(max_examples=100)
    @given(arrays(np.float64, st.integers(1, 40), elements=st.floats(0.0, 10.0)).filter(lambda a: a.sum() > 0))
    def test_upper_bound_is_uniform(self, weights):
        d = Distribution(weights / weights.sum())
        assert entropy(d) <= math.log2(d.probs.size) + 1e-12


class TestInformationGain:
    def test_independent_rows_give_zero(self):
        j = CategoricalJoint(np.array([[2, 4], [1, 2], [3, 6]]))
        assert information_gain(j) == pytest.approx(0.0, abs=1e-12)

    def test_perfect_split_recovers_label_entropy(self):
        j = CategoricalJoint(np.array([[5, 0], [0, 3]]))
        marginal = j.label_marginal()
        assert information_gain(j) == pytest.approx(entropy(marginal), abs=1e-12)

    def test_worked_table_matches_direct_formula(self):
        counts = np.array([[2, 1], [1, 2]])
        assert information_gain(CategoricalJoint(counts)) == pytest.approx(
            direct_gain(counts), abs=1e-12
        )

    def test_empty_rows_ignored(self):
        with_empty = CategoricalJoint(np.array([[2, 1], [0, 0], [1, 2]]))
        without = CategoricalJoint(np.array([[2, 1], [1, 2]]))
        assert information_gain(with_empty) == pytest.approx(information_gain(without), abs=1e-15)

    def test_empty_joint_rejected(self):
        with pytest.raises(EmptyJoint):
            CategoricalJoint(np.zeros((2, 2), dtype=np.int64))


class TestMutualInformation:
    def test_product_joint_is_zero(self):
        j = CategoricalJoint(np.outer([1, 2, 3], [4, 5]).astype(np.int64))
        assert mutual_information(j) == pytest.approx(0.0, abs=1e-12)

    def test_identity_joint(self):
        j = CategoricalJoint(np.eye(6, dtype=np.int64) * 3)
        assert mutual_information(j) == pytest.approx(math.log2(6), abs=1e-12)

    def test_equals_information_gain_on_worked_table(self):
        j = CategoricalJoint(np.array([[2, 1], [1, 2]]))
        assert abs(mutual_information(j) - information_gain(j)) < 1e-12

    @settings(max_examples=200)
    @given(joint_tables)
    def test_gain_identity_property(self, counts):
        j = CategoricalJoint(counts)
        assert abs(information_gain(j) - mutual_information(j)) < 1e-12

    @settings(max_examples=200)
    @given(joint_tables)
    def test_bounds(self, counts):
        j = CategoricalJoint(counts)
        mi = mutual_information(j)
        hx = entropy(j.value_marginal())
        hy = entropy(j.label_marginal())
        assert -1e-12 <= mi <= min(hx, hy) + 1e-12


class TestKlDivergence:
    def test_identical_is_zero(self):
        p = Distribution(np.array([0.3, 0.7]))
        assert kl_divergence(p, p) == 0.0

    def test_one_bit(self):
        p = Distribution(np.array([1.0, 0.0]))
        q = Distribution(np.array([0.5, 0.5]))
        assert kl_divergence(p, q) == pytest.approx(1.0, abs=1e-12)

    def test_support_mismatch(self):
        p = Distribution(np.array([0.5, 0.5]))
        q = Distribution(np.array([1.0, 0.0]))
        with pytest.raises(SupportMismatch):
            kl_divergence(p, q)
        with pytest.raises(SupportMismatch):
            kl_divergence(p, Distribution(np.array([0.2, 0.3, 0.5])))

    @settings(max_examples=200)
    @given(joint_tables)
    def test_mi_is_kl_to_marginal_product(self, counts):
        j = CategoricalJoint(counts)
        joint, product = joint_and_marginal_product(j)
        assert abs(mutual_information(j) - kl_divergence(joint, product)) < 1e-12


class TestMiFromClassifier:
    def test_marginal_predictor_scores_zero(self):
        labels = np.array([0] * 6 + [1] * 2)
        marginal = np.array([6 / 8, 2 / 8])
        logp = np.tile(np.log(marginal), (8, 1))
        assert mi_from_classifier(logp, labels) == pytest.approx(0.0, abs=1e-12)

    def test_perfect_classifier_scores_marginal_entropy(self):
        labels = np.array([0, 1, 1, 2])
        eps = 1e-300
        probs = np.full((4, 3), eps)
        probs[np.arange(4), labels] = 1.0 - 2 * eps
        value = mi_from_classifier(np.log(probs), labels)
        expected = entropy(Distribution(np.array([1 / 4, 2 / 4, 1 / 4])))
        assert value == pytest.approx(expected, abs=1e-9)

    def test_uniform_over_51_classes(self):
        rng = np.random.default_rng(5)
        labels = rng.integers(0, 51, size=400)
        logp = np.full((400, 51), -math.log(51))
        value = mi_from_classifier(logp, labels)
        marginal_h = entropy(Distribution(np.bincount(labels, minlength=51) / 400))
        assert value == pytest.approx(marginal_h - math.log2(51), abs=1e-9)
        assert value <= 0.0

    def test_bayes_optimal_never_beats_true_mi(self):
        # enumerable joint: the tabular Bayes predictor outputs p(y | x)
        counts = np.array([[8, 2], [3, 7], [5, 5]], dtype=np.int64)
        j = CategoricalJoint(counts)
        xs, ys = [], []
        for x in range(3):
            for y in range(2):
                xs += [x] * counts[x, y]
                ys += [y] * counts[x, y]
        cond = counts / counts.sum(axis=1, keepdims=True)
        logp = np.log(cond[np.array(xs)])
        estimate = mi_from_classifier(logp, np.array(ys))
        assert estimate <= mutual_information(j) + 1e-12

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            mi_from_classifier(np.zeros((3, 2)), np.array([0, 1]))

    def test_unnormalized_rejected(self):
        with pytest.raises(InvalidDistribution):
            mi_from_classifier(np.zeros((2, 2)), np.array([0, 1]))
