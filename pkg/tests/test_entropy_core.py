import itertools
import math

import numpy as np
import pytest

from emsense.entropy_core import (
    check_bounds,
    empirical_rip_deltas,
    mutual_coherence,
    prob_distribution,
    shannon_entropy,
    spark_bruteforce,
)
from emsense.errors import InvalidShape, TooLarge, ZeroColumn, ZeroVector

# frozen oracle values (50-digit evaluation of the defining formulas)
H_21 = 0.50040242353818787953  # -(0.8 ln 0.8 + 0.2 ln 0.2)
H_C_31 = 0.32508297339144823951  # -(0.9 ln 0.9 + 0.1 ln 0.1)
H_Y_1110_5 = 1.2852930241200992417  # y = [1, 1, 1, 0.5]


class TestProbDistribution:
    def test_one_hot(self):
        np.testing.assert_allclose(
            prob_distribution([1, 0, 0, 0]).p, [1, 0, 0, 0], atol=0
        )

    def test_equal_magnitudes(self):
        np.testing.assert_allclose(
            prob_distribution([1, 1, 1, 1]).p, [0.25] * 4, rtol=1e-15
        )

    def test_two_to_one(self):
        np.testing.assert_allclose(
            prob_distribution([2, 1]).p, [0.8, 0.2], rtol=1e-15
        )

    def test_zero_vector_raises(self):
        with pytest.raises(ZeroVector):
            prob_distribution([0.0, 0.0])
        with pytest.raises(ZeroVector):
            prob_distribution([1e-16, 0.0])

    def test_sums_to_one_fuzz(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            v = rng.standard_normal(rng.integers(1, 40)) * 10.0 ** rng.integers(-6, 7)
            assert abs(prob_distribution(v).p.sum() - 1.0) < 1e-12

    def test_sign_irrelevant(self):
        np.testing.assert_array_equal(
            prob_distribution([2, -1]).p, prob_distribution([2, 1]).p
        )


class TestShannonEntropy:
    def test_one_hot_is_zero(self):
        rep = shannon_entropy([5, 0, 0])
        assert rep.entropy == 0.0
        assert rep.theoretical_dimension == 1
        assert rep.vector_length == 3

    def test_uniform_attains_ln_n(self):
        rep = shannon_entropy([1, 1, 1, 1])
        assert abs(rep.entropy - math.log(4)) < 1e-12
        assert rep.theoretical_dimension == 4

    def test_frozen_two_to_one(self):
        rep = shannon_entropy([2, 1])
        assert abs(rep.entropy - H_21) < 1e-14
        assert rep.theoretical_dimension == 2

    def test_zero_vector_raises(self):
        with pytest.raises(ZeroVector):
            shannon_entropy(np.zeros(5))

    def test_bounds_fuzz(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            n = int(rng.integers(1, 30))
            v = rng.standard_normal(n)
            if np.linalg.norm(v) < 1e-8:
                continue
            rep = shannon_entropy(v)
            assert 0.0 <= rep.entropy <= math.log(n) + 1e-12
            assert 1 <= rep.theoretical_dimension <= n

    def test_scale_invariance(self):
        rng = np.random.default_rng(13)
        v = rng.standard_normal(17)
        h = shannon_entropy(v).entropy
        for beta in (1e-6, -3.5, 2.0, 1e8):
            assert abs(shannon_entropy(beta * v).entropy - h) < 1e-12

    def test_uniform_dimension_exact_for_all_n(self):
        for n in range(2, 40):
            rep = shannon_entropy(np.ones(n))
            assert rep.theoretical_dimension == n

    def test_strictly_between_for_mixed(self):
        rep = shannon_entropy([3, 1, 1])
        assert 0.0 < rep.entropy < math.log(3)


class TestCheckBounds:
    def test_sparse_c_uniform_y(self):
        c = np.zeros(8)
        c[0] = 1.0
        res = check_bounds(c, np.ones(4))
        assert res.h_c == 0.0
        assert res.k_est == 1
        assert abs(res.h_y - math.log(4)) < 1e-12
        assert res.meff == 4
        assert res.lemma1_pass
        assert res.meff_cond_pass

    def test_degenerate_single_measurement(self):
        # H(y) = 0 signals incomplete measurements
        res = check_bounds(np.ones(8), [1, 0, 0, 0])
        assert res.h_y == 0.0
        assert res.k_est == 8
        assert not res.lemma1_pass

    def test_frozen_compressible_case(self):
        c = np.zeros(8)
        c[0], c[1] = 3.0, 1.0
        res = check_bounds(c, [1, 1, 1, 0.5])
        assert abs(res.h_c - H_C_31) < 1e-14
        assert abs(res.h_y - H_Y_1110_5) < 1e-14
        assert res.k_est == 2
        assert res.meff == 4
        assert res.m == 4
        assert res.lemma1_pass
        assert res.meff_cond_pass  # 4 >= 2*2

    def test_never_raises_on_violation(self):
        res = check_bounds(np.ones(4), np.ones(2))  # k_est 4 > m 2
        assert not res.lemma1_pass

    def test_zero_inputs_raise(self):
        with pytest.raises(ZeroVector):
            check_bounds(np.zeros(4), np.ones(2))
        with pytest.raises(ZeroVector):
            check_bounds(np.ones(4), np.zeros(2))


class TestMutualCoherence:
    def test_identity(self):
        assert mutual_coherence(np.eye(3)) == 0.0

    def test_parallel_columns(self):
        assert mutual_coherence(np.array([[1.0, 1.0], [0.0, 0.0]])) == 1.0

    def test_frozen_three_column(self):
        a = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        assert abs(mutual_coherence(a) - 1.0 / math.sqrt(2)) < 1e-14

    def test_zero_column(self):
        with pytest.raises(ZeroColumn):
            mutual_coherence(np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_needs_two_columns(self):
        with pytest.raises(InvalidShape):
            mutual_coherence(np.ones((3, 1)))

    def test_permutation_and_scaling_invariance(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((4, 6))
        mu = mutual_coherence(a)
        perm = rng.permutation(6)
        scales = rng.uniform(0.1, 10.0, 6) * rng.choice([-1.0, 1.0], 6)
        assert mutual_coherence(a[:, perm] * scales) == pytest.approx(mu, abs=1e-12)

    def test_in_unit_interval_fuzz(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            a = rng.standard_normal((3, 5))
            assert 0.0 <= mutual_coherence(a) <= 1.0


def _rank_by_qr(sub, tol=1e-10):
    # independent rank oracle: column norms of successive QR rejections
    _, r = np.linalg.qr(sub)
    d = np.abs(np.diag(r))
    if d.max() == 0.0:
        return 0
    return int(np.sum(d > tol * d.max()))


class TestSparkBruteforce:
    def test_identity_full_spark(self):
        assert spark_bruteforce(np.eye(3)) == 4  # M + 1

    def test_duplicated_column(self):
        a = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        assert spark_bruteforce(a) == 2

    def test_seeded_gaussian_generic(self):
        rng = np.random.default_rng(123)
        a = rng.standard_normal((3, 6))
        assert spark_bruteforce(a) == 4

    def test_too_large(self):
        with pytest.raises(TooLarge):
            spark_bruteforce(np.ones((2, 15)))

    def test_against_independent_rank_method(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            a = rng.standard_normal((3, 6))
            if rng.random() < 0.5:
                a[:, 4] = 2.0 * a[:, 1]  # plant a dependence
            spark = spark_bruteforce(a)
            smallest = None
            for k in range(2, min(6, 4) + 1):
                for cols in itertools.combinations(range(6), k):
                    if _rank_by_qr(a[:, cols]) < k:
                        smallest = k
                        break
                if smallest:
                    break
            assert spark == (smallest if smallest else 4)


class TestEmpiricalRipDeltas:
    def test_orthonormal_rows_on_spanned_support(self):
        # A = [I | 0]: exact isometry for coefficients supported in the range
        a = np.hstack([np.eye(3), np.zeros((3, 2))])
        c = np.zeros((5, 2))
        c[0, 0], c[1, 1] = 2.0, -1.5
        np.testing.assert_allclose(empirical_rip_deltas(a, c), [0.0, 0.0], atol=1e-15)

    def test_zero_matrix(self):
        a = np.zeros((3, 4))
        c = np.eye(4)
        np.testing.assert_allclose(empirical_rip_deltas(a, c), np.ones(4))

    def test_one_hot_columns_give_column_norm_defect(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((4, 6))
        c = np.eye(6)
        expected = np.abs(np.sum(a * a, axis=0) - 1.0)
        np.testing.assert_allclose(empirical_rip_deltas(a, c), expected, rtol=1e-12)

    def test_zero_column_raises(self):
        with pytest.raises(ZeroColumn):
            empirical_rip_deltas(np.eye(2), np.array([[1.0, 0.0], [0.0, 0.0]]))
