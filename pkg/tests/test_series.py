import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conjlab.errors import InvalidCoefficients, InvalidSimplexPoint, NonPositiveRho, SeriesNotConvergent, TruncationMismatch
from conjlab.models import CoefficientSeq, SimplexWeights
from conjlab.services.entropy import log_partition_bracket
from conjlab.services.series import (
    derivative_ratio,
    geometric_weights,
    gibbs_maximizer,
    log_partition,
    log_partition_exponent,
    mean_index,
    suggest_truncation,
    tail_bound,
)

POWERS_OF_TWO = CoefficientSeq([0.0, math.log(2.0), math.log(4.0)])


def _random_instance(rng):
    N = int(rng.integers(0, 81))
    c = CoefficientSeq(rng.normal(0.0, 1.5, N + 1))
    rho = float(rng.uniform(0.05, 0.95))
    return c, rho, N


# log_partition

def test_log_partition_geometric(zeros60):
    assert log_partition(zeros60, 0.5, 60) == pytest.approx(math.log(2.0), abs=1e-12)


def test_log_partition_single_term():
    assert log_partition(CoefficientSeq([1.3]), 0.7, 0) == pytest.approx(1.3, abs=1e-15)


def test_log_partition_finite_sum_at_rho_one():
    assert log_partition(POWERS_OF_TWO, 1.0, 2) == pytest.approx(math.log(7.0), abs=1e-12)


def test_log_partition_survives_extreme_exponents():
    c = CoefficientSeq([800.0, 801.0, -900.0])
    assert log_partition(c, 1.0, 2) == pytest.approx(801.0 + math.log1p(math.exp(-1.0)), abs=1e-9)


@pytest.mark.parametrize("rho", [0.0, -1.0])
def test_log_partition_rejects_nonpositive_rho(zeros60, rho):
    with pytest.raises(NonPositiveRho):
        log_partition(zeros60, rho, 10)


def test_log_partition_rejects_truncation_beyond_storage():
    with pytest.raises(TruncationMismatch):
        log_partition(CoefficientSeq.zeros(5), 0.5, 6)


def test_coefficients_must_be_finite():
    with pytest.raises(InvalidCoefficients):
        CoefficientSeq([0.0, math.inf])


# gibbs_maximizer / mean_index

def test_gibbs_maximizer_geometric(zeros60):
    t = gibbs_maximizer(zeros60, 0.5, 60)
    assert t.weights[0] == pytest.approx(0.5, abs=1e-15)
    assert t.weights[1] == pytest.approx(0.25, abs=1e-15)
    assert math.fsum(t.weights) == pytest.approx(1.0, abs=1e-14)


def test_gibbs_maximizer_single_outcome():
    assert_allclose(gibbs_maximizer(CoefficientSeq([3.0]), 0.2, 0).weights, [1.0])


def test_gibbs_maximizer_powers_of_two():
    assert_allclose(gibbs_maximizer(POWERS_OF_TWO, 1.0, 2).weights, [1 / 7, 2 / 7, 4 / 7], atol=1e-15)


def test_mean_index_examples(geometric_half):
    assert mean_index(geometric_half) == pytest.approx(1.0, abs=1e-12)
    assert mean_index(SimplexWeights.point_mass(0, 4)) == 0.0
    assert mean_index(SimplexWeights([1 / 7, 2 / 7, 4 / 7])) == pytest.approx(10 / 7, abs=1e-15)


def test_simplex_weights_validation():
    with pytest.raises(InvalidSimplexPoint):
        SimplexWeights([0.6, 0.6])
    with pytest.raises(InvalidSimplexPoint):
        SimplexWeights([1.2, -0.2])


@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
def test_geometric_identity(r):
    N = suggest_truncation(CoefficientSeq.zeros(0), r)
    c = CoefficientSeq.zeros(N)
    assert log_partition(c, r, N) == pytest.approx(-math.log1p(-r), abs=1e-9)
    expected = (1 - r) * r ** np.arange(N + 1)
    assert_allclose(gibbs_maximizer(c, r, N).weights, expected, rtol=0, atol=1e-12)


# Properties

def test_variational_identity_at_maximizer(rng):
    for _ in range(50):
        c, rho, N = _random_instance(rng)
        t = gibbs_maximizer(c, rho, N)
        assert log_partition_bracket(c, rho, t) == pytest.approx(log_partition(c, rho, N), abs=1e-10)


def test_maximizer_dominates_random_points(rng):
    for _ in range(5):
        c, rho, N = _random_instance(rng)
        best = log_partition(c, rho, N)
        for _ in range(100):
            t = SimplexWeights.normalized(rng.dirichlet(np.ones(N + 1)))
            assert log_partition_bracket(c, rho, t) <= best + 1e-12


def test_shift_covariance(rng):
    for _ in range(20):
        c, rho, N = _random_instance(rng)
        s = float(rng.uniform(-5, 5))
        assert log_partition(c.shifted(s), rho, N) == pytest.approx(log_partition(c, rho, N) + s, abs=1e-12)


def test_convex_in_coefficients_and_log_rho(rng):
    for _ in range(50):
        N = int(rng.integers(1, 40))
        c1, c2 = rng.normal(size=N + 1), rng.normal(size=N + 1)
        l1, l2 = rng.uniform(-3.0, 0.5, size=2)
        mid = log_partition_exponent(CoefficientSeq(0.5 * (c1 + c2)), 0.5 * (l1 + l2), N)
        ends = 0.5 * (log_partition_exponent(CoefficientSeq(c1), l1, N)
                      + log_partition_exponent(CoefficientSeq(c2), l2, N))
        assert mid <= ends + 1e-12


def test_mean_index_matches_derivative_ratio(rng):
    for _ in range(50):
        c, rho, N = _random_instance(rng)
        assert mean_index(gibbs_maximizer(c, rho, N)) == pytest.approx(derivative_ratio(c, rho, N), abs=1e-10)


# Truncation helpers

@pytest.mark.parametrize("rho", [0.1, 0.5, 0.9, 0.99])
def test_suggest_truncation_is_smallest_certified_N(rho):
    c = CoefficientSeq([0.5, -1.0, 2.0])
    N = suggest_truncation(c, rho, 1e-12)
    assert tail_bound(c, rho, N) <= 1e-12 * (1 + 1e-9)
    if N > 0:
        assert tail_bound(c, rho, N - 1) > 1e-12


def test_truncation_needs_convergent_series():
    with pytest.raises(SeriesNotConvergent):
        suggest_truncation(CoefficientSeq.zeros(3), 1.0)
    with pytest.raises(SeriesNotConvergent):
        tail_bound(CoefficientSeq.zeros(3), 1.5, 3)


def test_geometric_weights_are_gibbs_weights_of_zero_sequence():
    assert_allclose(geometric_weights(0.25, 5).weights,
                    gibbs_maximizer(CoefficientSeq.zeros(5), 0.25, 5).weights, atol=0)
